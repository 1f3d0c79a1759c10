#include "bident/diagnostics.hpp"

namespace bident {

void Diagnostics::emit(std::string_view event, const nlohmann::ordered_json& fields) {
  if (!out_) return;
  nlohmann::ordered_json line;
  line["event"] = event;
  for (const auto& [key, value] : fields.items()) line[key] = value;
  std::lock_guard lock(mutex_);
  *out_ << line.dump() << '\n';
}

Diagnostics& Diagnostics::null() {
  static Diagnostics sink;
  return sink;
}

}  // namespace bident
