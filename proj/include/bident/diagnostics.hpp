#pragma once

#include <mutex>
#include <ostream>
#include <string_view>

#include <nlohmann/json.hpp>

namespace bident {

// Structured diagnostics: one JSON object per line, {"event": ..., fields...}.
// A default-constructed sink discards everything.
class Diagnostics {
 public:
  Diagnostics() = default;
  explicit Diagnostics(std::ostream& out) : out_(&out) {}

  void emit(std::string_view event, const nlohmann::ordered_json& fields = nlohmann::ordered_json::object());

  static Diagnostics& null();

 private:
  std::ostream* out_ = nullptr;
  std::mutex mutex_;
};

}  // namespace bident
