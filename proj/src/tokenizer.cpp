#include "bident/tokenizer.hpp"

#include <charconv>

#include "bident/error.hpp"
#include "bident/text.hpp"

namespace bident {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

PairTokenizer PairTokenizer::from_id(std::string_view tokenizer_id) {
  constexpr std::string_view prefix = "whitespace-hash:";
  if (tokenizer_id.substr(0, prefix.size()) != prefix) {
    throw ConfigError("unsupported tokenizer '" + std::string(tokenizer_id) + "' (expected whitespace-hash:N)");
  }
  auto digits = tokenizer_id.substr(prefix.size());
  std::int64_t n = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || n < 4) {
    throw ConfigError("tokenizer '" + std::string(tokenizer_id) + "' needs a vocabulary size of at least 4");
  }
  return PairTokenizer(std::string(tokenizer_id), n);
}

std::int64_t PairTokenizer::token_id(std::string_view token) const {
  return 3 + static_cast<std::int64_t>(fnv1a64(token) % static_cast<std::uint64_t>(vocab_size_ - 3));
}

EncodedPair PairTokenizer::encode(const SequencePair& pair, std::size_t max_length) const {
  if (max_length < 3) throw ConfigError("maximum sequence length must be at least 3");
  auto first = text::whitespace_tokens(pair.s1);
  auto second = text::whitespace_tokens(pair.s2);

  EncodedPair out;
  while (3 + first.size() + second.size() > max_length) {
    out.truncated = true;
    if (first.size() > second.size()) {
      first.pop_back();
    } else {
      second.pop_back();
    }
  }

  out.input_ids.reserve(max_length);
  out.input_ids.push_back(kCls);
  for (auto t : first) out.input_ids.push_back(token_id(t));
  out.input_ids.push_back(kSep);
  const std::size_t first_segment = out.input_ids.size();
  for (auto t : second) out.input_ids.push_back(token_id(t));
  out.input_ids.push_back(kSep);
  const std::size_t used = out.input_ids.size();

  out.token_type_ids.assign(max_length, 0);
  out.attention_mask.assign(max_length, 0);
  for (std::size_t i = first_segment; i < used; ++i) out.token_type_ids[i] = 1;
  for (std::size_t i = 0; i < used; ++i) out.attention_mask[i] = 1;
  out.input_ids.resize(max_length, kPad);
  return out;
}

}  // namespace bident
