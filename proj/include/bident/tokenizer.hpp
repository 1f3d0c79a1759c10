#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bident/labels.hpp"

namespace bident {

struct EncodedPair {
  std::vector<std::int64_t> input_ids;
  std::vector<std::int64_t> token_type_ids;
  std::vector<std::int64_t> attention_mask;
  bool truncated = false;
};

// Sequence-pair tokenizer named by the model sidecar's tokenizer id.
//
// "whitespace-hash:N" splits on whitespace and maps each token to
// 3 + fnv1a64(token) mod (N - 3); ids 0, 1 and 2 are [PAD], [CLS] and [SEP].
// Pairs are laid out as [CLS] s1 [SEP] s2 [SEP], truncated longest-first, and
// padded to the maximum sequence length.
class PairTokenizer {
 public:
  static PairTokenizer from_id(std::string_view tokenizer_id);

  EncodedPair encode(const SequencePair& pair, std::size_t max_length) const;

  const std::string& id() const { return id_; }
  std::int64_t vocab_size() const { return vocab_size_; }
  std::int64_t token_id(std::string_view token) const;

  static constexpr std::int64_t kPad = 0;
  static constexpr std::int64_t kCls = 1;
  static constexpr std::int64_t kSep = 2;

 private:
  PairTokenizer(std::string id, std::int64_t vocab_size) : id_(std::move(id)), vocab_size_(vocab_size) {}

  std::string id_;
  std::int64_t vocab_size_;
};

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace bident
