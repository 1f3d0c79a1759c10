#include <gtest/gtest.h>

#include "bident/error.hpp"
#include "bident/tokenizer.hpp"

using namespace bident;

TEST(Tokenizer, Fnv1aReferenceVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Tokenizer, ParsesIdAndRejectsOthers) {
  auto tok = PairTokenizer::from_id("whitespace-hash:1000");
  EXPECT_EQ(tok.vocab_size(), 1000);
  EXPECT_THROW(PairTokenizer::from_id("bert-base-uncased"), ConfigError);
  EXPECT_THROW(PairTokenizer::from_id("whitespace-hash:3"), ConfigError);
  EXPECT_THROW(PairTokenizer::from_id("whitespace-hash:12x"), ConfigError);
}

TEST(Tokenizer, LayoutWithSegmentsAndPadding) {
  auto tok = PairTokenizer::from_id("whitespace-hash:50");
  auto e = tok.encode({"a b", "c"}, 8);
  const auto a = 3 + static_cast<std::int64_t>(fnv1a64("a") % 47);
  const auto b = 3 + static_cast<std::int64_t>(fnv1a64("b") % 47);
  const auto c = 3 + static_cast<std::int64_t>(fnv1a64("c") % 47);
  EXPECT_EQ(e.input_ids, (std::vector<std::int64_t>{1, a, b, 2, c, 2, 0, 0}));
  EXPECT_EQ(e.token_type_ids, (std::vector<std::int64_t>{0, 0, 0, 0, 1, 1, 0, 0}));
  EXPECT_EQ(e.attention_mask, (std::vector<std::int64_t>{1, 1, 1, 1, 1, 1, 0, 0}));
  EXPECT_FALSE(e.truncated);
}

TEST(Tokenizer, LongestFirstTruncation) {
  auto tok = PairTokenizer::from_id("whitespace-hash:50");
  // 5 + 2 tokens into 3 + 4 slots: the first segment shrinks until it is no longer longer.
  auto e = tok.encode({"a b c d e", "x y"}, 7);
  EXPECT_TRUE(e.truncated);
  EXPECT_EQ(e.input_ids.size(), 7u);
  EXPECT_EQ(e.input_ids[3], PairTokenizer::kSep);
  EXPECT_EQ(e.input_ids[4], tok.token_id("x"));
  // Equal lengths: the second segment gives way.
  auto f = tok.encode({"a b", "c d"}, 6);
  EXPECT_EQ(f.input_ids, (std::vector<std::int64_t>{1, tok.token_id("a"), tok.token_id("b"), 2, tok.token_id("c"), 2}));
  EXPECT_THROW(tok.encode({"a", "b"}, 2), ConfigError);
}
