// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace zett;

TEST_CASE("tokenize splits leading and trailing punctuation", "[tokenizer]") {
  CHECK(tokenize("Spansion, California.") ==
        std::vector<std::string>{"Spansion", ",", "California", "."});
  CHECK(tokenize("(Jam)") == std::vector<std::string>{"(", "Jam", ")"});
  CHECK(tokenize("U.S. co-founded") == std::vector<std::string>{"U.S", ".", "co-founded"});
  CHECK(tokenize("...") == std::vector<std::string>{".", ".", "."});
  CHECK(tokenize("  a \t b\n") == std::vector<std::string>{"a", "b"});
  CHECK(tokenize("").empty());
}

TEST_CASE("tokenize keeps sentinel literals whole", "[tokenizer]") {
  CHECK(tokenize("<X> a <Y> b <Z>") == std::vector<std::string>{"<X>", "a", "<Y>", "b", "<Z>"});
  CHECK(tokenize("<X>Jam<Y>") == std::vector<std::string>{"<X>", "Jam", "<Y>"});
}

TEST_CASE("build_vocab orders by frequency then text", "[tokenizer]") {
  const std::vector<std::string> corpus = {"a b", "a"};
  const auto v = build_vocab(corpus, 1);
  REQUIRE(v.size() == 8);
  CHECK(v.id("a") == 6);
  CHECK(v.id("b") == 7);
  for (TokenId i = 0; i < tok::kNumReserved; ++i) CHECK(v.token(i) == tok::kReservedText[i]);

  const auto v2 = build_vocab(std::vector<std::string>{"c b a", "b"}, 1);
  CHECK(v2.corpus_tokens() == std::vector<std::string>{"b", "a", "c"});
}

TEST_CASE("build_vocab on an empty corpus has only reserved tokens", "[tokenizer]") {
  const auto v = build_vocab(std::vector<std::string>{}, 1);
  CHECK(v.size() == 6);
  CHECK(v.corpus_tokens().empty());
}

TEST_CASE("build_vocab applies min_count and rejects min_count < 1", "[tokenizer]") {
  const auto v = build_vocab(std::vector<std::string>{"a a b"}, 2);
  CHECK(v.contains("a"));
  CHECK_FALSE(v.contains("b"));
  CHECK(encode("b", v) == std::vector<TokenId>{tok::kUnk});
  CHECK_THROWS_AS(build_vocab(std::vector<std::string>{"a"}, 0), DataError);
}

TEST_CASE("build_vocab is deterministic and never counts sentinels", "[tokenizer]") {
  const std::vector<std::string> corpus = {"x <X> y", "<Y> y z <Z>"};
  const auto a = build_vocab(corpus, 1);
  const auto b = build_vocab(corpus, 1);
  CHECK(a == b);
  CHECK(a.hash() == b.hash());
  CHECK(a.corpus_tokens() == std::vector<std::string>{"y", "x", "z"});
}

TEST_CASE("encode maps sentinels, OOV and the empty string", "[tokenizer]") {
  const auto v = build_vocab(std::vector<std::string>{"a b"}, 1);
  CHECK(encode("<X> a <Y> b <Z>", v) ==
        std::vector<TokenId>{tok::kMask1, v.id("a"), tok::kMask2, v.id("b"), tok::kEnd});
  CHECK(encode("a zzz", v) == std::vector<TokenId>{v.id("a"), tok::kUnk});
  CHECK(encode("", v).empty());
}

TEST_CASE("decode joins with single spaces and renders reserved tokens", "[tokenizer]") {
  const auto v = build_vocab(std::vector<std::string>{"a b x"}, 1);
  CHECK(decode(encode("a b", v), v) == "a b");
  CHECK(decode(std::vector<TokenId>{}, v).empty());
  CHECK(decode(std::vector<TokenId>{tok::kMask1, v.id("x"), tok::kEnd}, v) == "<X> x <Z>");
  CHECK_THROWS_AS(decode(std::vector<TokenId>{99}, v), DataError);
  CHECK_THROWS_AS(decode(std::vector<TokenId>{-1}, v), DataError);
}

TEST_CASE("decode(encode(s)) equals the normalized text for in-vocabulary strings",
          "[tokenizer][property]") {
  const std::vector<std::string> words = {"Jimmy", "Jam,", "(son)", "of", "Harris.", "<X>", "<Y>", "a"};
  SplitMix64 rng(7);
  std::vector<std::string> texts;
  for (int i = 0; i < 200; ++i) {
    std::string s;
    const auto n = rng.below(8);
    for (std::uint64_t k = 0; k < n; ++k) {
      s += rng.below(3) == 0 ? "  " : " ";
      s += words[rng.below(words.size())];
    }
    texts.push_back(s);
  }
  const auto v = build_vocab(texts, 1);
  for (const auto& s : texts) {
    const auto ids = encode(s, v);
    CHECK(decode(ids, v) == join(tokenize(s)));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto t = tokenize(s)[i];
      if (!tok::is_sentinel_text(t)) CHECK(ids[i] >= tok::kNumReserved);
    }
  }
}

TEST_CASE("vocabulary file round-trips", "[tokenizer]") {
  const auto dir = testing::scratch_dir("tokenizer");
  const auto v = build_vocab(std::vector<std::string>{"c b a", "b"}, 1);
  v.save(dir + "/vocab.json");
  const auto back = Vocabulary::load(dir + "/vocab.json");
  CHECK(back == v);
  const auto j = nlohmann::json::parse(read_file(dir + "/vocab.json"));
  CHECK(j.at("tokens") == nlohmann::json({"b", "a", "c"}));
  CHECK(j.at("min_count") == 1);
}
