#include <random>

#include "adaptmt/bpe.hpp"
#include "adaptmt/error.hpp"
#include "adaptmt/vocab.hpp"
#include "doctest.h"

using namespace adaptmt;

TEST_CASE("learning") {
  const std::vector<Tokens> aaab{{"aaab", "aaab"}};
  const auto one = bpe_learn(aaab, 1);
  REQUIRE(one.merges().size() == 1);
  CHECK(one.merges()[0] == std::pair<std::string, std::string>{"a", "a"});

  const auto none = bpe_learn(aaab, 0);
  CHECK(none.apply({"aaab"}) == Subwords{"a", "a", "a", "b</w>"});

  const std::vector<Tokens> single{{"x"}, {"x"}, {"x"}};
  CHECK(bpe_learn(single, 10).merges().empty());

  const std::vector<Tokens> corpus{{"low", "lower", "lowest"}, {"low", "newer", "wider"}};
  CHECK(bpe_learn(corpus, 20).merges() == bpe_learn(corpus, 20).merges());
  const auto rich = bpe_learn(corpus, 50);
  CHECK(rich.apply({"low"}) == Subwords{"low</w>"});
}

TEST_CASE("merges replay in order") {
  using Merges = std::vector<std::pair<std::string, std::string>>;
  const BpeModel m(Merges{{"a", "a"}, {"aa", "b</w>"}});
  CHECK(m.apply({"aab"}) == Subwords{"aab</w>"});
  // The final "b" carries the end-of-word marker, so ("aa", "b") never fires.
  const BpeModel n(Merges{{"a", "a"}, {"aa", "b"}});
  CHECK(n.apply({"aab"}) == Subwords{"aa", "b</w>"});
  CHECK(n.apply({}).empty());
}

TEST_CASE("revert undoes apply") {
  CHECK(bpe_revert({}).empty());
  const std::vector<Tokens> corpus{{"the", "cat", "sat"}, {"the", "hat", "\xC3\xA9t\xC3\xA9"}};
  const auto m = bpe_learn(corpus, 12);
  std::mt19937_64 rng(4);
  const std::vector<std::string> alphabet{"t", "h", "e", "a", "q", "\xC3\xA9", "\xE2\x82\xAC", "z"};
  for (int trial = 0; trial < 300; ++trial) {
    Tokens sentence;
    for (std::size_t w = rng() % 6; w > 0; --w) {
      std::string word;
      for (std::size_t c = 1 + rng() % 6; c > 0; --c) word += alphabet[rng() % alphabet.size()];
      sentence.push_back(word);
    }
    const auto sub = bpe_apply(m, sentence);
    CHECK(bpe_revert(sub) == sentence);
    for (const auto& s : sub) {
      const bool known = m.vocab().count(s) > 0;
      const std::string bare = s.size() > 4 && s.ends_with("</w>") ? s.substr(0, s.size() - 4) : s;
      CHECK((known || utf8_chars(bare).size() == 1));
    }
  }
}

TEST_CASE("serialization") {
  const std::vector<Tokens> corpus{{"banana", "bandana"}, {"cabana"}};
  const auto m = bpe_learn(corpus, 6);
  const auto back = BpeModel::parse(m.serialize());
  CHECK(back.merges() == m.merges());
  CHECK(back.vocab() == m.vocab());
  CHECK(back.hash() == m.hash());
  CHECK(bpe_learn(corpus, 2).hash() != bpe_learn(corpus, 3).hash());
  CHECK_THROWS_AS(BpeModel::parse("not a bpe file\n"), ValidationError);
}

TEST_CASE("vocabulary") {
  const BpeModel m(std::vector<std::pair<std::string, std::string>>{{"a", "b"}}, {"a", "b", "c</w>"});
  const auto v = Vocabulary::from_bpe(m);
  CHECK(v.symbol(kPadId) == "<pad>");
  CHECK(v.symbol(kEosId) == "</s>");
  CHECK(v.id("ab") != kUnkId);
  CHECK(v.id("zzz") == kUnkId);
  const auto ids = v.encode({"ab", "c</w>"});
  IdSequence framed{kBosId};
  framed.insert(framed.end(), ids.begin(), ids.end());
  framed.push_back(kEosId);
  CHECK(v.decode(framed) == Subwords{"ab", "c</w>"});
  CHECK_THROWS_AS(v.symbol(static_cast<TokenId>(v.size())), VocabularyError);
}

TEST_CASE("made-up word audit") {
  const std::vector<Tokens> targets{{"the", "house"}, {"a", "garden"}};
  const NovelWordAudit audit(targets);
  CHECK(audit.novel_words({"the", "hou", "garden", "sesa"}) == std::vector<std::string>{"hou", "sesa"});
  CHECK(NovelWordAudit::from_word_list(audit.known_words_sorted()).novel_words({"a", "b"}) ==
        std::vector<std::string>{"b"});
}
