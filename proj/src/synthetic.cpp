#include "adaptmt/synthetic.hpp"

#include <random>
#include <set>

#include "adaptmt/error.hpp"

namespace adaptmt {

namespace {

class WordMaker {
 public:
  WordMaker(std::uint64_t seed, std::string consonants, std::string vowels)
      : rng_(seed), consonants_(std::move(consonants)), vowels_(std::move(vowels)) {}

  std::string make(int syllables) {
    for (;;) {
      std::string w;
      for (int s = 0; s < syllables; ++s) {
        w += consonants_[pick(consonants_.size())];
        w += vowels_[pick(vowels_.size())];
      }
      if (rng_() % 3 == 0) w += consonants_[pick(consonants_.size())];
      if (used_.insert(w).second) return w;
    }
  }

 private:
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

  std::mt19937_64 rng_;
  std::string consonants_, vowels_;
  std::set<std::string> used_;
};

struct Lexicon {
  std::vector<std::pair<std::string, std::string>> determiners, nouns, adjectives, verbs, prepositions;
};

}  // namespace

ToyTask make_toy_task(const ToyTaskOptions& o) {
  if (o.terms == 0 || o.terms > o.nouns) throw ValidationError("terms must be in [1, nouns]");
  if (o.domain_sense_rate < 0.0 || o.domain_sense_rate > 1.0) throw ValidationError("domain_sense_rate must be in [0, 1]");
  if (o.general_pairs < 1 || o.test_sentences < 1) throw ValidationError("toy corpora must be non-empty");

  WordMaker src_words(o.seed * 2 + 1, "bdfgklmnprstvz", "aeiou");
  WordMaker tgt_words(o.seed * 2 + 2, "bcdjlmnprstvy", "aeiou");
  Lexicon lex;
  auto fill = [&](auto& list, std::size_t n, int syl_src, int syl_tgt) {
    for (std::size_t i = 0; i < n; ++i) list.emplace_back(src_words.make(syl_src), tgt_words.make(syl_tgt));
  };
  fill(lex.determiners, 3, 1, 1);
  fill(lex.nouns, o.nouns, 2, 2);
  fill(lex.adjectives, o.adjectives, 2, 3);
  fill(lex.verbs, o.verbs, 2, 3);
  fill(lex.prepositions, 4, 1, 1);

  ToyTask task;
  // Terms are the last `terms` nouns.
  std::vector<std::string> domain_translation(o.nouns);
  for (std::size_t k = o.nouns - o.terms; k < o.nouns; ++k) {
    domain_translation[k] = tgt_words.make(2);
    task.terminology.emplace_back(lex.nouns[k].first, lex.nouns[k].second, domain_translation[k]);
  }

  std::mt19937_64 rng(o.seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto chance = [&](double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; };

  // noun phrase: DET [ADJ] NOUN  ->  DET NOUN [ADJ]
  auto noun_phrase = [&](Tokens& s, Tokens& t, bool in_domain) {
    const auto& det = lex.determiners[pick(lex.determiners.size())];
    std::size_t noun;
    if (in_domain && chance(o.term_rate)) {
      noun = o.nouns - o.terms + pick(o.terms);
    } else {
      noun = pick(o.nouns - (in_domain ? o.terms : 0));
    }
    const bool term = noun >= o.nouns - o.terms;
    const bool domain_sense = term && (in_domain || chance(o.domain_sense_rate));
    const std::string& noun_tgt = domain_sense ? domain_translation[noun] : lex.nouns[noun].second;
    s.push_back(det.first);
    t.push_back(det.second);
    if (chance(0.4)) {
      const auto& adj = lex.adjectives[pick(lex.adjectives.size())];
      s.push_back(adj.first);
      s.push_back(lex.nouns[noun].first);
      t.push_back(noun_tgt);
      t.push_back(adj.second);
    } else {
      s.push_back(lex.nouns[noun].first);
      t.push_back(noun_tgt);
    }
  };
  auto sentence = [&](bool in_domain) {
    SentencePair p;
    noun_phrase(p.source, p.target, in_domain);
    const auto& verb = lex.verbs[pick(lex.verbs.size())];
    p.source.push_back(verb.first);
    p.target.push_back(verb.second);
    noun_phrase(p.source, p.target, in_domain);
    if (chance(0.3)) {
      const auto& prep = lex.prepositions[pick(lex.prepositions.size())];
      p.source.push_back(prep.first);
      p.target.push_back(prep.second);
      noun_phrase(p.source, p.target, in_domain);
    }
    return p;
  };

  std::vector<SentencePair> general, dev, test;
  for (std::size_t i = 0; i < o.general_pairs; ++i) general.push_back(sentence(false));
  for (std::size_t i = 0; i < o.dev_pairs; ++i) dev.push_back(sentence(false));
  for (std::size_t i = 0; i < o.test_sentences; ++i) test.push_back(sentence(true));
  task.general = ParallelCorpus(std::move(general), "toy-general");
  task.dev = ParallelCorpus(std::move(dev), "toy-dev");
  task.in_domain_test = ParallelCorpus(std::move(test), "toy-in-domain");
  return task;
}

}  // namespace adaptmt
