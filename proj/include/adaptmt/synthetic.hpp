#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adaptmt/corpus.hpp"

namespace adaptmt {

// A generated language pair for desk-scale experiments. The target language
// moves adjectives after their noun and translates word-for-word otherwise.
// The in-domain document is dense in a handful of terminology nouns. Each has
// a general translation and a rarer domain translation; the in-domain
// document always uses the domain one, so a static system keeps picking the
// general sense while an adaptive one can pick the domain sense up from
// post-edits.
struct ToyTaskOptions {
  std::size_t general_pairs = 2000;
  std::size_t dev_pairs = 100;
  std::size_t test_sentences = 150;
  std::size_t nouns = 60;
  std::size_t adjectives = 20;
  std::size_t verbs = 25;
  std::size_t terms = 8;
  // Probability that a noun slot of an in-domain sentence holds a term.
  double term_rate = 0.6;
  // Probability that a term in the general corpus takes its domain translation.
  double domain_sense_rate = 0.15;
  std::uint64_t seed = 1;
};

struct ToyTask {
  ParallelCorpus general;
  ParallelCorpus dev;
  ParallelCorpus in_domain_test;
  // (source term, general translation, domain translation)
  std::vector<std::tuple<std::string, std::string, std::string>> terminology;
};

ToyTask make_toy_task(const ToyTaskOptions& options = {});

}  // namespace adaptmt
