#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adaptmt/text.hpp"

namespace adaptmt {

struct SentencePair {
  Tokens source;
  Tokens target;

  bool operator==(const SentencePair&) const = default;
};

// An ordered list of sentence pairs. Construction validates that no side is
// empty; after that the value is never mutated.
class ParallelCorpus {
 public:
  ParallelCorpus() = default;
  ParallelCorpus(std::vector<SentencePair> pairs, std::string name = {});

  const std::vector<SentencePair>& pairs() const { return pairs_; }
  const std::string& name() const { return name_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const SentencePair& operator[](std::size_t i) const { return pairs_[i]; }

  std::vector<Tokens> sources() const;
  std::vector<Tokens> targets() const;

  // Concatenates `times` copies of the corpus.
  ParallelCorpus repeated(std::size_t times) const;

 private:
  std::vector<SentencePair> pairs_;
  std::string name_;
};

// Reads one sentence per line from two UTF-8 files. Throws AlignmentError on a
// line-count mismatch, EncodingError on malformed UTF-8 and ValidationError on
// an empty side.
ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path);

void save_parallel(const ParallelCorpus& corpus, const std::filesystem::path& source_path,
                   const std::filesystem::path& target_path);

// Reads a monolingual file (one sentence per line). Empty lines are kept.
std::vector<Tokens> load_lines(const std::filesystem::path& path);

struct SplitFractions {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct CorpusSplit {
  ParallelCorpus train;
  ParallelCorpus dev;
  ParallelCorpus test;
};

// Seeded shuffle followed by a cut. Dev and test get round(n * fraction) pairs
// (at least one each); train takes the remainder.
CorpusSplit split(const ParallelCorpus& corpus, SplitFractions fractions, std::uint64_t seed);

struct SelectionResult {
  std::vector<std::size_t> selected_indices;
  std::vector<double> scores;
};

struct FdaOptions {
  std::size_t ngram_max = 3;
  double decay = 0.5;
};

// Feature-decay data selection. A candidate's score is the sum over its
// source n-grams (orders 1..ngram_max, counted with multiplicity) of
// init(f) * decay^covered(f), where init(f) is 1 for n-grams present in the
// in-domain text and 0 otherwise, and covered(f) counts occurrences of f in
// the sentences already selected. Greedy: the highest-scoring remaining
// sentence is picked, lowest index on ties.
SelectionResult fda_select(const ParallelCorpus& pool, std::span<const Tokens> in_domain_sources,
                           std::size_t budget, FdaOptions options = {});

}  // namespace adaptmt
