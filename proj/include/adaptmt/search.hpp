#pragma once

#include <span>
#include <vector>

#include "adaptmt/model.hpp"
#include "adaptmt/system.hpp"

namespace adaptmt {

enum class LengthNormalization { kNone, kByLength };

struct Hypothesis {
  IdSequence tokens;  // generated ids, ends with eos when finished
  double score = 0.0;  // summed log-probability
  double normalized_score = 0.0;
  bool finished = false;

  bool operator==(const Hypothesis&) const = default;
};

struct SearchOptions {
  std::size_t beam_size = 6;
  // 0 selects the default cap of 2 * source length + 5.
  std::size_t max_len = 0;
  LengthNormalization normalization = LengthNormalization::kByLength;
};

std::size_t default_max_len(std::size_t source_length);

double normalize_score(double score, std::size_t length, LengthNormalization policy);

// Length-capped beam search. Each step keeps the beam_size best expansions
// by accumulated log-probability (ties: lexicographically smaller id
// sequence); expansions ending in eos leave the beam as finished. Finished
// hypotheses are ranked by normalized score. If nothing finishes, the capped
// live hypotheses come back with finished = false. pad and bos are never
// generated.
std::vector<Hypothesis> beam_search(const ModelParameters& params, std::span<const TokenId> x, std::size_t beam_size,
                                    std::size_t max_len,
                                    LengthNormalization normalization = LengthNormalization::kByLength);

// Picks the most probable id at every step until eos or max_len.
Hypothesis greedy_search(const ModelParameters& params, std::span<const TokenId> x, std::size_t max_len,
                         LengthNormalization normalization = LengthNormalization::kByLength);

struct Translation {
  Tokens text;
  Hypothesis hypothesis;
};

// bpe -> ids -> beam search -> subwords -> words. An empty sentence
// translates to an empty sentence.
Translation translate(const TranslationSystem& system, const Tokens& sentence, const SearchOptions& options = {});

}  // namespace adaptmt
