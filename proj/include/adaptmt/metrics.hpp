#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "adaptmt/text.hpp"

namespace adaptmt {

inline constexpr int kBleuMaxOrder = 4;

// Sufficient statistics of BLEU for one sentence (or a sum of sentences).
struct BleuStats {
  std::array<long, kBleuMaxOrder> matches{};
  std::array<long, kBleuMaxOrder> totals{};
  long hyp_length = 0;
  long ref_length = 0;

  BleuStats& operator+=(const BleuStats& o);
  bool operator==(const BleuStats&) const = default;
};

struct BleuScore {
  double value = 0.0;  // in [0, 1]
  std::array<double, kBleuMaxOrder> precisions{};
  double brevity_penalty = 0.0;
  // Orders for which the hypothesis has at least one n-gram.
  int effective_order = 0;
};

BleuStats bleu_stats(const Tokens& hyp, const Tokens& ref);

// Clipped precisions up to order 4. An order with zero matches gets
// 1 / (2^k * candidate n-gram count), k counting zero-match orders so far.
// Orders the hypothesis is too short to contain are left out of the mean.
BleuScore bleu_from_stats(const BleuStats& stats);

// Throws MetricError on an empty reference.
BleuScore sentence_bleu(const Tokens& hyp, const Tokens& ref);

// Micro-averaged over the corpus.
BleuScore corpus_bleu(std::span<const Tokens> hyps, std::span<const Tokens> refs);

struct TerOptions {
  std::size_t max_shift_size = 10;      // words in a shifted phrase
  std::size_t max_shift_distance = 50;  // positions a phrase may travel
};

struct TerStats {
  long insertions = 0;
  long deletions = 0;
  long substitutions = 0;
  long shifts = 0;
  long ref_length = 0;

  long edits() const { return insertions + deletions + substitutions + shifts; }
  TerStats& operator+=(const TerStats& o);
  bool operator==(const TerStats&) const = default;
};

struct TerScore {
  double value = 0.0;  // edits / reference length, not capped
  TerStats stats;
};

// Word-level Levenshtein distance with unit costs.
long edit_distance(const Tokens& hyp, const Tokens& ref);

// Greedy shift search: while some phrase shift lowers the edit distance,
// apply the one with the largest reduction (ties:
// shortest move, then leftmost phrase, then leftmost destination). Shifted
// phrases must equal some reference substring.
TerStats ter_stats(const Tokens& hyp, const Tokens& ref, const TerOptions& options = {});
TerScore ter_from_stats(const TerStats& stats);
TerScore ter(const Tokens& hyp, const Tokens& ref, const TerOptions& options = {});
TerScore corpus_ter(std::span<const Tokens> hyps, std::span<const Tokens> refs, const TerOptions& options = {});

// hBLEU / hTER: the same computations with the post-edit as reference.
inline BleuScore sentence_hbleu(const Tokens& hyp, const Tokens& post_edit) { return sentence_bleu(hyp, post_edit); }
inline TerScore hter(const Tokens& hyp, const Tokens& post_edit, const TerOptions& options = {}) {
  return ter(hyp, post_edit, options);
}

struct TrendFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_sum_squares = 0.0;

  double at(double index) const { return intercept + slope * index; }
};

// Ordinary least squares. Throws MetricError unless at least two distinct
// indices are present.
TrendFit linear_fit(std::span<const std::pair<double, double>> series);

// Reproducibility block echoed into reports.
std::string metric_configuration(const TerOptions& options = {});

}  // namespace adaptmt
