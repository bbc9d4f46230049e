#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "adaptmt/error.hpp"
#include "adaptmt/metrics.hpp"

namespace adaptmt {

struct SignificanceResult {
  double observed_difference = 0.0;  // aggregate(A) - aggregate(B)
  double p_value = 1.0;
  std::size_t repetitions = 0;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  bool significant = false;
};

inline constexpr std::size_t kDefaultRepetitions = 10000;
inline constexpr double kDefaultAlpha = 0.05;

// Paired approximate randomization. Each repetition swaps the A/B
// statistics of every sentence with probability 1/2 and recomputes both
// aggregates; p = (#{|diff'| >= |diff|} + 1) / (repetitions + 1).
// Swap bits come from one mt19937_64 stream seeded with `seed`.
template <class Stat, class Aggregate>
SignificanceResult ar_test(std::span<const Stat> a, std::span<const Stat> b, Aggregate&& aggregate,
                           std::size_t repetitions = kDefaultRepetitions, double alpha = kDefaultAlpha,
                           std::uint64_t seed = 1) {
  if (a.size() != b.size()) {
    throw ValidationError("ar_test pairing error: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                          " sentences");
  }
  if (a.size() < 2) throw ValidationError("ar_test needs at least two paired sentences");
  if (repetitions < 1) throw ValidationError("ar_test needs at least one repetition");

  SignificanceResult r;
  r.repetitions = repetitions;
  r.seed = seed;
  r.alpha = alpha;
  r.observed_difference = aggregate(a) - aggregate(b);
  const double observed = std::abs(r.observed_difference);

  std::mt19937_64 rng(seed);
  std::vector<Stat> pa(a.begin(), a.end()), pb(b.begin(), b.end());
  std::size_t at_least = 0;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i % 64 == 0) bits = rng();
      const bool swap = bits & 1u;
      bits >>= 1;
      pa[i] = swap ? b[i] : a[i];
      pb[i] = swap ? a[i] : b[i];
    }
    const double diff = aggregate(std::span<const Stat>(pa)) - aggregate(std::span<const Stat>(pb));
    if (std::abs(diff) >= observed) ++at_least;
  }
  r.p_value = static_cast<double>(at_least + 1) / static_cast<double>(repetitions + 1);
  r.significant = r.p_value <= alpha;
  return r;
}

// Corpus-level aggregates over per-sentence sufficient statistics.
inline double corpus_bleu_of(std::span<const BleuStats> stats) {
  BleuStats total;
  for (const auto& s : stats) total += s;
  return bleu_from_stats(total).value;
}

inline double corpus_ter_of(std::span<const TerStats> stats) {
  TerStats total;
  for (const auto& s : stats) total += s;
  return ter_from_stats(total).value;
}

inline double mean_of(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

}  // namespace adaptmt
