#include "adaptmt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "adaptmt/error.hpp"

namespace adaptmt {

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (int n = 0; n < kBleuMaxOrder; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hyp_length += o.hyp_length;
  ref_length += o.ref_length;
  return *this;
}

namespace {

std::map<std::vector<std::string>, long> count_ngrams(const Tokens& s, std::size_t n) {
  std::map<std::vector<std::string>, long> counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[Tokens(s.begin() + i, s.begin() + i + n)];
  return counts;
}

}  // namespace

BleuStats bleu_stats(const Tokens& hyp, const Tokens& ref) {
  BleuStats st;
  st.hyp_length = static_cast<long>(hyp.size());
  st.ref_length = static_cast<long>(ref.size());
  for (int n = 1; n <= kBleuMaxOrder; ++n) {
    auto h = count_ngrams(hyp, n);
    auto r = count_ngrams(ref, n);
    long matched = 0;
    for (const auto& [g, c] : h) {
      auto it = r.find(g);
      if (it != r.end()) matched += std::min(c, it->second);
    }
    st.matches[n - 1] = matched;
    st.totals[n - 1] = hyp.size() >= static_cast<std::size_t>(n) ? static_cast<long>(hyp.size()) - n + 1 : 0;
  }
  return st;
}

BleuScore bleu_from_stats(const BleuStats& st) {
  BleuScore s;
  if (st.hyp_length == 0 || st.ref_length == 0) return s;
  double log_sum = 0.0;
  double smooth = 1.0;
  for (int n = 0; n < kBleuMaxOrder; ++n) {
    if (st.totals[n] == 0) break;
    double p;
    if (st.matches[n] == 0) {
      smooth *= 2.0;
      p = 1.0 / (smooth * static_cast<double>(st.totals[n]));
    } else {
      p = static_cast<double>(st.matches[n]) / static_cast<double>(st.totals[n]);
    }
    s.precisions[n] = p;
    log_sum += std::log(p);
    ++s.effective_order;
  }
  s.brevity_penalty = std::min(1.0, std::exp(1.0 - static_cast<double>(st.ref_length) / static_cast<double>(st.hyp_length)));
  s.value = s.brevity_penalty * std::exp(log_sum / s.effective_order);
  return s;
}

BleuScore sentence_bleu(const Tokens& hyp, const Tokens& ref) {
  if (ref.empty()) throw MetricError("BLEU reference is empty");
  return bleu_from_stats(bleu_stats(hyp, ref));
}

BleuScore corpus_bleu(std::span<const Tokens> hyps, std::span<const Tokens> refs) {
  if (hyps.size() != refs.size()) {
    throw MetricError("corpus BLEU: " + std::to_string(hyps.size()) + " hypotheses vs " +
                      std::to_string(refs.size()) + " references");
  }
  if (hyps.empty()) throw MetricError("corpus BLEU over an empty corpus");
  BleuStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (refs[i].empty()) throw MetricError("BLEU reference " + std::to_string(i + 1) + " is empty");
    total += bleu_stats(hyps[i], refs[i]);
  }
  return bleu_from_stats(total);
}

TerStats& TerStats::operator+=(const TerStats& o) {
  insertions += o.insertions;
  deletions += o.deletions;
  substitutions += o.substitutions;
  shifts += o.shifts;
  ref_length += o.ref_length;
  return *this;
}

namespace {

struct EditCounts {
  long insertions = 0, deletions = 0, substitutions = 0;
  long total() const { return insertions + deletions + substitutions; }
};

// Full DP with a backtrace that prefers match/substitution, then deletion.
// Deletion removes a hypothesis word, insertion adds a reference word.
EditCounts levenshtein(const Tokens& hyp, const Tokens& ref) {
  const std::size_t n = hyp.size(), m = ref.size();
  std::vector<long> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> long& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const long diag = at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  EditCounts c;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1)) {
      if (hyp[i - 1] != ref[j - 1]) ++c.substitutions;
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

long distance_only(const Tokens& hyp, const Tokens& ref) {
  const std::size_t m = ref.size();
  std::vector<long> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), 0L);
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = static_cast<long>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = std::min({prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

bool occurs_in(const Tokens& ref, const Tokens& hyp, std::size_t start, std::size_t len) {
  if (len > ref.size()) return false;
  for (std::size_t j = 0; j + len <= ref.size(); ++j) {
    if (std::equal(hyp.begin() + start, hyp.begin() + start + len, ref.begin() + j)) return true;
  }
  return false;
}

// Moves hyp[start, start+len) so that it begins at index dest of the result.
Tokens shifted(const Tokens& hyp, std::size_t start, std::size_t len, std::size_t dest) {
  Tokens rest;
  rest.reserve(hyp.size());
  rest.insert(rest.end(), hyp.begin(), hyp.begin() + start);
  rest.insert(rest.end(), hyp.begin() + start + len, hyp.end());
  Tokens out(rest.begin(), rest.begin() + dest);
  out.insert(out.end(), hyp.begin() + start, hyp.begin() + start + len);
  out.insert(out.end(), rest.begin() + dest, rest.end());
  return out;
}

}  // namespace

long edit_distance(const Tokens& hyp, const Tokens& ref) { return distance_only(hyp, ref); }

TerStats ter_stats(const Tokens& hyp, const Tokens& ref, const TerOptions& options) {
  if (ref.empty()) throw MetricError("TER reference is empty");
  Tokens current = hyp;
  long shifts = 0;
  long current_distance = distance_only(current, ref);
  while (current_distance > 0) {
    struct Best {
      long gain = 0;
      std::size_t move = 0, start = 0, dest = 0, len = 0;
    } best;
    bool found = false;
    const std::size_t n = current.size();
    for (std::size_t start = 0; start < n; ++start) {
      for (std::size_t len = 1; len <= options.max_shift_size && start + len <= n; ++len) {
        if (!occurs_in(ref, current, start, len)) break;  // longer phrases cannot occur either
        for (std::size_t dest = 0; dest + len <= n; ++dest) {
          if (dest == start) continue;
          const std::size_t move = dest > start ? dest - start : start - dest;
          if (move > options.max_shift_distance) continue;
          const long gain = current_distance - distance_only(shifted(current, start, len, dest), ref);
          const bool better = !found || gain > best.gain ||
                              (gain == best.gain && std::tie(move, start, dest) < std::tie(best.move, best.start, best.dest));
          if (better) {
            best = {gain, move, start, dest, len};
            found = true;
          }
        }
      }
    }
    if (!found || best.gain < 1) break;
    current = shifted(current, best.start, best.len, best.dest);
    current_distance -= best.gain;
    ++shifts;
  }
  const EditCounts c = levenshtein(current, ref);
  TerStats st;
  st.insertions = c.insertions;
  st.deletions = c.deletions;
  st.substitutions = c.substitutions;
  st.shifts = shifts;
  st.ref_length = static_cast<long>(ref.size());
  return st;
}

TerScore ter_from_stats(const TerStats& stats) {
  if (stats.ref_length <= 0) throw MetricError("TER reference length must be positive");
  return {static_cast<double>(stats.edits()) / static_cast<double>(stats.ref_length), stats};
}

TerScore ter(const Tokens& hyp, const Tokens& ref, const TerOptions& options) {
  return ter_from_stats(ter_stats(hyp, ref, options));
}

TerScore corpus_ter(std::span<const Tokens> hyps, std::span<const Tokens> refs, const TerOptions& options) {
  if (hyps.size() != refs.size()) {
    throw MetricError("corpus TER: " + std::to_string(hyps.size()) + " hypotheses vs " +
                      std::to_string(refs.size()) + " references");
  }
  if (hyps.empty()) throw MetricError("corpus TER over an empty corpus");
  TerStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) total += ter_stats(hyps[i], refs[i], options);
  return ter_from_stats(total);
}

TrendFit linear_fit(std::span<const std::pair<double, double>> series) {
  const auto n = static_cast<double>(series.size());
  if (series.size() < 2) throw MetricError("linear fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : series) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : series) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw MetricError("linear fit is degenerate: all indices are equal");
  TrendFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (const auto& [x, y] : series) {
    const double r = y - fit.at(x);
    fit.residual_sum_squares += r * r;
  }
  return fit;
}

std::string metric_configuration(const TerOptions& options) {
  std::ostringstream out;
  out << "tokenization=whitespace,case-sensitive;bleu=max-order 4,smoothing exp (mteval),effective-order;"
      << "ter=greedy shifts,max-shift-size " << options.max_shift_size << ",max-shift-distance "
      << options.max_shift_distance;
  return out.str();
}

}  // namespace adaptmt
