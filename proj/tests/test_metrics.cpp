#include <cmath>
#include <map>
#include <random>

#include "adaptmt/error.hpp"
#include "adaptmt/metrics.hpp"
#include "doctest.h"
#include "ter_oracle.hpp"

using namespace adaptmt;

namespace {

Tokens T(const std::string& s) { return tokenize(s); }

// Independent recount of corpus BLEU counts with plain maps.
std::pair<std::array<long, 4>, std::array<long, 4>> recount(const std::vector<Tokens>& hyps,
                                                            const std::vector<Tokens>& refs) {
  std::array<long, 4> match{}, total{};
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    for (int n = 1; n <= 4; ++n) {
      std::map<Tokens, long> h, r;
      for (std::size_t i = 0; i + n <= hyps[s].size(); ++i) ++h[Tokens(hyps[s].begin() + i, hyps[s].begin() + i + n)];
      for (std::size_t i = 0; i + n <= refs[s].size(); ++i) ++r[Tokens(refs[s].begin() + i, refs[s].begin() + i + n)];
      for (auto& [g, c] : h) {
        total[n - 1] += c;
        match[n - 1] += std::min(c, r.count(g) ? r[g] : 0L);
      }
    }
  }
  return {match, total};
}

}  // namespace

TEST_CASE("sentence BLEU tabulated examples") {
  CHECK(sentence_bleu(T("a b c d e"), T("a b c d e")).value == doctest::Approx(1.0).epsilon(1e-12));

  const auto none = sentence_bleu(T("x y z w"), T("a b c d"));
  CHECK(none.precisions[0] == doctest::Approx(1.0 / 8));
  CHECK(none.precisions[1] == doctest::Approx(1.0 / 12));
  CHECK(none.precisions[2] == doctest::Approx(1.0 / 16));
  CHECK(none.precisions[3] == doctest::Approx(1.0 / 16));
  CHECK(none.brevity_penalty == 1.0);
  CHECK(std::abs(none.value - std::pow(1.0 / (8 * 12 * 16 * 16), 0.25)) < 1e-12);
  CHECK(std::abs(none.value - 0.080) < 1e-3);

  CHECK(sentence_bleu({}, T("a b")).value == 0.0);
  CHECK_THROWS_AS(sentence_bleu(T("a"), {}), MetricError);
}

TEST_CASE("sentence BLEU is BP times the geometric mean") {
  const auto s = sentence_bleu(T("the cat sat on mat"), T("the cat sat on the mat"));
  CHECK(s.brevity_penalty == doctest::Approx(std::exp(1.0 - 6.0 / 5.0)));
  double log_sum = 0;
  for (int n = 0; n < s.effective_order; ++n) log_sum += std::log(s.precisions[n]);
  CHECK(std::abs(s.value - s.brevity_penalty * std::exp(log_sum / s.effective_order)) < 1e-9);
  CHECK(s.value > 0.0);
  CHECK(s.value < 1.0);

  // Longer hypotheses are not rewarded.
  CHECK(sentence_bleu(T("a b c d e f"), T("a b c d")).brevity_penalty == 1.0);
}

TEST_CASE("corpus BLEU is micro-averaged") {
  const std::vector<Tokens> hyps{T("the cat is on the mat"), T("the dog runs in a big park today")};
  const std::vector<Tokens> refs{T("the cat sat on the mat"), T("the dog runs in a park")};
  BleuStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) total += bleu_stats(hyps[i], refs[i]);
  const auto [match, count] = recount(hyps, refs);
  for (int n = 0; n < 4; ++n) {
    CHECK(total.matches[n] == match[n]);
    CHECK(total.totals[n] == count[n]);
  }
  const auto c = corpus_bleu(hyps, refs);
  double log_sum = 0;
  for (int n = 0; n < 4; ++n) log_sum += std::log(static_cast<double>(match[n]) / count[n]);
  CHECK(c.value == doctest::Approx(std::exp(log_sum / 4)));  // hyps longer than refs: BP 1

  const std::vector<Tokens> one_h{hyps[0]}, one_r{refs[0]};
  CHECK(corpus_bleu(one_h, one_r).value == doctest::Approx(sentence_bleu(hyps[0], refs[0]).value));
  CHECK(corpus_bleu(refs, refs).value == doctest::Approx(1.0));
  CHECK_THROWS_AS(corpus_bleu(hyps, one_r), MetricError);
}

TEST_CASE("TER examples") {
  CHECK(ter(T("a b c"), T("a b c")).value == 0.0);

  const auto del = ter(T("a b c"), T("a c"));
  CHECK(del.value == doctest::Approx(0.5));
  CHECK(del.stats.deletions == 1);
  CHECK(del.stats.shifts == 0);

  const auto rot = ter(T("c a b"), T("a b c"));
  CHECK(rot.value == doctest::Approx(1.0 / 3));
  CHECK(rot.stats.shifts == 1);
  CHECK(rot.stats.edits() == 1);

  CHECK_THROWS_AS(ter(T("a"), {}), MetricError);
}

TEST_CASE("TER is not capped at one but bounded by delete-all plus insert-all") {
  const auto t = ter(T("x y z w v"), T("a b"));
  CHECK(t.value == doctest::Approx(2.5));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    Tokens h, r;
    for (std::size_t k = rng() % 8; k > 0; --k) h.push_back(std::string(1, static_cast<char>('a' + rng() % 4)));
    for (std::size_t k = 1 + rng() % 8; k > 0; --k) r.push_back(std::string(1, static_cast<char>('a' + rng() % 4)));
    const auto s = ter(h, r);
    CHECK(s.value >= 0.0);
    CHECK(s.value <= static_cast<double>(std::max(h.size(), r.size())) / r.size() + 1e-12);
    CHECK(s.value == doctest::Approx(static_cast<double>(s.stats.edits()) / r.size()));
    CHECK(s.stats.edits() <= edit_distance(h, r));
  }
}

TEST_CASE("greedy TER never beats the exhaustive shift search") {
  testing::TerOracle oracle(2);
  const auto hyps = testing::all_strings({"a", "b", "c"}, 0, 4);
  const auto refs = testing::all_strings({"a", "b", "c"}, 1, 4);
  long equal = 0, total = 0;
  for (const auto& h : hyps) {
    for (const auto& r : refs) {
      const long greedy = ter_stats(h, r).edits();
      const long best = oracle.min_edits(h, r);
      CHECK(greedy >= best);
      equal += greedy == best;
      ++total;
    }
  }
  // Greedy commits to the first improving shift and can miss a better pair
  // of shifts; that happens on a small fraction of short pairs.
  CHECK(static_cast<double>(equal) / total > 0.99);
}

TEST_CASE("hTER and hBLEU are the reference-slot computations") {
  const auto h = T("the system output"), pe = T("the corrected system output");
  CHECK(hter(h, pe).value == ter(h, pe).value);
  CHECK(sentence_hbleu(h, pe).value == sentence_bleu(h, pe).value);
}

TEST_CASE("corpus TER sums edits over summed reference length") {
  const std::vector<Tokens> hyps{T("a b c"), T("c a b")}, refs{T("a c"), T("a b c")};
  const auto c = corpus_ter(hyps, refs);
  CHECK(c.value == doctest::Approx(2.0 / 5));
  CHECK(c.stats.ref_length == 5);
}

TEST_CASE("linear fit") {
  std::vector<std::pair<double, double>> line;
  for (int i = 0; i < 6; ++i) line.emplace_back(i, 2.0 * i + 1);
  const auto f = linear_fit(line);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.residual_sum_squares == doctest::Approx(0.0));

  const std::vector<std::pair<double, double>> tent{{0, 0}, {1, 1}, {2, 0}};
  const auto g = linear_fit(tent);
  CHECK(g.slope == doctest::Approx(0.0));
  CHECK(g.intercept == doctest::Approx(1.0 / 3));

  const std::vector<std::pair<double, double>> flat{{1, 4}, {5, 4}, {9, 4}};
  CHECK(linear_fit(flat).slope == doctest::Approx(0.0));

  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise;
  std::vector<std::pair<double, double>> cloud;
  for (int i = 1; i <= 40; ++i) cloud.emplace_back(i, 0.3 * i + noise(rng));
  const auto c = linear_fit(cloud);
  double sum = 0, weighted = 0;
  for (auto [x, y] : cloud) {
    sum += y - c.at(x);
    weighted += (y - c.at(x)) * x;
  }
  CHECK(std::abs(sum) < 1e-6);
  CHECK(std::abs(weighted) < 1e-6);

  const std::vector<std::pair<double, double>> same{{2, 1}, {2, 3}};
  CHECK_THROWS_AS(linear_fit(same), MetricError);
  CHECK_THROWS_AS(linear_fit(std::span<const std::pair<double, double>>{}), MetricError);
}
