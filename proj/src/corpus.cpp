#include "adaptmt/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "adaptmt/error.hpp"

namespace adaptmt {

ParallelCorpus::ParallelCorpus(std::vector<SentencePair> pairs, std::string name)
    : pairs_(std::move(pairs)), name_(std::move(name)) {
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (pairs_[i].source.empty() || pairs_[i].target.empty()) {
      throw ValidationError("pair " + std::to_string(i + 1) + " of corpus '" + name_ +
                            "' has an empty " + (pairs_[i].source.empty() ? "source" : "target") +
                            " side");
    }
  }
}

std::vector<Tokens> ParallelCorpus::sources() const {
  std::vector<Tokens> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.source);
  return out;
}

std::vector<Tokens> ParallelCorpus::targets() const {
  std::vector<Tokens> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.target);
  return out;
}

ParallelCorpus ParallelCorpus::repeated(std::size_t times) const {
  std::vector<SentencePair> out;
  out.reserve(pairs_.size() * times);
  for (std::size_t r = 0; r < times; ++r) out.insert(out.end(), pairs_.begin(), pairs_.end());
  return ParallelCorpus(std::move(out), times == 1 ? name_ : name_ + "x" + std::to_string(times));
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (auto bad = find_invalid_utf8(line)) {
      throw EncodingError(path.string() + ":" + std::to_string(lines.size() + 1) +
                          ": invalid UTF-8 at byte " + std::to_string(*bad));
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path) {
  auto src = read_lines(source_path);
  auto tgt = read_lines(target_path);
  if (src.size() != tgt.size()) {
    throw AlignmentError("line-count mismatch: " + source_path.string() + " has " +
                         std::to_string(src.size()) + " lines, " + target_path.string() +
                         " has " + std::to_string(tgt.size()));
  }
  std::vector<SentencePair> pairs;
  pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    pairs.push_back({tokenize(src[i]), tokenize(tgt[i])});
  }
  return ParallelCorpus(std::move(pairs), source_path.stem().string());
}

void save_parallel(const ParallelCorpus& corpus, const std::filesystem::path& source_path,
                   const std::filesystem::path& target_path) {
  std::ofstream src(source_path, std::ios::binary);
  std::ofstream tgt(target_path, std::ios::binary);
  if (!src || !tgt) throw IoError("cannot write " + source_path.string());
  for (const auto& p : corpus.pairs()) {
    src << join(p.source) << '\n';
    tgt << join(p.target) << '\n';
  }
}

std::vector<Tokens> load_lines(const std::filesystem::path& path) {
  std::vector<Tokens> out;
  for (const auto& line : read_lines(path)) out.push_back(tokenize(line));
  return out;
}

CorpusSplit split(const ParallelCorpus& corpus, SplitFractions fractions, std::uint64_t seed) {
  if (fractions.train <= 0 || fractions.dev <= 0 || fractions.test <= 0 ||
      std::abs(fractions.train + fractions.dev + fractions.test - 1.0) > 1e-9) {
    throw ValidationError("split fractions must be positive and sum to 1");
  }
  const std::size_t n = corpus.size();
  if (n < 3) throw ValidationError("cannot split a corpus of " + std::to_string(n) + " pairs");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto count = [n](double f) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f * static_cast<double>(n))));
  };
  std::size_t n_dev = count(fractions.dev);
  std::size_t n_test = count(fractions.test);
  while (n_dev + n_test > n - 1) {
    if (n_dev >= n_test && n_dev > 1) --n_dev;
    else --n_test;
  }
  std::size_t n_train = n - n_dev - n_test;

  auto take = [&](std::size_t from, std::size_t len, const std::string& suffix) {
    std::vector<SentencePair> pairs;
    pairs.reserve(len);
    for (std::size_t i = from; i < from + len; ++i) pairs.push_back(corpus[order[i]]);
    return ParallelCorpus(std::move(pairs), corpus.name() + "." + suffix);
  };
  return {take(0, n_train, "train"), take(n_train, n_dev, "dev"), take(n_train + n_dev, n_test, "test")};
}

namespace {

using Ngram = std::vector<std::string>;

std::vector<Ngram> ngrams(const Tokens& s, std::size_t max_order) {
  std::vector<Ngram> out;
  for (std::size_t n = 1; n <= max_order; ++n) {
    for (std::size_t i = 0; i + n <= s.size(); ++i) out.emplace_back(s.begin() + i, s.begin() + i + n);
  }
  return out;
}

}  // namespace

SelectionResult fda_select(const ParallelCorpus& pool, std::span<const Tokens> in_domain_sources,
                           std::size_t budget, FdaOptions options) {
  if (budget > pool.size()) {
    throw ValidationError("budget " + std::to_string(budget) + " exceeds pool size " +
                          std::to_string(pool.size()));
  }
  if (options.ngram_max < 1 || options.ngram_max > 4) throw ValidationError("ngram_max must be in [1,4]");
  if (!(options.decay > 0.0 && options.decay <= 1.0)) throw ValidationError("decay must be in (0,1]");

  std::map<Ngram, int> feature_id;
  for (const auto& s : in_domain_sources) {
    for (auto& g : ngrams(s, options.ngram_max)) feature_id.emplace(std::move(g), 0);
  }
  if (feature_id.empty()) throw ValidationError("in-domain set has no n-gram features to score");
  int next = 0;
  for (auto& [g, id] : feature_id) id = next++;

  // Each candidate reduces to the multiset of in-domain features it contains.
  std::vector<std::vector<int>> features(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (const auto& g : ngrams(pool[i].source, options.ngram_max)) {
      if (auto it = feature_id.find(g); it != feature_id.end()) features[i].push_back(it->second);
    }
  }

  std::vector<int> covered(feature_id.size(), 0);
  std::vector<double> decay_pow;  // decay^k cached
  auto decay_at = [&](int k) {
    while (static_cast<int>(decay_pow.size()) <= k) {
      decay_pow.push_back(decay_pow.empty() ? 1.0 : decay_pow.back() * options.decay);
    }
    return decay_pow[k];
  };
  auto score = [&](std::size_t i) {
    double s = 0.0;
    for (int f : features[i]) s += decay_at(covered[f]);
    return s;
  };

  SelectionResult result;
  std::vector<bool> taken(pool.size(), false);
  for (std::size_t step = 0; step < budget; ++step) {
    std::size_t best = pool.size();
    double best_score = -1.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      double s = score(i);
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    taken[best] = true;
    result.selected_indices.push_back(best);
    result.scores.push_back(best_score);
    for (int f : features[best]) ++covered[f];
  }
  return result;
}

}  // namespace adaptmt
