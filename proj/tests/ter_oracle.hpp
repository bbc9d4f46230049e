#pragma once

// Exhaustive TER oracle: tries every shift sequence up to a fixed depth and
// takes the minimum of shifts + word edit distance. A shift may move any
// contiguous phrase that occurs somewhere in the reference to any position.
// Independent of the greedy implementation.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace adaptmt::testing {

using Words = std::vector<std::string>;

inline long dp_distance(const Words& a, const Words& b) {
  std::vector<std::vector<long>> d(a.size() + 1, std::vector<long>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<long>(i);
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<long>(j);
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0L : 1L), d[i - 1][j] + 1, d[i][j - 1] + 1});
  return d[a.size()][b.size()];
}

inline bool occurs(const Words& phrase, const Words& ref) {
  return std::search(ref.begin(), ref.end(), phrase.begin(), phrase.end()) != ref.end();
}

// All sequences reachable from `s` by exactly one admissible phrase move.
inline std::set<Words> one_shift(const Words& s, const Words& ref) {
  std::set<Words> out;
  const std::size_t n = s.size();
  for (std::size_t start = 0; start < n; ++start) {
    for (std::size_t len = 1; start + len <= n; ++len) {
      Words phrase(s.begin() + start, s.begin() + start + len);
      if (!occurs(phrase, ref)) break;
      Words rest(s.begin(), s.begin() + start);
      rest.insert(rest.end(), s.begin() + start + len, s.end());
      for (std::size_t dest = 0; dest <= rest.size(); ++dest) {
        if (dest == start) continue;
        Words moved(rest.begin(), rest.begin() + dest);
        moved.insert(moved.end(), phrase.begin(), phrase.end());
        moved.insert(moved.end(), rest.begin() + dest, rest.end());
        out.insert(std::move(moved));
      }
    }
  }
  return out;
}

// Minimum of (shifts + edit distance) over shift sequences of length <= depth.
class TerOracle {
 public:
  explicit TerOracle(int depth = 2) : depth_(depth) {}

  long min_edits(const Words& hyp, const Words& ref) {
    const auto& levels = reachable(hyp, ref);
    long best = dp_distance(hyp, ref);
    for (std::size_t k = 1; k < levels.size(); ++k) {
      for (const auto& s : levels[k]) best = std::min(best, static_cast<long>(k) + dp_distance(s, ref));
    }
    return best;
  }

 private:
  // levels[k] = sequences first reachable after k shifts.
  const std::vector<std::set<Words>>& reachable(const Words& hyp, const Words& ref) {
    const auto key = std::make_pair(hyp, ref);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<std::set<Words>> levels{{hyp}};
    std::set<Words> seen{hyp};
    for (int k = 1; k <= depth_; ++k) {
      std::set<Words> next;
      for (const auto& s : levels.back()) {
        for (auto& t : one_shift(s, ref)) {
          if (!seen.count(t)) next.insert(t);
        }
      }
      seen.insert(next.begin(), next.end());
      levels.push_back(std::move(next));
    }
    return cache_.emplace(key, std::move(levels)).first->second;
  }

  int depth_;
  std::map<std::pair<Words, Words>, std::vector<std::set<Words>>> cache_;
};

// Every string over `alphabet` with length in [min_len, max_len].
inline std::vector<Words> all_strings(const std::vector<std::string>& alphabet, std::size_t min_len, std::size_t max_len) {
  std::vector<Words> out;
  std::vector<Words> frontier{{}};
  for (std::size_t len = 0; len <= max_len; ++len) {
    if (len >= min_len) out.insert(out.end(), frontier.begin(), frontier.end());
    std::vector<Words> next;
    for (const auto& w : frontier) {
      for (const auto& a : alphabet) {
        Words e = w;
        e.push_back(a);
        next.push_back(std::move(e));
      }
    }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace adaptmt::testing
