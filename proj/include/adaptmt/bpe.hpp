#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "adaptmt/text.hpp"

namespace adaptmt {

using Subwords = std::vector<std::string>;

// Joint byte-pair-encoding model. The last subword of every word carries the
// end-of-word marker, so "low" with no merges becomes {"l", "o", "w</w>"}.
// Input text must not contain the marker.
class BpeModel {
 public:
  static constexpr std::string_view kEndOfWord = "</w>";
  static constexpr int kFormatVersion = 1;

  BpeModel() = default;
  explicit BpeModel(std::vector<std::pair<std::string, std::string>> merges,
                    std::set<std::string> alphabet = {});

  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }
  // Characters seen at learning time plus every merge product.
  const std::set<std::string>& vocab() const { return vocab_; }

  Subwords apply(const Tokens& sentence) const;
  Subwords apply_word(const std::string& word) const;

  std::string serialize() const;
  static BpeModel parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static BpeModel load(const std::filesystem::path& path);

  // FNV-1a of the serialized form; checkpoints record it.
  std::uint64_t hash() const;

 private:
  std::vector<std::pair<std::string, std::string>> merges_;
  std::set<std::string> vocab_;
};

// Learns up to num_merges merges from the concatenated corpus. Ties in pair
// frequency go to the lexicographically smallest (left, right); learning stops
// once no pair occurs at least twice.
BpeModel bpe_learn(std::span<const Tokens> corpus_text, std::size_t num_merges);

Subwords bpe_apply(const BpeModel& model, const Tokens& sentence);

// Concatenates subwords and closes a word at every end-of-word marker.
Tokens bpe_revert(const Subwords& subwords);

// Records decoder output words that never occurred in the training targets.
class NovelWordAudit {
 public:
  NovelWordAudit() = default;
  explicit NovelWordAudit(std::span<const Tokens> training_targets);

  std::vector<std::string> novel_words(const Tokens& output) const;
  bool empty() const { return known_.empty(); }

  std::vector<std::string> known_words_sorted() const;
  static NovelWordAudit from_word_list(const std::vector<std::string>& words);

 private:
  std::unordered_set<std::string> known_;
};

}  // namespace adaptmt
