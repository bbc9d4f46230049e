#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "adaptmt/bpe.hpp"

namespace adaptmt {

using TokenId = int;
using IdSequence = std::vector<TokenId>;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kBosId = 2;
inline constexpr TokenId kEosId = 3;
inline constexpr TokenId kNumReserved = 4;

// Subword symbol <-> id table. Ids 0..3 are reserved for pad/unk/bos/eos.
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& symbols);

  // Reserved symbols followed by every symbol of the BPE vocabulary, sorted.
  static Vocabulary from_bpe(const BpeModel& bpe);

  TokenId id(const std::string& symbol) const;
  const std::string& symbol(TokenId id) const;
  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  IdSequence encode(const Subwords& subwords) const;
  // Drops every reserved id.
  Subwords decode(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace adaptmt
