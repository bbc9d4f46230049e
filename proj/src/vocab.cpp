#include "adaptmt/vocab.hpp"

#include <algorithm>

#include "adaptmt/error.hpp"

namespace adaptmt {

namespace {
const std::vector<std::string> kReserved = {"<pad>", "<unk>", "<s>", "</s>"};
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& symbols) {
  symbols_ = kReserved;
  for (const auto& s : symbols) {
    if (index_.count(s) || std::find(kReserved.begin(), kReserved.end(), s) != kReserved.end()) {
      throw VocabularyError("duplicate vocabulary symbol '" + s + "'");
    }
    symbols_.push_back(s);
    index_.emplace(s, static_cast<TokenId>(symbols_.size() - 1));
  }
}

Vocabulary Vocabulary::from_bpe(const BpeModel& bpe) {
  return Vocabulary(std::vector<std::string>(bpe.vocab().begin(), bpe.vocab().end()));
}

TokenId Vocabulary::id(const std::string& symbol) const {
  auto it = index_.find(symbol);
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::symbol(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(symbols_.size()));
  }
  return symbols_[static_cast<std::size_t>(id)];
}

IdSequence Vocabulary::encode(const Subwords& subwords) const {
  IdSequence out;
  out.reserve(subwords.size());
  for (const auto& s : subwords) out.push_back(id(s));
  return out;
}

Subwords Vocabulary::decode(std::span<const TokenId> ids) const {
  Subwords out;
  for (TokenId id : ids) {
    if (id < kNumReserved) continue;
    out.push_back(symbol(id));
  }
  return out;
}

}  // namespace adaptmt
