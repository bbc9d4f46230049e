#include "adaptmt/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "adaptmt/error.hpp"

namespace adaptmt {

namespace {

Subwords initial_symbols(const std::string& word) {
  Subwords symbols = utf8_chars(word);
  if (!symbols.empty()) symbols.back() += BpeModel::kEndOfWord;
  return symbols;
}

// Replaces every non-overlapping left-to-right occurrence of (left, right).
bool merge_pair(Subwords& symbols, const std::string& left, const std::string& right) {
  bool changed = false;
  std::size_t out = 0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      symbols[out++] = left + right;
      ++i;
      changed = true;
    } else {
      if (out != i) symbols[out] = std::move(symbols[i]);
      ++out;
    }
  }
  symbols.resize(out);
  return changed;
}

}  // namespace

BpeModel::BpeModel(std::vector<std::pair<std::string, std::string>> merges,
                   std::set<std::string> alphabet)
    : merges_(std::move(merges)), vocab_(std::move(alphabet)) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& m : merges_) {
    if (!seen.insert(m).second) {
      throw ValidationError("duplicate merge (" + m.first + ", " + m.second + ")");
    }
    vocab_.insert(m.first);
    vocab_.insert(m.second);
    vocab_.insert(m.first + m.second);
  }
}

Subwords BpeModel::apply_word(const std::string& word) const {
  Subwords symbols = initial_symbols(word);
  for (const auto& [left, right] : merges_) {
    if (symbols.size() < 2) break;
    merge_pair(symbols, left, right);
  }
  return symbols;
}

Subwords BpeModel::apply(const Tokens& sentence) const {
  Subwords out;
  for (const auto& word : sentence) {
    auto pieces = apply_word(word);
    out.insert(out.end(), std::make_move_iterator(pieces.begin()), std::make_move_iterator(pieces.end()));
  }
  return out;
}

std::string BpeModel::serialize() const {
  std::ostringstream out;
  out << "#adaptmt-bpe version " << kFormatVersion << " merges " << merges_.size() << '\n';
  for (const auto& [l, r] : merges_) out << l << '\t' << r << '\n';
  // Characters that never took part in a merge are not recoverable from the
  // merge list; they follow as single-column lines.
  std::set<std::string> from_merges;
  for (const auto& [l, r] : merges_) {
    from_merges.insert(l);
    from_merges.insert(r);
    from_merges.insert(l + r);
  }
  for (const auto& s : vocab_) {
    if (!from_merges.count(s)) out << s << '\n';
  }
  return out.str();
}

BpeModel BpeModel::parse(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header)) throw ValidationError("empty BPE model");
  std::istringstream hs(header);
  std::string magic, vword, mword;
  int version = 0;
  std::size_t count = 0;
  if (!(hs >> magic >> vword >> version >> mword >> count) || magic != "#adaptmt-bpe" ||
      vword != "version" || mword != "merges") {
    throw ValidationError("malformed BPE header: " + header);
  }
  if (version != kFormatVersion) {
    throw ValidationError("unsupported BPE model version " + std::to_string(version));
  }
  std::vector<std::pair<std::string, std::string>> merges;
  std::set<std::string> alphabet;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (merges.size() < count) {
      if (tab == std::string::npos) throw ValidationError("malformed merge line: " + line);
      merges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    } else {
      alphabet.insert(line);
    }
  }
  if (merges.size() != count) {
    throw ValidationError("BPE header declares " + std::to_string(count) + " merges, found " +
                          std::to_string(merges.size()));
  }
  return BpeModel(std::move(merges), std::move(alphabet));
}

void BpeModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize();
}

BpeModel BpeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::uint64_t BpeModel::hash() const { return fnv1a(serialize()); }

BpeModel bpe_learn(std::span<const Tokens> corpus_text, std::size_t num_merges) {
  if (corpus_text.empty()) throw ValidationError("cannot learn BPE from an empty corpus");

  std::map<std::string, long> word_freq;
  for (const auto& sentence : corpus_text) {
    for (const auto& w : sentence) ++word_freq[w];
  }
  std::vector<Subwords> words;
  std::vector<long> freqs;
  std::set<std::string> alphabet;
  for (const auto& [w, f] : word_freq) {
    words.push_back(initial_symbols(w));
    freqs.push_back(f);
    for (const auto& s : words.back()) alphabet.insert(s);
  }

  std::vector<std::pair<std::string, std::string>> merges;
  // Pair statistics are recounted each round; desk-scale vocabularies keep
  // this well under a second for a few thousand merges.
  while (merges.size() < num_merges) {
    std::map<std::pair<std::string, std::string>, long> pair_freq;
    for (std::size_t i = 0; i < words.size(); ++i) {
      const auto& sym = words[i];
      for (std::size_t k = 0; k + 1 < sym.size(); ++k) pair_freq[{sym[k], sym[k + 1]}] += freqs[i];
    }
    const std::pair<std::string, std::string>* best = nullptr;
    long best_freq = 0;
    // std::map iterates in (left, right) order, so the first maximum wins ties.
    for (const auto& [pair, f] : pair_freq) {
      if (f > best_freq) {
        best_freq = f;
        best = &pair;
      }
    }
    if (!best || best_freq < 2) break;
    auto merge = *best;
    for (auto& sym : words) merge_pair(sym, merge.first, merge.second);
    merges.push_back(std::move(merge));
  }
  return BpeModel(std::move(merges), std::move(alphabet));
}

Subwords bpe_apply(const BpeModel& model, const Tokens& sentence) { return model.apply(sentence); }

Tokens bpe_revert(const Subwords& subwords) {
  Tokens out;
  std::string current;
  bool open = false;
  const auto marker = BpeModel::kEndOfWord;
  for (const auto& s : subwords) {
    if (s.size() >= marker.size() && s.compare(s.size() - marker.size(), marker.size(), marker) == 0) {
      current.append(s, 0, s.size() - marker.size());
      out.push_back(std::move(current));
      current.clear();
      open = false;
    } else {
      current += s;
      open = true;
    }
  }
  if (open && !current.empty()) out.push_back(std::move(current));
  return out;
}

NovelWordAudit::NovelWordAudit(std::span<const Tokens> training_targets) {
  for (const auto& s : training_targets) known_.insert(s.begin(), s.end());
}

std::vector<std::string> NovelWordAudit::novel_words(const Tokens& output) const {
  std::vector<std::string> out;
  if (known_.empty()) return out;
  for (const auto& w : output) {
    if (!known_.count(w)) out.push_back(w);
  }
  return out;
}

std::vector<std::string> NovelWordAudit::known_words_sorted() const {
  std::vector<std::string> out(known_.begin(), known_.end());
  std::sort(out.begin(), out.end());
  return out;
}

NovelWordAudit NovelWordAudit::from_word_list(const std::vector<std::string>& words) {
  NovelWordAudit audit;
  audit.known_.insert(words.begin(), words.end());
  return audit;
}

}  // namespace adaptmt
