#include "adaptmt/system.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "adaptmt/error.hpp"

namespace adaptmt {

IdSequence TranslationSystem::encode_source(const Tokens& sentence) const {
  IdSequence ids = vocab.encode(bpe.apply(sentence));
  ids.push_back(kEosId);
  return ids;
}

IdSequence TranslationSystem::encode_target(const Tokens& sentence) const {
  IdSequence ids{kBosId};
  auto body = vocab.encode(bpe.apply(sentence));
  ids.insert(ids.end(), body.begin(), body.end());
  ids.push_back(kEosId);
  return ids;
}

EncodedPair TranslationSystem::encode_pair(const Tokens& source, const Tokens& target) const {
  return {encode_source(source), encode_target(target)};
}

Tokens TranslationSystem::decode(std::span<const TokenId> ids) const { return bpe_revert(vocab.decode(ids)); }

namespace {

constexpr std::string_view kMagic = "adaptmt-checkpoint";

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw CheckpointError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + k])) << (8 * k);
  pos += 4;
  return v;
}

}  // namespace

std::string serialize_checkpoint(const ModelParameters& params, const Vocabulary& vocab, const BpeModel& bpe) {
  const auto& c = params.config;
  std::string symbols;
  for (std::size_t i = kNumReserved; i < vocab.size(); ++i) symbols += vocab.symbol(static_cast<TokenId>(i)) + "\n";

  std::ostringstream header;
  header << kMagic << ' ' << kCheckpointVersion << '\n'
         << "embed_size " << c.embed_size << '\n'
         << "hidden_size " << c.hidden_size << '\n'
         << "bidirectional " << (c.bidirectional ? 1 : 0) << '\n'
         << "source_vocab " << c.source_vocab << '\n'
         << "target_vocab " << c.target_vocab << '\n'
         << "bpe_hash " << hex64(bpe.hash()) << '\n'
         << "symbols_bytes " << symbols.size() << '\n'
         << "end\n";
  std::string out = header.str() + symbols;
  params.weights.for_each([&](std::string_view, const auto& t) {
    put_u32(out, static_cast<std::uint32_t>(t.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.cols()));
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(t.data()[i])));
    }
  });
  return out;
}

void save_checkpoint(const std::filesystem::path& path, TranslationSystem& system) {
  const std::string bytes = serialize_checkpoint(system.params, system.vocab, system.bpe);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
  system.checkpoint_hash = hex64(fnv1a(bytes));
}

TranslationSystem parse_checkpoint(const std::string& bytes, const BpeModel& bpe) {
  std::size_t pos = 0;
  auto next_line = [&]() {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw CheckpointError("checkpoint header truncated");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  std::istringstream first(next_line());
  std::string magic;
  int version = 0;
  if (!(first >> magic >> version) || magic != kMagic) throw CheckpointError("not an adaptmt checkpoint");
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

  std::map<std::string, std::string> fields;
  for (std::string line; (line = next_line()) != "end";) {
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key >> value)) throw CheckpointError("malformed checkpoint header line: " + line);
    fields[key] = value;
  }
  auto field = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw CheckpointError("checkpoint header lacks '" + key + "'");
    return it->second;
  };
  auto as_int = [&](const std::string& key) {
    try {
      return std::stoi(field(key));
    } catch (const std::logic_error&) {
      throw CheckpointError("checkpoint header field '" + key + "' is not an integer");
    }
  };
  if (field("bpe_hash") != hex64(bpe.hash())) {
    throw CheckpointError("checkpoint was built with BPE model " + field("bpe_hash") + ", got " + hex64(bpe.hash()));
  }
  ModelConfig config;
  config.embed_size = as_int("embed_size");
  config.hidden_size = as_int("hidden_size");
  config.bidirectional = as_int("bidirectional") != 0;
  config.source_vocab = as_int("source_vocab");
  config.target_vocab = as_int("target_vocab");
  const auto symbols_bytes = static_cast<std::size_t>(as_int("symbols_bytes"));
  if (pos + symbols_bytes > bytes.size()) throw CheckpointError("checkpoint truncated in symbol table");
  std::vector<std::string> symbols;
  std::istringstream sym(bytes.substr(pos, symbols_bytes));
  for (std::string s; std::getline(sym, s);) symbols.push_back(s);
  pos += symbols_bytes;

  TranslationSystem system;
  try {
    system.vocab = Vocabulary(symbols);
  } catch (const VocabularyError& e) {
    throw CheckpointError(std::string("checkpoint symbol table: ") + e.what());
  }
  if (static_cast<int>(system.vocab.size()) != config.source_vocab ||
      static_cast<int>(system.vocab.size()) != config.target_vocab) {
    throw CheckpointError("checkpoint symbol table size disagrees with declared vocabulary sizes");
  }
  try {
    system.params = init_parameters(config, 0);
  } catch (const ValidationError& e) {
    throw CheckpointError(std::string("checkpoint dimensions: ") + e.what());
  }
  system.params.weights.for_each([&](std::string_view name, auto& t) {
    const auto rows = get_u32(bytes, pos);
    const auto cols = get_u32(bytes, pos);
    if (rows != static_cast<std::uint32_t>(t.rows()) || cols != static_cast<std::uint32_t>(t.cols())) {
      throw CheckpointError("tensor " + std::string(name) + " has shape " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", expected " + std::to_string(t.rows()) + "x" +
                            std::to_string(t.cols()));
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      t.data()[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, pos)));
    }
  });
  if (pos != bytes.size()) throw CheckpointError("trailing bytes after last tensor");
  if (!system.params.weights.all_finite()) throw CheckpointError("checkpoint contains non-finite weights");
  system.bpe = bpe;
  system.checkpoint_hash = hex64(fnv1a(bytes));
  return system;
}

TranslationSystem load_checkpoint(const std::filesystem::path& path, const BpeModel& bpe) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str(), bpe);
}

}  // namespace adaptmt

namespace adaptmt {

TrainedSystem train_system(const ParallelCorpus& train_corpus, const ParallelCorpus& dev,
                           const SystemTrainingOptions& options) {
  if (train_corpus.empty()) throw ValidationError("training corpus is empty");
  auto text = train_corpus.sources();
  const auto targets = train_corpus.targets();
  text.insert(text.end(), targets.begin(), targets.end());

  TrainedSystem out;
  out.system.bpe = bpe_learn(text, options.merges);
  out.system.vocab = Vocabulary::from_bpe(out.system.bpe);

  ModelConfig config;
  config.source_vocab = config.target_vocab = static_cast<int>(out.system.vocab.size());
  config.embed_size = options.embed_size;
  config.hidden_size = options.hidden_size;
  config.bidirectional = options.bidirectional;
  const auto initial = init_parameters(config, options.init_seed);

  std::vector<EncodedPair> train_pairs, dev_pairs;
  for (const auto& p : train_corpus.pairs()) train_pairs.push_back(out.system.encode_pair(p.source, p.target));
  for (const auto& p : dev.pairs()) dev_pairs.push_back(out.system.encode_pair(p.source, p.target));
  out.result = train(initial, train_pairs, dev_pairs, options.train);
  out.system.params = out.result.best;
  return out;
}

}  // namespace adaptmt
