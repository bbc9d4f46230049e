#pragma once

#include <filesystem>
#include <string>

#include "adaptmt/bpe.hpp"
#include "adaptmt/corpus.hpp"
#include "adaptmt/model.hpp"
#include "adaptmt/optim.hpp"
#include "adaptmt/vocab.hpp"

namespace adaptmt {

// Everything needed to translate: parameters plus the subword pipeline that
// maps text to ids. One vocabulary serves both sides (joint BPE).
struct TranslationSystem {
  ModelParameters params;
  Vocabulary vocab;
  BpeModel bpe;
  // FNV-1a of the checkpoint bytes this system was loaded from (or saved to).
  std::string checkpoint_hash;

  IdSequence encode_source(const Tokens& sentence) const;
  IdSequence encode_target(const Tokens& sentence) const;
  EncodedPair encode_pair(const Tokens& source, const Tokens& target) const;
  Tokens decode(std::span<const TokenId> ids) const;
};

inline constexpr int kCheckpointVersion = 1;

// Text header (format version, dimensions, vocab sizes, BPE hash, symbol
// table) followed by every tensor in declaration order as little-endian
// float32, row-major, each preceded by its u32 rows and cols.
std::string serialize_checkpoint(const ModelParameters& params, const Vocabulary& vocab, const BpeModel& bpe);
void save_checkpoint(const std::filesystem::path& path, TranslationSystem& system);

// Throws CheckpointError on a corrupt file, a BPE hash mismatch or tensor
// shapes that disagree with the declared dimensions.
TranslationSystem parse_checkpoint(const std::string& bytes, const BpeModel& bpe);
TranslationSystem load_checkpoint(const std::filesystem::path& path, const BpeModel& bpe);

struct SystemTrainingOptions {
  std::size_t merges = 500;
  int embed_size = 64;
  int hidden_size = 64;
  bool bidirectional = false;
  std::uint64_t init_seed = 1;
  TrainOptions train;
};

struct TrainedSystem {
  TranslationSystem system;
  TrainResult result;
};

// Learns joint BPE on both sides of `train_corpus`, builds the vocabulary,
// initialises and trains a model. The checkpoint hash is left empty until
// the system is saved.
TrainedSystem train_system(const ParallelCorpus& train_corpus, const ParallelCorpus& dev,
                           const SystemTrainingOptions& options);

}  // namespace adaptmt
