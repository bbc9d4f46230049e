#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaptmt/model.hpp"

namespace adaptmt {

struct AdamState {
  Tensors first_moment;
  Tensors second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.0002;

  static AdamState fresh(const ModelParameters& params, double learning_rate);
};

// Bias-corrected Adam. A non-finite gradient raises NumericError and leaves
// both params and state untouched.
void adam_step(ModelParameters& params, const Gradient& grad, AdamState& state);

// theta -= lr * grad. lr must be > 0; non-finite gradients are refused.
void sgd_step(ModelParameters& params, const Gradient& grad, double learning_rate);

// Rescales grad in place when its global L2 norm exceeds max_norm.
void clip_gradient(Gradient& grad, double max_norm);

struct OnlineUpdatePolicy {
  int updates_per_sample = 2;
  double learning_rate = 0.05;
  // Recompute loss and gradient before every pass. When false, the first
  // gradient is applied updates_per_sample times.
  bool recompute_gradient = true;
  double smoothing = 0.0;
  std::optional<double> clip_norm;

  void validate() const;
};

struct EncodedPair {
  IdSequence x;  // source ids followed by eos
  IdSequence y;  // bos, target ids, eos
};

// Applies policy.updates_per_sample SGD passes on one pair. On any numeric
// failure the parameters are restored bit-for-bit and the error rethrown.
// Returns the number of SGD steps applied.
int online_update(ModelParameters& params, const EncodedPair& pair, const OnlineUpdatePolicy& policy);

struct TrainOptions {
  std::size_t batch_size = 60;
  std::size_t epochs = 10;
  double learning_rate = 0.0002;
  double smoothing = 0.1;
  std::uint64_t seed = 1;
  std::optional<double> clip_norm;
  // Worker threads for per-sentence gradients; 0 picks hardware concurrency.
  // Results do not depend on this value.
  unsigned threads = 0;
  // Invoked after every epoch with (epoch, train loss, dev loss).
  std::function<void(std::size_t, double, double)> on_epoch;
};

struct TrainResult {
  ModelParameters best;
  std::vector<double> dev_loss;    // unsmoothed cross-entropy per token, per epoch
  std::vector<double> train_loss;  // smoothed training loss, per epoch
  std::size_t best_epoch = 0;      // 1-based; 0 when no epoch ran
  std::size_t updates = 0;
};

// Shuffled mini-batch Adam. A batch gradient is the mean of its per-sentence
// gradients. Returns the parameters of the epoch with the lowest dev loss.
TrainResult train(const ModelParameters& initial, const std::vector<EncodedPair>& corpus,
                  const std::vector<EncodedPair>& dev, const TrainOptions& options);

// Mean per-token cross-entropy (no smoothing) over a set of pairs.
double mean_token_loss(const ModelParameters& params, const std::vector<EncodedPair>& pairs);

// Flat key=value configuration, one entry per line, '#' comments.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace adaptmt
