#include "adaptmt/optim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "adaptmt/error.hpp"

namespace adaptmt {

AdamState AdamState::fresh(const ModelParameters& params, double learning_rate) {
  AdamState s;
  s.first_moment = zeros_like(params);
  s.second_moment = zeros_like(params);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(ModelParameters& params, const Gradient& grad, AdamState& state) {
  if (!params.weights.same_shape(grad) || !params.weights.same_shape(state.first_moment)) {
    throw ValidationError("adam_step: gradient or state shape differs from parameters");
  }
  if (!grad.all_finite()) throw NumericError("adam_step: non-finite gradient");
  const double t = static_cast<double>(state.step + 1);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1, b2 = state.beta2, eps = state.epsilon, lr = state.learning_rate;

  state.first_moment.zip(grad, [&](std::string_view, auto& m, const auto& g) { m = b1 * m + (1.0 - b1) * g; });
  state.second_moment.zip(grad,
                          [&](std::string_view, auto& v, const auto& g) { v = b2 * v + (1.0 - b2) * g.cwiseProduct(g); });
  // Walk params, m and v in lockstep through the shared tensor order.
  std::vector<const double*> m_ptrs, v_ptrs;
  state.first_moment.for_each([&](std::string_view, const auto& m) { m_ptrs.push_back(m.data()); });
  state.second_moment.for_each([&](std::string_view, const auto& v) { v_ptrs.push_back(v.data()); });
  std::size_t k = 0;
  params.weights.for_each([&](std::string_view, auto& p) {
    const double* m = m_ptrs[k];
    const double* v = v_ptrs[k];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      p.data()[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
    ++k;
  });
  state.step += 1;
  params.generation += 1;
}

void sgd_step(ModelParameters& params, const Gradient& grad, double learning_rate) {
  if (!(learning_rate > 0.0)) throw ValidationError("sgd_step: learning rate must be > 0");
  if (!params.weights.same_shape(grad)) throw ValidationError("sgd_step: gradient shape differs from parameters");
  if (!grad.all_finite()) throw NumericError("sgd_step: non-finite gradient");
  params.weights.zip(grad, [&](std::string_view, auto& p, const auto& g) { p -= learning_rate * g; });
  params.generation += 1;
}

void clip_gradient(Gradient& grad, double max_norm) {
  double sq = 0.0;
  grad.for_each([&](std::string_view, const auto& t) { sq += t.squaredNorm(); });
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
}

void OnlineUpdatePolicy::validate() const {
  if (updates_per_sample < 1) throw ValidationError("updates_per_sample must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("online learning rate must be > 0");
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw ValidationError("smoothing must be in [0, 1)");
}

int online_update(ModelParameters& params, const EncodedPair& pair, const OnlineUpdatePolicy& policy) {
  policy.validate();
  const ModelParameters saved = params;
  int steps = 0;
  try {
    Gradient grad;
    for (int pass = 0; pass < policy.updates_per_sample; ++pass) {
      if (pass == 0 || policy.recompute_gradient) {
        auto [value, g] = loss_and_gradient(params, pair.x, pair.y, policy.smoothing);
        if (!std::isfinite(value)) throw NumericError("online_update: non-finite loss");
        grad = std::move(g);
        if (policy.clip_norm) clip_gradient(grad, *policy.clip_norm);
      }
      sgd_step(params, grad, policy.learning_rate);
      ++steps;
    }
    if (!params.weights.all_finite()) throw NumericError("online_update: parameters became non-finite");
  } catch (...) {
    params = saved;
    throw;
  }
  return steps;
}

double mean_token_loss(const ModelParameters& params, const std::vector<EncodedPair>& pairs) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& p : pairs) {
    total -= forward(params, p.x, p.y).log_likelihood;
    tokens += p.y.size() - 1;
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

namespace {

// Per-sentence gradients are summed in fixed-size chunks and the chunk sums
// are added in order, so the batch gradient is identical for any thread count.
constexpr std::size_t kChunk = 4;

double batch_gradient(const ModelParameters& params, const std::vector<EncodedPair>& corpus,
                      const std::vector<std::size_t>& batch, double smoothing, unsigned threads, Gradient& out) {
  const std::size_t n_chunks = (batch.size() + kChunk - 1) / kChunk;
  std::vector<Gradient> chunk_grad(n_chunks);
  std::vector<double> chunk_loss(n_chunks, 0.0);
  auto work = [&](std::size_t c) {
    Gradient g = zeros_like(params);
    double l = 0.0;
    for (std::size_t k = c * kChunk; k < std::min(batch.size(), (c + 1) * kChunk); ++k) {
      const auto& p = corpus[batch[k]];
      auto [value, grad] = loss_and_gradient(params, p.x, p.y, smoothing);
      g += grad;
      l += value;
    }
    chunk_grad[c] = std::move(g);
    chunk_loss[c] = l;
  };
  const unsigned n_threads = std::min<unsigned>(threads, static_cast<unsigned>(n_chunks));
  if (n_threads <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) work(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t c; (c = next.fetch_add(1)) < n_chunks;) work(c);
      });
    }
  }
  out = std::move(chunk_grad[0]);
  double total = chunk_loss[0];
  for (std::size_t c = 1; c < n_chunks; ++c) {
    out += chunk_grad[c];
    total += chunk_loss[c];
  }
  out *= 1.0 / static_cast<double>(batch.size());
  return total;
}

}  // namespace

TrainResult train(const ModelParameters& initial, const std::vector<EncodedPair>& corpus,
                  const std::vector<EncodedPair>& dev, const TrainOptions& options) {
  if (options.batch_size < 1) throw ValidationError("batch size must be >= 1");
  TrainResult result;
  result.best = initial;
  if (options.epochs == 0) return result;
  if (corpus.empty()) throw ValidationError("cannot train on an empty corpus");

  const unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  ModelParameters params = initial;
  AdamState adam = AdamState::fresh(params, options.learning_rate);
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  double best_dev = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += options.batch_size, ++b) {
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + options.batch_size)));
      Gradient grad;
      try {
        epoch_loss += batch_gradient(params, corpus, batch, options.smoothing, threads, grad);
        if (options.clip_norm) clip_gradient(grad, *options.clip_norm);
        adam_step(params, grad, adam);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1) + ": " + e.what());
      }
      ++result.updates;
    }
    const double train_loss = epoch_loss / static_cast<double>(corpus.size());
    const double dev_loss = dev.empty() ? train_loss : mean_token_loss(params, dev);
    result.train_loss.push_back(train_loss);
    result.dev_loss.push_back(dev_loss);
    if (dev_loss < best_dev) {
      best_dev = dev_loss;
      result.best = params;
      result.best_epoch = epoch;
    }
    if (options.on_epoch) options.on_epoch(epoch, train_loss, dev_loss);
  }
  return result;
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("config line " + std::to_string(lineno) + ": expected key=value");
    cfg.values_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string KeyValueConfig::serialize() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  return out.str();
}

void KeyValueConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize();
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' is not a number: " + it->second);
  }
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' is not an integer: " + it->second);
  }
}

}  // namespace adaptmt
