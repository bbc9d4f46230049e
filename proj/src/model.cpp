#include "adaptmt/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "adaptmt/error.hpp"

namespace adaptmt {

std::size_t Tensors::parameter_count() const {
  std::size_t n = 0;
  for_each([&](std::string_view, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

bool Tensors::all_finite() const {
  bool ok = true;
  for_each([&](std::string_view, const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

bool Tensors::same_shape(const Tensors& other) const {
  bool ok = true;
  const_cast<Tensors*>(this)->zip(other, [&](std::string_view, const auto& a, const auto& b) {
    ok = ok && a.rows() == b.rows() && a.cols() == b.cols();
  });
  return ok;
}

void Tensors::set_zero() {
  for_each([](std::string_view, auto& t) { t.setZero(); });
}

Tensors& Tensors::operator+=(const Tensors& other) {
  zip(other, [](std::string_view, auto& a, const auto& b) { a += b; });
  return *this;
}

Tensors& Tensors::operator*=(double s) {
  for_each([s](std::string_view, auto& t) { t *= s; });
  return *this;
}

bool Tensors::operator==(const Tensors& other) const {
  if (!same_shape(other)) return false;
  bool eq = true;
  const_cast<Tensors*>(this)->zip(other, [&](std::string_view, const auto& a, const auto& b) {
    eq = eq && (a.array() == b.array()).all();
  });
  return eq;
}

namespace {

void shape(Tensors& t, const ModelConfig& c) {
  const int E = c.embed_size, H = c.hidden_size, A = c.annotation_size(), Da = c.attention_size();
  t.source_embedding.resize(c.source_vocab, E);
  t.target_embedding.resize(c.target_vocab, E);
  t.encoder_fwd_w.resize(4 * H, E + H);
  t.encoder_fwd_b.resize(4 * H);
  t.encoder_bwd_w.resize(c.bidirectional ? 4 * H : 0, c.bidirectional ? E + H : 0);
  t.encoder_bwd_b.resize(c.bidirectional ? 4 * H : 0);
  t.init_w.resize(H, A);
  t.init_b.resize(H);
  t.attention_query.resize(Da, H);
  t.attention_key.resize(Da, A);
  t.attention_bias.resize(Da);
  t.attention_score.resize(Da);
  t.decoder_w.resize(4 * H, E + A + H);
  t.decoder_b.resize(4 * H);
  t.output_w.resize(c.target_vocab, H + A);
  t.output_b.resize(c.target_vocab);
}

void validate_config(const ModelConfig& c) {
  if (c.source_vocab <= kNumReserved || c.target_vocab <= kNumReserved) {
    throw ValidationError("vocabularies must contain more than the reserved symbols");
  }
  if (c.embed_size <= 0 || c.hidden_size <= 0) throw ValidationError("model dimensions must be positive");
}

}  // namespace

ModelParameters init_parameters(const ModelConfig& config, std::uint64_t seed) {
  validate_config(config);
  ModelParameters p;
  p.config = config;
  shape(p.weights, config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-0.1, 0.1);
  p.weights.for_each([&](std::string_view, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = uni(rng);
  });
  const int H = config.hidden_size;
  p.weights.encoder_fwd_b.segment(H, H).setOnes();
  if (config.bidirectional) p.weights.encoder_bwd_b.segment(H, H).setOnes();
  p.weights.decoder_b.segment(H, H).setOnes();
  return p;
}

Tensors zeros_like(const ModelParameters& params) {
  Tensors g;
  shape(g, params.config);
  g.set_zero();
  return g;
}

Vector log_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

namespace {

Vector sigmoid(const Vector& z) { return (1.0 + (-z.array()).exp()).inverse(); }

void lstm_forward(const Matrix& w, const Vector& b, Vector input, Vector c_prev, LstmStep& s) {
  const Eigen::Index H = b.size() / 4;
  Vector z = w * input + b;
  s.i = sigmoid(z.segment(0, H));
  s.f = sigmoid(z.segment(H, H));
  s.g = z.segment(2 * H, H).array().tanh();
  s.o = sigmoid(z.segment(3 * H, H));
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
  s.tanh_c = s.c.array().tanh();
  s.h = s.o.cwiseProduct(s.tanh_c);
  s.input = std::move(input);
  s.c_prev = std::move(c_prev);
}

// Accumulates weight gradients; returns d(input) and d(c_prev) through out-params.
void lstm_backward(const Matrix& w, const LstmStep& s, const Vector& dh, const Vector& dc, Matrix& dw,
                   Vector& db, Vector& d_input, Vector& dc_prev) {
  const Eigen::Index H = s.h.size();
  Vector dc_total = dc.array() + dh.array() * s.o.array() * (1.0 - s.tanh_c.array().square());
  Vector dz(4 * H);
  dz.segment(0, H) = dc_total.array() * s.g.array() * s.i.array() * (1.0 - s.i.array());
  dz.segment(H, H) = dc_total.array() * s.c_prev.array() * s.f.array() * (1.0 - s.f.array());
  dz.segment(2 * H, H) = dc_total.array() * s.i.array() * (1.0 - s.g.array().square());
  dz.segment(3 * H, H) = dh.array() * s.tanh_c.array() * s.o.array() * (1.0 - s.o.array());
  dw.noalias() += dz * s.input.transpose();
  db += dz;
  d_input.noalias() = w.transpose() * dz;
  dc_prev = dc_total.cwiseProduct(s.f);
}

void check_ids(std::span<const TokenId> ids, int vocab, const char* side) {
  for (TokenId id : ids) {
    if (id < 0 || id >= vocab) {
      throw VocabularyError(std::string(side) + " id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(vocab));
    }
  }
}

void check_inputs(const ModelParameters& params, std::span<const TokenId> x, std::span<const TokenId> y) {
  if (x.empty()) throw ValidationError("source sequence is empty");
  if (y.size() < 2 || y.front() != kBosId || y.back() != kEosId) {
    throw ValidationError("target sequence must be framed with bos ... eos");
  }
  check_ids(x, params.config.source_vocab, "source");
  check_ids(y, params.config.target_vocab, "target");
}

// Runs both encoder directions and fills annotations, keys and the initial
// decoder state. Caches are stored only when the pointers are non-null.
void run_encoder(const ModelParameters& params, std::span<const TokenId> x, Matrix& annotations, Matrix& keys,
                 Vector& mean_annotation, Vector& init_state, std::vector<LstmStep>* fwd_cache,
                 std::vector<LstmStep>* bwd_cache) {
  const auto& w = params.weights;
  const int E = params.config.embed_size, H = params.config.hidden_size;
  const auto S = static_cast<Eigen::Index>(x.size());
  annotations.resize(S, params.config.annotation_size());

  auto run = [&](const Matrix& lw, const Vector& lb, bool reverse, int column, std::vector<LstmStep>* cache) {
    Vector h = Vector::Zero(H), c = Vector::Zero(H);
    LstmStep step;
    if (cache) cache->resize(static_cast<std::size_t>(S));
    for (Eigen::Index k = 0; k < S; ++k) {
      const Eigen::Index j = reverse ? S - 1 - k : k;
      Vector input(E + H);
      input << w.source_embedding.row(x[static_cast<std::size_t>(j)]).transpose(), h;
      LstmStep& s = cache ? (*cache)[static_cast<std::size_t>(j)] : step;
      lstm_forward(lw, lb, std::move(input), std::move(c), s);
      h = s.h;
      c = s.c;
      annotations.row(j).segment(column, H) = h.transpose();
    }
  };
  run(w.encoder_fwd_w, w.encoder_fwd_b, false, 0, fwd_cache);
  if (params.config.bidirectional) run(w.encoder_bwd_w, w.encoder_bwd_b, true, H, bwd_cache);

  keys = annotations * w.attention_key.transpose();
  keys.rowwise() += w.attention_bias.transpose();
  mean_annotation = annotations.colwise().mean().transpose();
  init_state = (w.init_w * mean_annotation + w.init_b).array().tanh();
}

// One decoder step: attention over the annotations from s_prev, LSTM update
// on [embedding(previous); context], then the output distribution.
void run_decoder_step(const ModelParameters& params, const Matrix& annotations, const Matrix& keys,
                      const Vector& s_prev, const Vector& c_prev, TokenId previous, DecoderStepTrace& t) {
  const auto& w = params.weights;
  const int E = params.config.embed_size, H = params.config.hidden_size;
  const int A = params.config.annotation_size();

  t.query = w.attention_query * s_prev;
  t.hidden = (keys.rowwise() + t.query.transpose()).array().tanh();
  Vector scores = t.hidden * w.attention_score;
  t.attention = log_softmax(scores).array().exp();
  t.context = annotations.transpose() * t.attention;

  Vector input(E + A + H);
  input << w.target_embedding.row(previous).transpose(), t.context, s_prev;
  lstm_forward(w.decoder_w, w.decoder_b, std::move(input), c_prev, t.lstm);

  Vector features(H + A);
  features << t.lstm.h, t.context;
  t.log_probs = log_softmax(w.output_w * features + w.output_b);
}

ForwardTrace make_trace(const ModelParameters& params, std::span<const TokenId> x, std::span<const TokenId> y) {
  check_inputs(params, x, y);
  ForwardTrace tr;
  tr.params = &params;
  tr.generation = params.generation;
  tr.x.assign(x.begin(), x.end());
  tr.y.assign(y.begin(), y.end());
  run_encoder(params, x, tr.annotations, tr.keys, tr.mean_annotation, tr.init_state, &tr.encoder_fwd,
              params.config.bidirectional ? &tr.encoder_bwd : nullptr);
  const std::size_t T = y.size() - 1;
  tr.steps.resize(T);
  Vector s = tr.init_state;
  Vector c = Vector::Zero(params.config.hidden_size);
  for (std::size_t t = 0; t < T; ++t) {
    run_decoder_step(params, tr.annotations, tr.keys, s, c, y[t], tr.steps[t]);
    s = tr.steps[t].lstm.h;
    c = tr.steps[t].lstm.c;
  }
  return tr;
}

double smoothed_cross_entropy(const Vector& log_probs, TokenId gold, double smoothing) {
  const double others = smoothing / static_cast<double>(log_probs.size() - 1);
  const double gold_lp = log_probs[gold];
  return -((1.0 - smoothing) * gold_lp + others * (log_probs.sum() - gold_lp));
}

}  // namespace

ForwardResult forward(const ModelParameters& params, std::span<const TokenId> x, std::span<const TokenId> y) {
  ForwardResult r;
  r.trace = make_trace(params, x, y);
  for (std::size_t t = 0; t < r.trace.steps.size(); ++t) r.log_likelihood += r.trace.steps[t].log_probs[y[t + 1]];
  return r;
}

LossResult loss(const ModelParameters& params, std::span<const TokenId> x, std::span<const TokenId> y,
                double smoothing) {
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw ValidationError("label smoothing must be in [0, 1)");
  LossResult r;
  r.trace = make_trace(params, x, y);
  r.trace.smoothing = smoothing;
  const std::size_t T = r.trace.steps.size();
  for (std::size_t t = 0; t < T; ++t) r.loss += smoothed_cross_entropy(r.trace.steps[t].log_probs, y[t + 1], smoothing);
  r.loss /= static_cast<double>(T);
  return r;
}

Gradient backward(const ModelParameters& params, const ForwardTrace& trace, std::span<const TokenId> x,
                  std::span<const TokenId> y, double smoothing) {
  if (trace.params != &params || trace.generation != params.generation ||
      !std::equal(x.begin(), x.end(), trace.x.begin(), trace.x.end()) ||
      !std::equal(y.begin(), y.end(), trace.y.begin(), trace.y.end()) || trace.smoothing != smoothing) {
    throw TraceError("forward trace does not match the parameters and sentence pair passed to backward");
  }
  const auto& w = params.weights;
  const int E = params.config.embed_size, H = params.config.hidden_size;
  const int A = params.config.annotation_size();
  const auto S = static_cast<Eigen::Index>(x.size());
  const std::size_t T = trace.steps.size();
  const int V = params.config.target_vocab;

  Gradient g = zeros_like(params);
  Matrix d_annotations = Matrix::Zero(S, A);
  Matrix d_keys = Matrix::Zero(S, params.config.attention_size());
  Vector ds_next = Vector::Zero(H), dc_next = Vector::Zero(H);
  Vector d_input, dc_prev;
  const double inv_T = 1.0 / static_cast<double>(T);
  const double others = smoothing / static_cast<double>(V - 1);

  for (std::size_t ti = T; ti-- > 0;) {
    const auto& st = trace.steps[ti];
    // Output layer: softmax-cross-entropy gradient is (p - q) / T.
    Vector d_logits = st.log_probs.array().exp();
    d_logits.array() -= others;
    d_logits[y[ti + 1]] -= (1.0 - smoothing) - others;
    d_logits *= inv_T;

    Vector features(H + A);
    features << st.lstm.h, st.context;
    g.output_w.noalias() += d_logits * features.transpose();
    g.output_b += d_logits;
    Vector d_features = w.output_w.transpose() * d_logits;

    Vector dh = d_features.head(H) + ds_next;
    lstm_backward(w.decoder_w, st.lstm, dh, dc_next, g.decoder_w, g.decoder_b, d_input, dc_prev);
    g.target_embedding.row(y[ti]) += d_input.head(E).transpose();
    Vector d_context = d_features.tail(A) + d_input.segment(E, A);
    Vector ds_prev = d_input.tail(H);

    // Attention.
    Vector d_alpha = trace.annotations * d_context;
    const double mix = st.attention.dot(d_alpha);
    Vector d_scores = st.attention.array() * (d_alpha.array() - mix);
    d_annotations.noalias() += st.attention * d_context.transpose();
    g.attention_score.noalias() += st.hidden.transpose() * d_scores;
    Matrix d_pre = (d_scores * w.attention_score.transpose()).array() * (1.0 - st.hidden.array().square());
    d_keys += d_pre;
    Vector d_query = d_pre.colwise().sum().transpose();
    const Vector& s_prev = st.lstm.input.tail(H);
    g.attention_query.noalias() += d_query * s_prev.transpose();
    ds_prev.noalias() += w.attention_query.transpose() * d_query;

    ds_next = std::move(ds_prev);
    dc_next = dc_prev;
  }

  g.attention_key.noalias() += d_keys.transpose() * trace.annotations;
  g.attention_bias += d_keys.colwise().sum().transpose();
  d_annotations.noalias() += d_keys * w.attention_key;

  // Initial decoder state s0 = tanh(W m + b), m = mean annotation.
  Vector d_pre_init = ds_next.array() * (1.0 - trace.init_state.array().square());
  g.init_w.noalias() += d_pre_init * trace.mean_annotation.transpose();
  g.init_b += d_pre_init;
  Vector d_mean = w.init_w.transpose() * d_pre_init;
  d_annotations.rowwise() += (d_mean / static_cast<double>(S)).transpose();

  auto run_back = [&](const Matrix& lw, const std::vector<LstmStep>& cache, Matrix& dw, Vector& db, bool reverse,
                      int column) {
    Vector dh_rec = Vector::Zero(H), dc = Vector::Zero(H);
    for (Eigen::Index k = S; k-- > 0;) {
      const Eigen::Index j = reverse ? S - 1 - k : k;
      Vector dh = d_annotations.row(j).segment(column, H).transpose() + dh_rec;
      lstm_backward(lw, cache[static_cast<std::size_t>(j)], dh, dc, dw, db, d_input, dc_prev);
      g.source_embedding.row(x[static_cast<std::size_t>(j)]) += d_input.head(E).transpose();
      dh_rec = d_input.tail(H);
      dc = dc_prev;
    }
  };
  run_back(w.encoder_fwd_w, trace.encoder_fwd, g.encoder_fwd_w, g.encoder_fwd_b, false, 0);
  if (params.config.bidirectional) {
    run_back(w.encoder_bwd_w, trace.encoder_bwd, g.encoder_bwd_w, g.encoder_bwd_b, true, H);
  }
  return g;
}

std::pair<double, Gradient> loss_and_gradient(const ModelParameters& params, std::span<const TokenId> x,
                                              std::span<const TokenId> y, double smoothing) {
  auto r = loss(params, x, y, smoothing);
  return {r.loss, backward(params, r.trace, x, y, smoothing)};
}

EncoderOutput encode(const ModelParameters& params, std::span<const TokenId> x) {
  if (x.empty()) throw ValidationError("source sequence is empty");
  check_ids(x, params.config.source_vocab, "source");
  EncoderOutput out;
  Vector mean;
  run_encoder(params, x, out.annotations, out.keys, mean, out.init_state, nullptr, nullptr);
  return out;
}

DecoderState initial_state(const ModelParameters& params, const EncoderOutput& enc) {
  return {enc.init_state, Vector::Zero(params.config.hidden_size)};
}

Vector decode_step(const ModelParameters& params, const EncoderOutput& enc, DecoderState& state, TokenId previous) {
  check_ids(std::span<const TokenId>(&previous, 1), params.config.target_vocab, "target");
  DecoderStepTrace t;
  run_decoder_step(params, enc.annotations, enc.keys, state.h, state.c, previous, t);
  state.h = std::move(t.lstm.h);
  state.c = std::move(t.lstm.c);
  return std::move(t.log_probs);
}

}  // namespace adaptmt
