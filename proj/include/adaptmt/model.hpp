#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "adaptmt/vocab.hpp"

namespace adaptmt {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct ModelConfig {
  int source_vocab = 0;
  int target_vocab = 0;
  int embed_size = 64;
  int hidden_size = 64;
  bool bidirectional = false;

  int annotation_size() const { return bidirectional ? 2 * hidden_size : hidden_size; }
  int attention_size() const { return hidden_size; }
  bool operator==(const ModelConfig&) const = default;
};

// Every weight tensor of the encoder-decoder, listed once so that the
// optimizer, the checkpoint writer and the gradient check all walk the same
// fixed order.
#define ADAPTMT_TENSOR_LIST(X) \
  X(source_embedding)          \
  X(target_embedding)          \
  X(encoder_fwd_w)             \
  X(encoder_fwd_b)             \
  X(encoder_bwd_w)             \
  X(encoder_bwd_b)             \
  X(init_w)                    \
  X(init_b)                    \
  X(attention_query)           \
  X(attention_key)             \
  X(attention_bias)            \
  X(attention_score)           \
  X(decoder_w)                 \
  X(decoder_b)                 \
  X(output_w)                  \
  X(output_b)

struct Tensors {
  Matrix source_embedding;  // Vs x E, one row per id
  Matrix target_embedding;  // Vt x E
  Matrix encoder_fwd_w;     // 4H x (E + H), gate order i f g o
  Vector encoder_fwd_b;
  Matrix encoder_bwd_w;  // empty unless bidirectional
  Vector encoder_bwd_b;
  Matrix init_w;  // H x A
  Vector init_b;
  Matrix attention_query;  // Da x H
  Matrix attention_key;    // Da x A
  Vector attention_bias;   // Da
  Vector attention_score;  // Da
  Matrix decoder_w;        // 4H x (E + A + H)
  Vector decoder_b;
  Matrix output_w;  // Vt x (H + A)
  Vector output_b;

  // Calls f(name, tensor) for every tensor in declaration order.
  template <class F>
  void for_each(F&& f) {
#define ADAPTMT_VISIT(name) f(std::string_view(#name), name);
    ADAPTMT_TENSOR_LIST(ADAPTMT_VISIT)
#undef ADAPTMT_VISIT
  }
  template <class F>
  void for_each(F&& f) const {
#define ADAPTMT_VISIT(name) f(std::string_view(#name), name);
    ADAPTMT_TENSOR_LIST(ADAPTMT_VISIT)
#undef ADAPTMT_VISIT
  }
  // Calls f(name, mine, theirs) pairing tensors of two same-shaped sets.
  template <class F>
  void zip(const Tensors& other, F&& f) {
#define ADAPTMT_VISIT(name) f(std::string_view(#name), name, other.name);
    ADAPTMT_TENSOR_LIST(ADAPTMT_VISIT)
#undef ADAPTMT_VISIT
  }

  std::size_t parameter_count() const;
  bool all_finite() const;
  bool same_shape(const Tensors& other) const;
  void set_zero();
  Tensors& operator+=(const Tensors& other);
  Tensors& operator*=(double s);
  bool operator==(const Tensors& other) const;
};

using Gradient = Tensors;

struct ModelParameters {
  ModelConfig config;
  Tensors weights;
  // Bumped by every optimizer write; forward traces remember the value they
  // were computed against.
  std::uint64_t generation = 0;
};

// Uniform [-0.1, 0.1] initialization with forget-gate biases set to 1.
ModelParameters init_parameters(const ModelConfig& config, std::uint64_t seed);

Tensors zeros_like(const ModelParameters& params);

struct LstmStep {
  Vector input;  // [x; h_prev]
  Vector c_prev;
  Vector i, f, g, o;
  Vector c, tanh_c, h;
};

struct DecoderStepTrace {
  Vector query;      // attention_query * s_prev
  Matrix hidden;     // S x Da, tanh activations of the attention MLP
  Vector attention;  // S, sums to one
  Vector context;    // A
  LstmStep lstm;
  Vector log_probs;  // Vt
};

struct ForwardTrace {
  const ModelParameters* params = nullptr;
  std::uint64_t generation = 0;
  IdSequence x, y;
  double smoothing = 0.0;

  std::vector<LstmStep> encoder_fwd, encoder_bwd;
  Matrix annotations;  // S x A
  Matrix keys;         // S x Da
  Vector mean_annotation;
  Vector init_state;
  std::vector<DecoderStepTrace> steps;  // one per predicted target token
};

struct ForwardResult {
  double log_likelihood = 0.0;
  ForwardTrace trace;
};

struct LossResult {
  double loss = 0.0;
  ForwardTrace trace;
};

// log p(y | x) summed over the predicted positions of y. `x` is the source id
// sequence (non-empty); `y` starts with bos and ends with eos.
ForwardResult forward(const ModelParameters& params, std::span<const TokenId> x,
                      std::span<const TokenId> y);

// Mean over target positions of the cross-entropy against the smoothed gold
// distribution: 1 - smoothing on the gold id, smoothing / (V - 1) elsewhere.
LossResult loss(const ModelParameters& params, std::span<const TokenId> x, std::span<const TokenId> y,
                double smoothing);

// Exact gradient of loss() w.r.t. every tensor. Throws TraceError if the trace
// was not produced by loss() on the same arguments.
Gradient backward(const ModelParameters& params, const ForwardTrace& trace, std::span<const TokenId> x,
                  std::span<const TokenId> y, double smoothing);

// Convenience: loss value and gradient in one call.
std::pair<double, Gradient> loss_and_gradient(const ModelParameters& params, std::span<const TokenId> x,
                                              std::span<const TokenId> y, double smoothing);

// Incremental decoding interface shared with search.
struct EncoderOutput {
  Matrix annotations;
  Matrix keys;
  Vector init_state;
};

struct DecoderState {
  Vector h;
  Vector c;
};

EncoderOutput encode(const ModelParameters& params, std::span<const TokenId> x);
DecoderState initial_state(const ModelParameters& params, const EncoderOutput& enc);
// Advances the decoder by one token; returns log-probabilities of the next id.
Vector decode_step(const ModelParameters& params, const EncoderOutput& enc, DecoderState& state,
                   TokenId previous);

// Log-sum-exp stabilized.
Vector log_softmax(const Vector& logits);

}  // namespace adaptmt
