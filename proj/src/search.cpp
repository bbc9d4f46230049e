#include "adaptmt/search.hpp"

#include <algorithm>
#include <limits>

#include "adaptmt/error.hpp"

namespace adaptmt {

std::size_t default_max_len(std::size_t source_length) { return 2 * source_length + 5; }

double normalize_score(double score, std::size_t length, LengthNormalization policy) {
  if (policy == LengthNormalization::kNone || length == 0) return score;
  return score / static_cast<double>(length);
}

namespace {

bool generable(TokenId id) { return id != kPadId && id != kBosId; }

struct Live {
  IdSequence tokens;
  double score = 0.0;
  DecoderState state;
};

struct Candidate {
  std::size_t parent;
  TokenId token;
  double score;
};

// Lexicographic comparison of parent.tokens + [token].
bool sequence_less(const IdSequence& a, TokenId ta, const IdSequence& b, TokenId tb) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  if (a.size() != b.size()) return a.size() < b.size();  // live hypotheses share one length
  return ta < tb;
}

bool hypothesis_better(const Hypothesis& a, const Hypothesis& b) {
  if (a.normalized_score != b.normalized_score) return a.normalized_score > b.normalized_score;
  return a.tokens < b.tokens;
}

}  // namespace

std::vector<Hypothesis> beam_search(const ModelParameters& params, std::span<const TokenId> x, std::size_t beam_size,
                                    std::size_t max_len, LengthNormalization normalization) {
  if (beam_size < 1) throw ValidationError("beam size must be >= 1");
  if (max_len < 1) throw ValidationError("max_len must be >= 1");
  const EncoderOutput enc = encode(params, x);
  const int V = params.config.target_vocab;

  std::vector<Live> live{{{}, 0.0, initial_state(params, enc)}};
  std::vector<Hypothesis> finished;

  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Candidate> candidates;
    std::vector<DecoderState> next_states(live.size());
    candidates.reserve(live.size() * static_cast<std::size_t>(V));
    for (std::size_t h = 0; h < live.size(); ++h) {
      next_states[h] = live[h].state;
      const TokenId prev = live[h].tokens.empty() ? kBosId : live[h].tokens.back();
      const Vector log_probs = decode_step(params, enc, next_states[h], prev);
      for (TokenId v = 0; v < V; ++v) {
        if (generable(v)) candidates.push_back({h, v, live[h].score + log_probs[v]});
      }
    }
    const std::size_t keep = std::min(beam_size, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      [&](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        return sequence_less(live[a.parent].tokens, a.token, live[b.parent].tokens, b.token);
                      });
    std::vector<Live> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const auto& c = candidates[k];
      IdSequence tokens = live[c.parent].tokens;
      tokens.push_back(c.token);
      if (c.token == kEosId) {
        const std::size_t len = tokens.size();
        finished.push_back({std::move(tokens), c.score, normalize_score(c.score, len, normalization), true});
      } else {
        next.push_back({std::move(tokens), c.score, next_states[c.parent]});
      }
    }
    live = std::move(next);
  }

  std::vector<Hypothesis> out;
  if (!finished.empty()) {
    out = std::move(finished);
  } else {
    for (auto& l : live) {
      const std::size_t len = l.tokens.size();
      out.push_back({std::move(l.tokens), l.score, normalize_score(l.score, len, normalization), false});
    }
  }
  std::sort(out.begin(), out.end(), hypothesis_better);
  if (out.size() > beam_size) out.resize(beam_size);
  return out;
}

Hypothesis greedy_search(const ModelParameters& params, std::span<const TokenId> x, std::size_t max_len,
                         LengthNormalization normalization) {
  if (max_len < 1) throw ValidationError("max_len must be >= 1");
  const EncoderOutput enc = encode(params, x);
  DecoderState state = initial_state(params, enc);
  Hypothesis h;
  TokenId prev = kBosId;
  for (std::size_t step = 0; step < max_len; ++step) {
    const Vector log_probs = decode_step(params, enc, state, prev);
    TokenId best = -1;
    for (TokenId v = 0; v < log_probs.size(); ++v) {
      if (generable(v) && (best < 0 || log_probs[v] > log_probs[best])) best = v;
    }
    h.tokens.push_back(best);
    h.score += log_probs[best];
    if (best == kEosId) {
      h.finished = true;
      break;
    }
    prev = best;
  }
  h.normalized_score = normalize_score(h.score, h.tokens.size(), normalization);
  return h;
}

Translation translate(const TranslationSystem& system, const Tokens& sentence, const SearchOptions& options) {
  Translation out;
  if (sentence.empty()) {
    out.hypothesis.finished = true;
    return out;
  }
  const IdSequence x = system.encode_source(sentence);
  const std::size_t max_len = options.max_len ? options.max_len : default_max_len(x.size() - 1);
  auto hyps = beam_search(system.params, x, options.beam_size, max_len, options.normalization);
  out.hypothesis = std::move(hyps.front());
  out.text = system.decode(out.hypothesis.tokens);
  return out;
}

}  // namespace adaptmt
