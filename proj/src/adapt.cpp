#include "adaptmt/adapt.hpp"

#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include "adaptmt/error.hpp"

namespace adaptmt {

using nlohmann::json;

SessionMode parse_mode(std::string_view text) {
  if (text == "static") return SessionMode::kStatic;
  if (text == "adaptive") return SessionMode::kAdaptive;
  throw ValidationError("unknown session mode '" + std::string(text) + "' (expected static or adaptive)");
}

std::string to_string(SessionMode mode) { return mode == SessionMode::kStatic ? "static" : "adaptive"; }

Clock steady_clock_seconds() {
  return [] {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
  };
}

std::string model_fingerprint(const ModelParameters& params) {
  std::uint64_t h = 14695981039346656037ULL;
  params.weights.for_each([&](std::string_view, const auto& t) {
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(t.data()), sizeof(double) * static_cast<std::size_t>(t.size())), h);
  });
  return hex64(h);
}

AdaptationSession::AdaptationSession(std::string id, std::shared_ptr<const TranslationSystem> base,
                                     SessionConfig config, Clock clock)
    : id_(std::move(id)), base_(std::move(base)), config_(std::move(config)), clock_(std::move(clock)) {
  if (!base_) throw ValidationError("session needs a base translation system");
  config_.policy.validate();
  if (!clock_) clock_ = steady_clock_seconds();
  if (config_.mode == SessionMode::kAdaptive) own_ = *base_;
}

AdaptationSession::HypothesisResult AdaptationSession::next_hypothesis(const Tokens& source) {
  const double start = clock_();
  Translation t = translate(system(), source, config_.search);
  const double latency = clock_() - start;
  pending_ = Pending{source, t.text, latency};
  return {std::move(t.text), latency};
}

const PostEditRecord& AdaptationSession::confirm_postedit(const Tokens& source, const Tokens& hypothesis,
                                                          const Tokens& post_edit, double edit_duration) {
  if (!pending_) {
    throw SequencingError("segment " + std::to_string(next_index()) + " was confirmed before it was translated");
  }
  if (pending_->source != source || pending_->hypothesis != hypothesis) {
    throw SequencingError("confirmation for segment " + std::to_string(next_index()) +
                          " does not match the pending source/hypothesis");
  }
  if (post_edit.empty()) throw ValidationError("post-edit for segment " + std::to_string(next_index()) + " is empty");
  if (edit_duration < 0.0) throw ValidationError("edit duration must be >= 0");

  PostEditRecord rec;
  rec.index = next_index();
  rec.source = source;
  rec.hypothesis = hypothesis;
  rec.post_edit = post_edit;
  rec.translate_latency = pending_->translate_latency;
  rec.edit_duration = edit_duration;
  rec.ter_stats = ter_stats(hypothesis, post_edit, config_.ter);
  rec.hter = ter_from_stats(rec.ter_stats).value;
  rec.bleu_stats = bleu_stats(hypothesis, post_edit);
  rec.hbleu = bleu_from_stats(rec.bleu_stats).value;
  if (audit_) rec.novel_words = audit_->novel_words(hypothesis);

  const bool accepted = hypothesis == post_edit;
  if (config_.mode == SessionMode::kAdaptive && (config_.update_on_accept || !accepted)) {
    const EncodedPair pair = own_->encode_pair(source, post_edit);
    const double start = clock_();
    try {
      rec.sgd_steps = online_update(own_->params, pair, config_.policy);
      sgd_steps_ += static_cast<std::size_t>(rec.sgd_steps);
      ++version_;
    } catch (const NumericError& e) {
      rec.update_error = e.what();
    }
    rec.update_latency = clock_() - start;
  }
  rec.model_fingerprint = model_fingerprint(parameters());
  pending_.reset();
  records_.push_back(std::move(rec));
  return records_.back();
}

AdaptationSession simulate(std::shared_ptr<const TranslationSystem> base, const ParallelCorpus& test,
                           const SessionConfig& config, Clock clock, std::string id) {
  if (test.empty()) throw ValidationError("cannot simulate on an empty test set");
  AdaptationSession session(std::move(id), std::move(base), config, std::move(clock));
  session.metadata()["document"] = test.name();
  for (const auto& pair : test.pairs()) {
    auto hyp = session.next_hypothesis(pair.source);
    session.confirm_postedit(pair.source, hyp.hypothesis, pair.target, 0.0);
  }
  return session;
}

json config_to_json(const SessionConfig& c) {
  json policy = {{"updates_per_sample", c.policy.updates_per_sample},
                 {"learning_rate", c.policy.learning_rate},
                 {"recompute_gradient", c.policy.recompute_gradient},
                 {"smoothing", c.policy.smoothing}};
  policy["clip_norm"] = c.policy.clip_norm ? json(*c.policy.clip_norm) : json(nullptr);
  return {{"mode", to_string(c.mode)},
          {"policy", policy},
          {"search",
           {{"beam_size", c.search.beam_size},
            {"max_len", c.search.max_len},
            {"normalization", c.search.normalization == LengthNormalization::kNone ? "none" : "by-length"}}},
          {"update_on_accept", c.update_on_accept},
          {"ter", {{"max_shift_size", c.ter.max_shift_size}, {"max_shift_distance", c.ter.max_shift_distance}}}};
}

SessionConfig config_from_json(const json& j) {
  SessionConfig c;
  c.mode = parse_mode(j.at("mode").get<std::string>());
  const auto& p = j.at("policy");
  c.policy.updates_per_sample = p.at("updates_per_sample").get<int>();
  c.policy.learning_rate = p.at("learning_rate").get<double>();
  c.policy.recompute_gradient = p.at("recompute_gradient").get<bool>();
  c.policy.smoothing = p.at("smoothing").get<double>();
  if (!p.at("clip_norm").is_null()) c.policy.clip_norm = p.at("clip_norm").get<double>();
  const auto& s = j.at("search");
  c.search.beam_size = s.at("beam_size").get<std::size_t>();
  c.search.max_len = s.at("max_len").get<std::size_t>();
  c.search.normalization =
      s.at("normalization").get<std::string>() == "none" ? LengthNormalization::kNone : LengthNormalization::kByLength;
  c.update_on_accept = j.at("update_on_accept").get<bool>();
  c.ter.max_shift_size = j.at("ter").at("max_shift_size").get<std::size_t>();
  c.ter.max_shift_distance = j.at("ter").at("max_shift_distance").get<std::size_t>();
  return c;
}

json session_header_json(const AdaptationSession& session) {
  return {{"type", "session"},
          {"format", kSessionLogVersion},
          {"session_id", session.id()},
          {"checkpoint_hash", session.base()->checkpoint_hash},
          {"config", config_to_json(session.config())},
          {"metadata", session.metadata()}};
}

json record_to_json(const PostEditRecord& r) {
  json j = {{"type", "record"},
            {"index", r.index},
            {"source", join(r.source)},
            {"hypothesis", join(r.hypothesis)},
            {"post_edit", join(r.post_edit)},
            {"translate_latency", r.translate_latency},
            {"update_latency", r.update_latency},
            {"edit_duration", r.edit_duration},
            {"hter", r.hter},
            {"hbleu", r.hbleu},
            {"ter_stats",
             {{"insertions", r.ter_stats.insertions},
              {"deletions", r.ter_stats.deletions},
              {"substitutions", r.ter_stats.substitutions},
              {"shifts", r.ter_stats.shifts},
              {"ref_length", r.ter_stats.ref_length}}},
            {"bleu_stats",
             {{"matches", r.bleu_stats.matches},
              {"totals", r.bleu_stats.totals},
              {"hyp_length", r.bleu_stats.hyp_length},
              {"ref_length", r.bleu_stats.ref_length}}},
            {"sgd_steps", r.sgd_steps},
            {"model_fingerprint", r.model_fingerprint},
            {"novel_words", r.novel_words}};
  j["update_error"] = r.update_error ? json(*r.update_error) : json(nullptr);
  return j;
}

PostEditRecord record_from_json(const json& j) {
  PostEditRecord r;
  r.index = j.at("index").get<std::size_t>();
  r.source = tokenize(j.at("source").get<std::string>());
  r.hypothesis = tokenize(j.at("hypothesis").get<std::string>());
  r.post_edit = tokenize(j.at("post_edit").get<std::string>());
  r.translate_latency = j.at("translate_latency").get<double>();
  r.update_latency = j.at("update_latency").get<double>();
  r.edit_duration = j.at("edit_duration").get<double>();
  r.hter = j.at("hter").get<double>();
  r.hbleu = j.at("hbleu").get<double>();
  const auto& t = j.at("ter_stats");
  r.ter_stats.insertions = t.at("insertions").get<long>();
  r.ter_stats.deletions = t.at("deletions").get<long>();
  r.ter_stats.substitutions = t.at("substitutions").get<long>();
  r.ter_stats.shifts = t.at("shifts").get<long>();
  r.ter_stats.ref_length = t.at("ref_length").get<long>();
  const auto& b = j.at("bleu_stats");
  r.bleu_stats.matches = b.at("matches").get<std::array<long, kBleuMaxOrder>>();
  r.bleu_stats.totals = b.at("totals").get<std::array<long, kBleuMaxOrder>>();
  r.bleu_stats.hyp_length = b.at("hyp_length").get<long>();
  r.bleu_stats.ref_length = b.at("ref_length").get<long>();
  r.sgd_steps = j.at("sgd_steps").get<int>();
  r.model_fingerprint = j.at("model_fingerprint").get<std::string>();
  r.novel_words = j.value("novel_words", std::vector<std::string>{});
  if (j.contains("update_error") && !j.at("update_error").is_null()) r.update_error = j.at("update_error").get<std::string>();
  return r;
}

SessionLog session_log(const AdaptationSession& session) {
  return {session.id(), session.config(), session.base()->checkpoint_hash, session.metadata(), session.records()};
}

json log_to_json(const SessionLog& log) {
  json records = json::array();
  for (const auto& r : log.records) records.push_back(record_to_json(r));
  return {{"session_id", log.session_id},
          {"checkpoint_hash", log.checkpoint_hash},
          {"config", config_to_json(log.config)},
          {"metadata", log.metadata},
          {"records", records}};
}

SessionLog log_from_json(const json& j) {
  SessionLog log;
  log.session_id = j.at("session_id").get<std::string>();
  log.checkpoint_hash = j.at("checkpoint_hash").get<std::string>();
  log.config = config_from_json(j.at("config"));
  log.metadata = j.value("metadata", json::object());
  for (const auto& r : j.at("records")) log.records.push_back(record_from_json(r));
  return log;
}

std::string serialize_log(const SessionLog& log) {
  json header = {{"type", "session"},
                 {"format", kSessionLogVersion},
                 {"session_id", log.session_id},
                 {"checkpoint_hash", log.checkpoint_hash},
                 {"config", config_to_json(log.config)},
                 {"metadata", log.metadata}};
  std::string out = header.dump() + "\n";
  for (const auto& r : log.records) out += record_to_json(r).dump() + "\n";
  return out;
}

std::string serialize_log(const AdaptationSession& session) { return serialize_log(session_log(session)); }

SessionLog parse_log(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  SessionLog log;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      if (!have_header) {
        if (j.at("type") != "session") throw ValidationError("session log must start with a session header");
        if (j.at("format").get<int>() != kSessionLogVersion) throw ValidationError("unsupported session log format");
        log.session_id = j.at("session_id").get<std::string>();
        log.checkpoint_hash = j.at("checkpoint_hash").get<std::string>();
        log.config = config_from_json(j.at("config"));
        log.metadata = j.value("metadata", json::object());
        have_header = true;
      } else {
        log.records.push_back(record_from_json(j));
      }
    } catch (const json::exception& e) {
      throw ValidationError("session log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw ValidationError("session log is empty");
  return log;
}

SessionLog load_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_log(buf.str());
}

ReplayResult replay_log(std::shared_ptr<const TranslationSystem> base, const SessionLog& log, Clock clock) {
  if (base->checkpoint_hash != log.checkpoint_hash) {
    throw ValidationError("session log was recorded on checkpoint " + log.checkpoint_hash + ", base is " +
                          base->checkpoint_hash);
  }
  ReplayResult result{AdaptationSession(log.session_id, std::move(base), log.config, std::move(clock)), {}};
  result.session.metadata() = log.metadata;
  for (const auto& rec : log.records) {
    auto hyp = result.session.next_hypothesis(rec.source);
    const auto& replayed = result.session.confirm_postedit(rec.source, hyp.hypothesis, rec.post_edit, rec.edit_duration);
    if (hyp.hypothesis != rec.hypothesis || replayed.model_fingerprint != rec.model_fingerprint) {
      result.mismatches.push_back(rec.index);
    }
  }
  return result;
}

}  // namespace adaptmt
