#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adaptmt/corpus.hpp"
#include "adaptmt/metrics.hpp"
#include "adaptmt/optim.hpp"
#include "adaptmt/search.hpp"
#include "adaptmt/system.hpp"
#include "json.hpp"

namespace adaptmt {

enum class SessionMode { kStatic, kAdaptive };

// Throws ValidationError for anything other than "static" or "adaptive".
SessionMode parse_mode(std::string_view text);
std::string to_string(SessionMode mode);

// Monotonic time source in seconds. Tests inject deterministic clocks.
using Clock = std::function<double()>;
Clock steady_clock_seconds();

struct PostEditRecord {
  std::size_t index = 0;  // 1-based
  Tokens source;
  Tokens hypothesis;
  Tokens post_edit;
  double translate_latency = 0.0;
  double update_latency = 0.0;
  double edit_duration = 0.0;
  double hter = 0.0;
  double hbleu = 0.0;
  TerStats ter_stats;
  BleuStats bleu_stats;
  int sgd_steps = 0;
  std::optional<std::string> update_error;
  std::vector<std::string> novel_words;
  // Hash of the parameters after this record's update.
  std::string model_fingerprint;
};

struct SessionConfig {
  SessionMode mode = SessionMode::kAdaptive;
  OnlineUpdatePolicy policy;
  SearchOptions search;
  // Run the update even when the post-edit equals the hypothesis.
  bool update_on_accept = true;
  TerOptions ter;
};

std::string model_fingerprint(const ModelParameters& params);

// One run of the translate / post-edit / update loop for one editor. Static
// sessions decode with the shared base parameters forever; adaptive sessions
// own a private copy that every confirmation updates.
class AdaptationSession {
 public:
  AdaptationSession(std::string id, std::shared_ptr<const TranslationSystem> base, SessionConfig config,
                    Clock clock = {});

  struct HypothesisResult {
    Tokens hypothesis;
    double translate_latency = 0.0;
  };

  // Decodes x_n with the current parameters. Repeating the call before a
  // confirmation re-decodes with the same parameters.
  HypothesisResult next_hypothesis(const Tokens& source);

  // Records (x_n, hyp_n, y_n) and, in adaptive mode, updates the model.
  // Throws SequencingError unless (source, hypothesis) is the pending pair.
  // A failed update is stored on the record and the parameters roll back.
  const PostEditRecord& confirm_postedit(const Tokens& source, const Tokens& hypothesis, const Tokens& post_edit,
                                         double edit_duration);

  const std::string& id() const { return id_; }
  SessionMode mode() const { return config_.mode; }
  const SessionConfig& config() const { return config_; }
  const std::vector<PostEditRecord>& records() const { return records_; }
  // Index n of the next segment (1-based).
  std::size_t next_index() const { return records_.size() + 1; }
  // 1 + successful updates.
  std::size_t version() const { return version_; }
  std::size_t sgd_steps() const { return sgd_steps_; }
  bool has_pending() const { return pending_.has_value(); }
  const TranslationSystem& system() const { return own_ ? *own_ : *base_; }
  const ModelParameters& parameters() const { return system().params; }
  const std::shared_ptr<const TranslationSystem>& base() const { return base_; }

  void set_novel_word_audit(std::shared_ptr<const NovelWordAudit> audit) { audit_ = std::move(audit); }
  // Extra header fields written into the session log (e.g. document id).
  nlohmann::json& metadata() { return metadata_; }
  const nlohmann::json& metadata() const { return metadata_; }

 private:
  struct Pending {
    Tokens source;
    Tokens hypothesis;
    double translate_latency = 0.0;
  };

  std::string id_;
  std::shared_ptr<const TranslationSystem> base_;
  std::optional<TranslationSystem> own_;
  SessionConfig config_;
  Clock clock_;
  std::vector<PostEditRecord> records_;
  std::optional<Pending> pending_;
  std::size_t version_ = 1;
  std::size_t sgd_steps_ = 0;
  std::shared_ptr<const NovelWordAudit> audit_;
  nlohmann::json metadata_ = nlohmann::json::object();
};

// Runs the loop over a test set using each reference as the post-edit.
AdaptationSession simulate(std::shared_ptr<const TranslationSystem> base, const ParallelCorpus& test,
                           const SessionConfig& config, Clock clock = {}, std::string id = "simulated");

// Session log: a header line followed by one JSON object per record.
inline constexpr int kSessionLogVersion = 1;

struct SessionLog {
  std::string session_id;
  SessionConfig config;
  std::string checkpoint_hash;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<PostEditRecord> records;
};

nlohmann::json session_header_json(const AdaptationSession& session);
nlohmann::json record_to_json(const PostEditRecord& record);
PostEditRecord record_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SessionConfig& config);
SessionConfig config_from_json(const nlohmann::json& j);

SessionLog session_log(const AdaptationSession& session);
std::string serialize_log(const SessionLog& log);
std::string serialize_log(const AdaptationSession& session);
SessionLog parse_log(const std::string& text);
SessionLog load_log(const std::filesystem::path& path);
nlohmann::json log_to_json(const SessionLog& log);
SessionLog log_from_json(const nlohmann::json& j);

struct ReplayResult {
  AdaptationSession session;
  // 1-based indices whose hypothesis or fingerprint differs from the log.
  std::vector<std::size_t> mismatches;
};

// Re-runs a logged session from its base checkpoint, feeding the logged
// post-edits. Throws ValidationError if the log names another checkpoint.
ReplayResult replay_log(std::shared_ptr<const TranslationSystem> base, const SessionLog& log, Clock clock = {});

}  // namespace adaptmt
