#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptmt/adapt.hpp"
#include "adaptmt/stats.hpp"
#include "json.hpp"

namespace adaptmt {

inline constexpr int kReportVersion = 1;

struct LatencySummary {
  double mean_translate = 0.0;
  // Absent when no record carries an update (all-static logs).
  std::optional<double> mean_update;
};

// Arithmetic means over all records. Static records (zero update latency,
// no SGD steps) are left out of the update mean. Throws ValidationError
// when there are no records.
LatencySummary measure_latency(std::span<const SessionLog> logs);

struct SeriesPoint {
  std::size_t index = 0;
  double score = 0.0;
  double fitted = 0.0;
};

struct SystemSummary {
  std::string session_id;
  std::string mode;
  std::size_t sentences = 0;
  double ter = 0.0;
  double bleu = 0.0;
  double mean_edit_duration = 0.0;
  LatencySummary latency;
  // Per-sentence (h)BLEU with its least-squares trend.
  std::vector<SeriesPoint> series;
  std::optional<TrendFit> trend;
};

struct ReportOptions {
  std::string test_name;
  // "reference" for simulations, "post-edit" for human sessions.
  std::string scored_against = "reference";
  std::size_t repetition_factor = 1;
  std::size_t repetitions = kDefaultRepetitions;
  double alpha = kDefaultAlpha;
  std::uint64_t seed = 1;
};

struct ExperimentReport {
  int version = kReportVersion;
  ReportOptions options;
  std::vector<SystemSummary> systems;
  // Adaptive minus static (second log minus first). Present only for two
  // logs over the same source sentences.
  std::optional<SignificanceResult> ter_significance;
  std::optional<SignificanceResult> bleu_significance;
  nlohmann::json config = nlohmann::json::object();
  std::vector<SessionLog> logs;
};

// Everything in the report is computed from the logs.
ExperimentReport build_report(std::vector<SessionLog> logs, const ReportOptions& options);

struct ExperimentOptions {
  std::size_t repetition_factor = 1;
  SearchOptions search;
  std::size_t repetitions = kDefaultRepetitions;
  double alpha = kDefaultAlpha;
  Clock clock;
};

// Simulates the static and the adaptive system on the same test set, using
// the references as post-edits.
ExperimentReport run_experiment(std::shared_ptr<const TranslationSystem> base, const ParallelCorpus& test,
                                const OnlineUpdatePolicy& policy, std::uint64_t seed,
                                const ExperimentOptions& options = {});

enum class ReportFormat { kText, kStructured };

std::string render_report(const ExperimentReport& report, ReportFormat format);
nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport parse_report(const std::string& structured);
ExperimentReport report_from_json(const nlohmann::json& j);

}  // namespace adaptmt
