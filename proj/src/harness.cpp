#include "adaptmt/harness.hpp"

#include <cstdio>

#include "adaptmt/error.hpp"

namespace adaptmt {

using nlohmann::json;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Pads to a display width counted in UTF-8 code points.
std::string pad(std::string s, std::size_t width) {
  std::size_t shown = 0;
  for (unsigned char c : s) shown += (c & 0xC0) != 0x80;
  if (shown < width) s.append(width - shown, ' ');
  return s;
}

bool same_sources(const SessionLog& a, const SessionLog& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    if (a.records[i].source != b.records[i].source) return false;
  }
  return true;
}

SystemSummary summarize(const SessionLog& log) {
  if (log.records.empty()) throw ValidationError("session " + log.session_id + " has no records");
  SystemSummary s;
  s.session_id = log.session_id;
  s.mode = to_string(log.config.mode);
  s.sentences = log.records.size();
  TerStats ter;
  BleuStats bleu;
  double edit = 0.0;
  std::vector<std::pair<double, double>> points;
  for (const auto& r : log.records) {
    ter += r.ter_stats;
    bleu += r.bleu_stats;
    edit += r.edit_duration;
    points.emplace_back(static_cast<double>(r.index), r.hbleu);
  }
  s.ter = ter_from_stats(ter).value;
  s.bleu = bleu_from_stats(bleu).value;
  s.mean_edit_duration = edit / static_cast<double>(s.sentences);
  s.latency = measure_latency(std::span<const SessionLog>(&log, 1));
  if (points.size() >= 2) s.trend = linear_fit(points);
  for (const auto& [x, y] : points) {
    s.series.push_back({static_cast<std::size_t>(x), y, s.trend ? s.trend->at(x) : y});
  }
  return s;
}

json significance_json(const std::optional<SignificanceResult>& r) {
  if (!r) return nullptr;
  return {{"observed_difference", r->observed_difference},
          {"p_value", r->p_value},
          {"repetitions", r->repetitions},
          {"seed", r->seed},
          {"alpha", r->alpha},
          {"significant", r->significant}};
}

std::optional<SignificanceResult> significance_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  SignificanceResult r;
  r.observed_difference = j.at("observed_difference").get<double>();
  r.p_value = j.at("p_value").get<double>();
  r.repetitions = j.at("repetitions").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.alpha = j.at("alpha").get<double>();
  r.significant = j.at("significant").get<bool>();
  return r;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

LatencySummary measure_latency(std::span<const SessionLog> logs) {
  double translate = 0.0, update = 0.0;
  std::size_t n = 0, updates = 0;
  for (const auto& log : logs) {
    for (const auto& r : log.records) {
      translate += r.translate_latency;
      ++n;
      if (log.config.mode == SessionMode::kAdaptive && r.sgd_steps > 0) {
        update += r.update_latency;
        ++updates;
      }
    }
  }
  if (n == 0) throw ValidationError("latency needs at least one record");
  LatencySummary s;
  s.mean_translate = translate / static_cast<double>(n);
  if (updates > 0) s.mean_update = update / static_cast<double>(updates);
  return s;
}

ExperimentReport build_report(std::vector<SessionLog> logs, const ReportOptions& options) {
  if (logs.empty()) throw ValidationError("report needs at least one session log");
  ExperimentReport report;
  report.options = options;
  for (const auto& log : logs) report.systems.push_back(summarize(log));

  if (logs.size() == 2 && same_sources(logs[0], logs[1])) {
    std::vector<TerStats> ta, tb;
    std::vector<BleuStats> ba, bb;
    for (const auto& r : logs[1].records) {
      ta.push_back(r.ter_stats);
      ba.push_back(r.bleu_stats);
    }
    for (const auto& r : logs[0].records) {
      tb.push_back(r.ter_stats);
      bb.push_back(r.bleu_stats);
    }
    if (ta.size() >= 2) {
      report.ter_significance = ar_test<TerStats>(ta, tb, corpus_ter_of, options.repetitions, options.alpha, options.seed);
      report.bleu_significance =
          ar_test<BleuStats>(ba, bb, corpus_bleu_of, options.repetitions, options.alpha, options.seed);
    }
  }

  const auto& first = logs.front();
  report.config = {{"checkpoint_hash", first.checkpoint_hash},
                   {"session", config_to_json(first.config)},
                   {"metrics", metric_configuration(first.config.ter)},
                   {"test", options.test_name},
                   {"scored_against", options.scored_against},
                   {"repetition_factor", options.repetition_factor},
                   {"significance", {{"method", "approximate randomization"},
                                     {"repetitions", options.repetitions},
                                     {"alpha", options.alpha},
                                     {"seed", options.seed}}}};
  report.logs = std::move(logs);
  return report;
}

ExperimentReport run_experiment(std::shared_ptr<const TranslationSystem> base, const ParallelCorpus& test,
                                const OnlineUpdatePolicy& policy, std::uint64_t seed,
                                const ExperimentOptions& options) {
  if (options.repetition_factor < 1) throw ValidationError("repetition factor must be >= 1");
  const ParallelCorpus document = options.repetition_factor == 1 ? test : test.repeated(options.repetition_factor);
  SessionConfig config;
  config.policy = policy;
  config.search = options.search;

  std::vector<SessionLog> logs;
  for (SessionMode mode : {SessionMode::kStatic, SessionMode::kAdaptive}) {
    config.mode = mode;
    try {
      logs.push_back(session_log(simulate(base, document, config, options.clock, to_string(mode))));
    } catch (const Error& e) {
      throw Error(to_string(mode) + " simulation failed: " + e.what());
    }
  }

  ReportOptions ro;
  ro.test_name = document.name();
  ro.scored_against = "reference";
  ro.repetition_factor = options.repetition_factor;
  ro.repetitions = options.repetitions;
  ro.alpha = options.alpha;
  ro.seed = seed;
  try {
    return build_report(std::move(logs), ro);
  } catch (const Error& e) {
    throw Error(std::string("report assembly failed: ") + e.what());
  }
}

json report_to_json(const ExperimentReport& report) {
  json systems = json::array();
  for (const auto& s : report.systems) {
    json series = json::array();
    for (const auto& p : s.series) series.push_back({p.index, p.score, p.fitted});
    json trend = nullptr;
    if (s.trend) {
      trend = {{"slope", s.trend->slope},
               {"intercept", s.trend->intercept},
               {"residual_sum_squares", s.trend->residual_sum_squares}};
    }
    systems.push_back({{"session_id", s.session_id},
                       {"mode", s.mode},
                       {"sentences", s.sentences},
                       {"ter", s.ter},
                       {"bleu", s.bleu},
                       {"mean_edit_duration", s.mean_edit_duration},
                       {"latency",
                        {{"mean_translate", s.latency.mean_translate},
                         {"mean_update", optional_json(s.latency.mean_update)}}},
                       {"trend", trend},
                       {"series", series}});
  }
  json logs = json::array();
  for (const auto& l : report.logs) logs.push_back(log_to_json(l));
  return {{"format", "adaptmt-report"},
          {"version", report.version},
          {"test", report.options.test_name},
          {"scored_against", report.options.scored_against},
          {"repetition_factor", report.options.repetition_factor},
          {"systems", systems},
          {"significance",
           {{"ter", significance_json(report.ter_significance)},
            {"bleu", significance_json(report.bleu_significance)}}},
          {"config", report.config},
          {"logs", logs}};
}

ExperimentReport report_from_json(const json& j) {
  try {
    if (j.at("format") != "adaptmt-report") throw ValidationError("not an adaptmt report");
    ExperimentReport r;
    r.version = j.at("version").get<int>();
    if (r.version != kReportVersion) throw ValidationError("unsupported report version " + std::to_string(r.version));
    r.options.test_name = j.at("test").get<std::string>();
    r.options.scored_against = j.at("scored_against").get<std::string>();
    r.options.repetition_factor = j.at("repetition_factor").get<std::size_t>();
    r.config = j.at("config");
    const auto& sig = r.config.at("significance");
    r.options.repetitions = sig.at("repetitions").get<std::size_t>();
    r.options.alpha = sig.at("alpha").get<double>();
    r.options.seed = sig.at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("systems")) {
      SystemSummary sum;
      sum.session_id = s.at("session_id").get<std::string>();
      sum.mode = s.at("mode").get<std::string>();
      sum.sentences = s.at("sentences").get<std::size_t>();
      sum.ter = s.at("ter").get<double>();
      sum.bleu = s.at("bleu").get<double>();
      sum.mean_edit_duration = s.at("mean_edit_duration").get<double>();
      sum.latency.mean_translate = s.at("latency").at("mean_translate").get<double>();
      if (!s.at("latency").at("mean_update").is_null()) sum.latency.mean_update = s.at("latency").at("mean_update").get<double>();
      if (!s.at("trend").is_null()) {
        const auto& t = s.at("trend");
        sum.trend = TrendFit{t.at("slope").get<double>(), t.at("intercept").get<double>(),
                             t.at("residual_sum_squares").get<double>()};
      }
      for (const auto& p : s.at("series")) sum.series.push_back({p.at(0).get<std::size_t>(), p.at(1).get<double>(), p.at(2).get<double>()});
      r.systems.push_back(std::move(sum));
    }
    r.ter_significance = significance_from_json(j.at("significance").at("ter"));
    r.bleu_significance = significance_from_json(j.at("significance").at("bleu"));
    for (const auto& l : j.at("logs")) r.logs.push_back(log_from_json(l));
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
}

ExperimentReport parse_report(const std::string& structured) {
  json j;
  try {
    j = json::parse(structured);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return report_from_json(j);
}

std::string render_report(const ExperimentReport& report, ReportFormat format) {
  if (format == ReportFormat::kStructured) return report_to_json(report).dump(2) + "\n";

  const bool human = report.options.scored_against == "post-edit";
  const std::string ter_name = human ? "hTER" : "TER";
  const std::string bleu_name = human ? "hBLEU" : "BLEU";
  const auto marked = [](const std::optional<SignificanceResult>& r) { return r && r->significant; };

  std::string out;
  out += "adaptmt report v" + std::to_string(report.version) + "\n";
  out += "test: " + report.options.test_name + " (x" + std::to_string(report.options.repetition_factor) +
         "), scored against " + report.options.scored_against + "\n\n";

  std::string test_col = report.options.test_name;
  const std::size_t w = std::max<std::size_t>(test_col.size(), 4) + 2;
  out += pad("Test", w) + pad("System", 12) + (human ? pad("Time (s)", 10) : "") + pad(ter_name, 9) + bleu_name + "\n";
  for (std::size_t i = 0; i < report.systems.size(); ++i) {
    const auto& s = report.systems[i];
    const bool second = i == 1;
    std::string name = s.mode;
    name[0] = static_cast<char>(std::toupper(name[0]));
    std::string ter = fmt("%.1f", 100.0 * s.ter) + (second && marked(report.ter_significance) ? "\xE2\x80\xA0" : "");
    std::string bleu = fmt("%.1f", 100.0 * s.bleu) + (second && marked(report.bleu_significance) ? "\xE2\x80\xA0" : "");
    out += pad(i == 0 ? test_col : "", w) + pad(name, 12) + (human ? pad(fmt("%.2f", s.mean_edit_duration), 10) : "") +
           pad(ter, 9) + bleu + "\n";
  }
  if (report.ter_significance || report.bleu_significance) {
    const auto& any = report.ter_significance ? *report.ter_significance : *report.bleu_significance;
    out += "\n\xE2\x80\xA0 marks significance at alpha " + fmt("%.2f", any.alpha) + " (approximate randomization, " +
           std::to_string(any.repetitions) + " repetitions, seed " + std::to_string(any.seed) + ")\n";
    if (report.ter_significance) out += ter_name + " p = " + fmt("%.4f", report.ter_significance->p_value) + "\n";
    if (report.bleu_significance) out += bleu_name + " p = " + fmt("%.4f", report.bleu_significance->p_value) + "\n";
  }

  out += "\n" + pad("Latency (s)", 14) + pad("translate", 11) + "update\n";
  for (const auto& s : report.systems) {
    out += pad(s.session_id, 14) + pad(fmt("%.4f", s.latency.mean_translate), 11) +
           (s.latency.mean_update ? fmt("%.4f", *s.latency.mean_update) : "-") + "\n";
  }

  out += "\nPer-sentence " + bleu_name + " trend (least squares)\n";
  for (const auto& s : report.systems) {
    out += pad(s.session_id, 14);
    if (s.trend) {
      out += "slope " + fmt("%+.6f", s.trend->slope) + "  intercept " + fmt("%.4f", s.trend->intercept) + "\n";
    } else {
      out += "-\n";
    }
  }
  return out;
}

}  // namespace adaptmt
