#include "adaptmt/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "adaptmt/error.hpp"
#include "adaptmt/harness.hpp"
#include "adaptmt/server.hpp"
#include "adaptmt/synthetic.hpp"
#include "adaptmt/version.hpp"

namespace adaptmt::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string src, tgt, test, dev, checkpoint, bpe, out, hyp, ref, a, b, log_dir, host = "127.0.0.1", format = "text";
  std::vector<std::string> logs;
  std::size_t merges = 500;
  int hidden = 64, embed = 64;
  bool bidirectional = false;
  std::size_t batch = 60, epochs = 10;
  double lr = 0.0002, smoothing = 0.1;
  std::size_t beam = 6, max_len = 0;
  std::string normalization = "length";
  std::string mode = "both";
  int updates_per_sample = 2;
  double online_lr = 0.05;
  std::size_t repetitions = kDefaultRepetitions;
  double alpha = kDefaultAlpha;
  std::uint64_t seed = 1;
  int port = 8080;
  std::string metric = "bleu";
  std::size_t doc_repeat = 1;
  std::size_t budget = 0;
  unsigned threads = 0;
  bool resume = false;
  bool no_update_on_accept = false;
};

// Prints key=value lines for every setting a subcommand uses.
class ResolvedConfig {
 public:
  ResolvedConfig(std::ostream& err, std::string command) : err_(err) { add("command", std::move(command)); }
  template <class T>
  ResolvedConfig& add(const std::string& key, const T& value) {
    std::ostringstream s;
    s << value;
    entries_.emplace_back(key, s.str());
    return *this;
  }
  void print() const {
    for (const auto& [k, v] : entries_) err_ << "# " << k << "=" << v << "\n";
  }

 private:
  std::ostream& err_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string bpe_path(const Flags& f) { return f.bpe.empty() ? f.checkpoint + ".bpe" : f.bpe; }

std::shared_ptr<const TranslationSystem> load_system(const Flags& f) {
  if (f.checkpoint.empty()) throw ValidationError("--checkpoint is required");
  const auto bpe = BpeModel::load(bpe_path(f));
  return std::make_shared<const TranslationSystem>(load_checkpoint(f.checkpoint, bpe));
}

// --test T reads T.src / T.tgt unless --src / --tgt name the files.
ParallelCorpus load_test(const Flags& f) {
  const std::string src = f.src.empty() ? f.test + ".src" : f.src;
  const std::string tgt = f.tgt.empty() ? f.test + ".tgt" : f.tgt;
  if (src == ".src" || tgt == ".tgt") throw ValidationError("a test set needs --test or --src/--tgt");
  return load_parallel(src, tgt);
}

SearchOptions search_options(const Flags& f) {
  SearchOptions s;
  s.beam_size = f.beam;
  s.max_len = f.max_len;
  if (f.normalization == "none") {
    s.normalization = LengthNormalization::kNone;
  } else if (f.normalization == "length") {
    s.normalization = LengthNormalization::kByLength;
  } else {
    throw ValidationError("--normalization must be none or length");
  }
  if (s.beam_size < 1) throw ValidationError("--beam must be >= 1");
  return s;
}

OnlineUpdatePolicy online_policy(const Flags& f) {
  OnlineUpdatePolicy p;
  p.updates_per_sample = f.updates_per_sample;
  p.learning_rate = f.online_lr;
  p.validate();
  return p;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("cannot write " + path.string());
}

int cmd_make_toy(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.out.empty()) throw ValidationError("--out directory is required");
  ToyTaskOptions o;
  o.seed = f.seed;
  ResolvedConfig(err, "make-toy")
      .add("out", f.out)
      .add("seed", o.seed)
      .add("general_pairs", o.general_pairs)
      .add("dev_pairs", o.dev_pairs)
      .add("test_sentences", o.test_sentences)
      .add("terms", o.terms)
      .add("term_rate", o.term_rate)
      .add("domain_sense_rate", o.domain_sense_rate)
      .print();
  const auto task = make_toy_task(o);
  const fs::path dir = f.out;
  fs::create_directories(dir);
  save_parallel(task.general, dir / "general.src", dir / "general.tgt");
  save_parallel(task.dev, dir / "dev.src", dir / "dev.tgt");
  save_parallel(task.in_domain_test, dir / "test.src", dir / "test.tgt");
  std::string terms;
  for (const auto& [src, general, domain] : task.terminology) terms += src + "\t" + general + "\t" + domain + "\n";
  write_file(dir / "terminology.tsv", terms);
  out << "wrote " << task.general.size() << " general, " << task.dev.size() << " dev and " << task.in_domain_test.size()
      << " test pairs to " << dir.string() << "\n";
  return kOk;
}

int cmd_learn_bpe(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.src.empty() || f.tgt.empty() || f.out.empty()) throw ValidationError("learn-bpe needs --src, --tgt and --out");
  ResolvedConfig(err, "learn-bpe").add("src", f.src).add("tgt", f.tgt).add("merges", f.merges).add("out", f.out).print();
  const auto corpus = load_parallel(f.src, f.tgt);
  auto text = corpus.sources();
  const auto targets = corpus.targets();
  text.insert(text.end(), targets.begin(), targets.end());
  const auto model = bpe_learn(text, f.merges);
  model.save(f.out);
  out << "learned " << model.merges().size() << " merges, " << model.vocab().size() << " subwords\n";
  return kOk;
}

int cmd_train(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.src.empty() || f.tgt.empty() || f.out.empty()) throw ValidationError("train needs --src, --tgt and --out");
  SystemTrainingOptions o;
  o.merges = f.merges;
  o.embed_size = f.embed;
  o.hidden_size = f.hidden;
  o.bidirectional = f.bidirectional;
  o.init_seed = f.seed;
  o.train.batch_size = f.batch;
  o.train.epochs = f.epochs;
  o.train.learning_rate = f.lr;
  o.train.smoothing = f.smoothing;
  o.train.seed = f.seed;
  o.train.threads = f.threads;
  o.train.on_epoch = [&err](std::size_t e, double train_loss, double dev_loss) {
    err << "epoch " << e << " train_loss " << train_loss << " dev_loss " << dev_loss << "\n";
  };

  KeyValueConfig config;
  config.set("src", f.src);
  config.set("tgt", f.tgt);
  config.set("dev", f.dev);
  config.set("merges", std::to_string(o.merges));
  config.set("embed", std::to_string(o.embed_size));
  config.set("hidden", std::to_string(o.hidden_size));
  config.set("bidirectional", o.bidirectional ? "true" : "false");
  config.set("batch", std::to_string(o.train.batch_size));
  config.set("epochs", std::to_string(o.train.epochs));
  config.set("lr", json(o.train.learning_rate).dump());
  config.set("smoothing", json(o.train.smoothing).dump());
  config.set("optimizer", "adam");
  config.set("seed", std::to_string(f.seed));
  ResolvedConfig rc(err, "train");
  for (const auto& [k, v] : config.values()) rc.add(k, v);
  rc.add("out", f.out).print();

  const auto corpus = load_parallel(f.src, f.tgt);
  const ParallelCorpus dev = f.dev.empty() ? ParallelCorpus() : load_parallel(f.dev + ".src", f.dev + ".tgt");
  auto trained = train_system(corpus, dev, o);
  trained.system.bpe.save(f.out + ".bpe");
  save_checkpoint(f.out, trained.system);
  config.set("best_epoch", std::to_string(trained.result.best_epoch));
  config.set("checkpoint_hash", trained.system.checkpoint_hash);
  config.save(f.out + ".config");
  out << "checkpoint " << f.out << " hash " << trained.system.checkpoint_hash << " best_epoch "
      << trained.result.best_epoch << "\n";
  return kOk;
}

int cmd_translate(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto search = search_options(f);
  ResolvedConfig(err, "translate")
      .add("checkpoint", f.checkpoint)
      .add("bpe", bpe_path(f))
      .add("src", f.src.empty() ? "-" : f.src)
      .add("beam", search.beam_size)
      .add("max_len", search.max_len)
      .add("normalization", f.normalization)
      .print();
  const auto system = load_system(f);
  std::vector<Tokens> lines;
  if (f.src.empty() || f.src == "-") {
    std::string line;
    while (std::getline(std::cin, line)) lines.push_back(tokenize(line));
  } else {
    lines = load_lines(f.src);
  }
  for (const auto& line : lines) out << join(translate(*system, line, search).text) << "\n";
  return kOk;
}

int cmd_simulate(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto search = search_options(f);
  const auto policy = online_policy(f);
  if (f.mode != "both") parse_mode(f.mode);
  if (f.doc_repeat < 1) throw ValidationError("--doc-repeat must be >= 1");
  ResolvedConfig(err, "simulate")
      .add("checkpoint", f.checkpoint)
      .add("test", f.test)
      .add("mode", f.mode)
      .add("beam", search.beam_size)
      .add("updates_per_sample", policy.updates_per_sample)
      .add("online_lr", policy.learning_rate)
      .add("update_on_accept", !f.no_update_on_accept)
      .add("doc_repeat", f.doc_repeat)
      .add("repetitions", f.repetitions)
      .add("alpha", f.alpha)
      .add("seed", f.seed)
      .add("out", f.out.empty() ? "-" : f.out)
      .print();
  const auto system = load_system(f);
  const auto test = load_test(f);

  ExperimentReport report;
  if (f.mode == "both" && !f.no_update_on_accept) {
    ExperimentOptions o;
    o.repetition_factor = f.doc_repeat;
    o.search = search;
    o.repetitions = f.repetitions;
    o.alpha = f.alpha;
    report = run_experiment(system, test, policy, f.seed, o);
  } else {
    const auto document = f.doc_repeat == 1 ? test : test.repeated(f.doc_repeat);
    SessionConfig config;
    config.policy = policy;
    config.search = search;
    config.update_on_accept = !f.no_update_on_accept;
    std::vector<SessionLog> logs;
    for (const std::string mode : {"static", "adaptive"}) {
      if (f.mode != "both" && f.mode != mode) continue;
      config.mode = parse_mode(mode);
      logs.push_back(session_log(simulate(system, document, config, {}, mode)));
    }
    ReportOptions ro;
    ro.test_name = document.name();
    ro.repetition_factor = f.doc_repeat;
    ro.repetitions = f.repetitions;
    ro.alpha = f.alpha;
    ro.seed = f.seed;
    report = build_report(std::move(logs), ro);
  }
  const std::string text = render_report(report, ReportFormat::kText);
  if (!f.out.empty()) {
    const fs::path dir = f.out;
    for (const auto& log : report.logs) write_file(dir / (log.session_id + ".jsonl"), serialize_log(log));
    write_file(dir / "report.json", render_report(report, ReportFormat::kStructured));
    write_file(dir / "report.txt", text);
  }
  out << text;
  return kOk;
}

int cmd_evaluate(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.hyp.empty() || f.ref.empty()) throw ValidationError("evaluate needs --hyp and --ref");
  ResolvedConfig(err, "evaluate").add("hyp", f.hyp).add("ref", f.ref).add("metrics", metric_configuration()).print();
  const auto hyps = load_lines(f.hyp);
  const auto refs = load_lines(f.ref);
  if (hyps.size() != refs.size()) {
    throw AlignmentError("hypothesis file has " + std::to_string(hyps.size()) + " lines, reference file has " +
                         std::to_string(refs.size()));
  }
  const auto bleu = corpus_bleu(hyps, refs);
  const auto ter = corpus_ter(hyps, refs);
  json j = {{"sentences", hyps.size()},
            {"bleu", bleu.value},
            {"bleu_precisions", bleu.precisions},
            {"brevity_penalty", bleu.brevity_penalty},
            {"ter", ter.value},
            {"ter_edits",
             {{"insertions", ter.stats.insertions},
              {"deletions", ter.stats.deletions},
              {"substitutions", ter.stats.substitutions},
              {"shifts", ter.stats.shifts},
              {"ref_length", ter.stats.ref_length}}},
            {"metrics", metric_configuration()}};
  out << j.dump(2) << "\n";
  return kOk;
}

int cmd_significance(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.a.empty() || f.b.empty()) throw ValidationError("significance needs --a and --b session logs");
  if (f.metric != "bleu" && f.metric != "ter") throw ValidationError("--metric must be bleu or ter");
  ResolvedConfig(err, "significance")
      .add("a", f.a)
      .add("b", f.b)
      .add("metric", f.metric)
      .add("repetitions", f.repetitions)
      .add("alpha", f.alpha)
      .add("seed", f.seed)
      .print();
  const auto la = load_log(f.a), lb = load_log(f.b);
  SignificanceResult r;
  if (f.metric == "bleu") {
    std::vector<BleuStats> a, b;
    for (const auto& rec : la.records) a.push_back(rec.bleu_stats);
    for (const auto& rec : lb.records) b.push_back(rec.bleu_stats);
    r = ar_test<BleuStats>(a, b, corpus_bleu_of, f.repetitions, f.alpha, f.seed);
  } else {
    std::vector<TerStats> a, b;
    for (const auto& rec : la.records) a.push_back(rec.ter_stats);
    for (const auto& rec : lb.records) b.push_back(rec.ter_stats);
    r = ar_test<TerStats>(a, b, corpus_ter_of, f.repetitions, f.alpha, f.seed);
  }
  json j = {{"metric", f.metric},
            {"a", la.session_id},
            {"b", lb.session_id},
            {"observed_difference", r.observed_difference},
            {"p_value", r.p_value},
            {"repetitions", r.repetitions},
            {"seed", r.seed},
            {"alpha", r.alpha},
            {"significant", r.significant}};
  out << j.dump(2) << "\n";
  return kOk;
}

int cmd_replay(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.logs.size() != 1) throw ValidationError("replay needs exactly one --log");
  ResolvedConfig(err, "replay").add("checkpoint", f.checkpoint).add("bpe", bpe_path(f)).add("log", f.logs[0]).print();
  const auto system = load_system(f);
  const auto log = load_log(f.logs[0]);
  const auto result = replay_log(system, log);
  json j = {{"session_id", log.session_id}, {"records", log.records.size()}, {"mismatches", result.mismatches}};
  out << j.dump(2) << "\n";
  return result.mismatches.empty() ? kOk : kReplayMismatch;
}

int cmd_report(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.logs.empty()) throw ValidationError("report needs at least one --log");
  if (f.format != "text" && f.format != "json") throw ValidationError("--format must be text or json");
  ResolvedConfig rc(err, "report");
  for (const auto& l : f.logs) rc.add("log", l);
  rc.add("format", f.format).add("repetitions", f.repetitions).add("alpha", f.alpha).add("seed", f.seed).print();
  std::vector<SessionLog> logs;
  for (const auto& l : f.logs) logs.push_back(load_log(l));
  ReportOptions ro;
  ro.test_name = logs.front().metadata.value("document", std::string("document"));
  ro.scored_against = f.mode == "human" ? "post-edit" : "reference";
  ro.repetitions = f.repetitions;
  ro.alpha = f.alpha;
  ro.seed = f.seed;
  const auto report = build_report(std::move(logs), ro);
  out << render_report(report, f.format == "json" ? ReportFormat::kStructured : ReportFormat::kText);
  return kOk;
}

int cmd_select(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.src.empty() || f.tgt.empty() || f.test.empty() || f.out.empty() || f.budget == 0) {
    throw ValidationError("select needs --src, --tgt, --test (in-domain source text), --budget and --out");
  }
  FdaOptions o;
  ResolvedConfig(err, "select")
      .add("src", f.src)
      .add("tgt", f.tgt)
      .add("test", f.test)
      .add("budget", f.budget)
      .add("ngram_max", o.ngram_max)
      .add("decay", o.decay)
      .add("out", f.out)
      .print();
  const auto pool = load_parallel(f.src, f.tgt);
  const auto in_domain = load_lines(f.test);
  const auto selection = fda_select(pool, in_domain, f.budget, o);
  std::vector<SentencePair> chosen;
  for (auto i : selection.selected_indices) chosen.push_back(pool[i]);
  save_parallel(ParallelCorpus(std::move(chosen)), f.out + ".src", f.out + ".tgt");
  out << "selected " << selection.selected_indices.size() << " of " << pool.size() << " pairs\n";
  return kOk;
}

int cmd_serve(const Flags& f, std::ostream& out, std::ostream& err) {
  ServiceOptions o;
  o.log_dir = f.log_dir;
  o.seed = f.seed;
  o.session_defaults.policy = online_policy(f);
  o.session_defaults.search = search_options(f);
  o.session_defaults.update_on_accept = !f.no_update_on_accept;
  ResolvedConfig(err, "serve")
      .add("checkpoint", f.checkpoint)
      .add("host", f.host)
      .add("port", f.port)
      .add("log_dir", f.log_dir.empty() ? "-" : f.log_dir)
      .add("resume", f.resume)
      .add("beam", o.session_defaults.search.beam_size)
      .add("updates_per_sample", o.session_defaults.policy.updates_per_sample)
      .add("online_lr", o.session_defaults.policy.learning_rate)
      .add("seed", f.seed)
      .print();
  WorkbenchService service(load_system(f), o);
  if (f.resume) out << "resumed " << service.resume() << " sessions\n";
  out << "adaptmt " << kVersion << " listening on " << f.host << ":" << f.port << std::endl;
  serve(service, f.host, f.port);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app("Adaptive NMT post-editing workbench", "adaptmt");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto common_checkpoint = [&](CLI::App* c) {
    c->add_option("--checkpoint", f.checkpoint, "Model checkpoint")->required();
    c->add_option("--bpe", f.bpe, "BPE model (default: <checkpoint>.bpe)");
  };
  auto common_search = [&](CLI::App* c) {
    c->add_option("--beam", f.beam, "Beam size")->capture_default_str();
    c->add_option("--max-len", f.max_len, "Output length cap (0: 2*source+5)")->capture_default_str();
    c->add_option("--normalization", f.normalization, "none|length")->capture_default_str();
  };
  auto common_policy = [&](CLI::App* c) {
    c->add_option("--updates-per-sample", f.updates_per_sample, "SGD passes per post-edit")->capture_default_str();
    c->add_option("--online-lr", f.online_lr, "SGD learning rate")->capture_default_str();
    c->add_flag("--no-update-on-accept", f.no_update_on_accept, "Skip updates for unedited hypotheses");
  };
  auto common_significance = [&](CLI::App* c) {
    c->add_option("--repetitions", f.repetitions, "Approximate randomization repetitions")->capture_default_str();
    c->add_option("--alpha", f.alpha, "Significance level")->capture_default_str();
    c->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  };

  auto* make_toy = app.add_subcommand("make-toy", "Write the synthetic general/dev/in-domain corpora");
  make_toy->add_option("--out", f.out, "Output directory")->required();
  make_toy->add_option("--seed", f.seed)->capture_default_str();

  auto* learn = app.add_subcommand("learn-bpe", "Learn a joint BPE model");
  learn->add_option("--src", f.src)->required();
  learn->add_option("--tgt", f.tgt)->required();
  learn->add_option("--merges", f.merges)->capture_default_str();
  learn->add_option("--out", f.out)->required();

  auto* train_cmd = app.add_subcommand("train", "Train a model; writes <out>, <out>.bpe and <out>.config");
  train_cmd->add_option("--src", f.src)->required();
  train_cmd->add_option("--tgt", f.tgt)->required();
  train_cmd->add_option("--dev", f.dev, "Dev set prefix (reads <dev>.src and <dev>.tgt)");
  train_cmd->add_option("--merges", f.merges)->capture_default_str();
  train_cmd->add_option("--hidden", f.hidden)->capture_default_str();
  train_cmd->add_option("--embed", f.embed)->capture_default_str();
  train_cmd->add_flag("--bidirectional", f.bidirectional);
  train_cmd->add_option("--batch", f.batch)->capture_default_str();
  train_cmd->add_option("--epochs", f.epochs)->capture_default_str();
  train_cmd->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--smoothing", f.smoothing, "Label smoothing")->capture_default_str();
  train_cmd->add_option("--seed", f.seed)->capture_default_str();
  train_cmd->add_option("--threads", f.threads, "Gradient workers (0: all cores)")->capture_default_str();
  train_cmd->add_option("--out", f.out, "Checkpoint path")->required();

  auto* translate_cmd = app.add_subcommand("translate", "Translate lines from --src or stdin");
  common_checkpoint(translate_cmd);
  common_search(translate_cmd);
  translate_cmd->add_option("--src", f.src, "Input file (default: stdin)");

  auto* simulate_cmd = app.add_subcommand("simulate", "Post-edit a test set with its references");
  common_checkpoint(simulate_cmd);
  common_search(simulate_cmd);
  common_policy(simulate_cmd);
  common_significance(simulate_cmd);
  simulate_cmd->add_option("--test", f.test, "Test set prefix (reads <test>.src and <test>.tgt)");
  simulate_cmd->add_option("--src", f.src, "Test source file");
  simulate_cmd->add_option("--tgt", f.tgt, "Test reference file");
  simulate_cmd->add_option("--mode", f.mode, "static|adaptive|both")->capture_default_str();
  simulate_cmd->add_option("--doc-repeat", f.doc_repeat, "Concatenate the test set this many times")->capture_default_str();
  simulate_cmd->add_option("--out", f.out, "Directory for session logs and reports");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Corpus BLEU and TER");
  evaluate_cmd->add_option("--hyp", f.hyp)->required();
  evaluate_cmd->add_option("--ref", f.ref)->required();

  auto* significance_cmd = app.add_subcommand("significance", "Approximate randomization test between two logs");
  significance_cmd->add_option("--a", f.a)->required();
  significance_cmd->add_option("--b", f.b)->required();
  significance_cmd->add_option("--metric", f.metric, "bleu|ter")->capture_default_str();
  common_significance(significance_cmd);

  auto* replay_cmd = app.add_subcommand("replay", "Re-run a session log and compare hypotheses");
  common_checkpoint(replay_cmd);
  replay_cmd->add_option("--log", f.logs)->required();

  auto* report_cmd = app.add_subcommand("report", "Rebuild a report from session logs");
  report_cmd->add_option("--log", f.logs, "Session log (static first, then adaptive)")->required();
  report_cmd->add_option("--format", f.format, "text|json")->capture_default_str();
  report_cmd->add_option("--mode", f.mode, "Scoring label: human for post-edit sessions");
  common_significance(report_cmd);

  auto* select_cmd = app.add_subcommand("select", "Feature-decay selection of in-domain-like pairs");
  select_cmd->add_option("--src", f.src)->required();
  select_cmd->add_option("--tgt", f.tgt)->required();
  select_cmd->add_option("--test", f.test, "In-domain source text")->required();
  select_cmd->add_option("--budget", f.budget)->required();
  select_cmd->add_option("--out", f.out, "Output prefix")->required();

  auto* serve_cmd = app.add_subcommand("serve", "Run the post-editing HTTP service");
  common_checkpoint(serve_cmd);
  common_search(serve_cmd);
  common_policy(serve_cmd);
  serve_cmd->add_option("--port", f.port)->capture_default_str();
  serve_cmd->add_option("--host", f.host)->capture_default_str();
  serve_cmd->add_option("--log-dir", f.log_dir, "Session log directory");
  serve_cmd->add_flag("--resume", f.resume, "Replay logs found in --log-dir");
  serve_cmd->add_option("--seed", f.seed, "Seed for blind mode assignment")->capture_default_str();

  std::vector<std::string> argv_storage{"adaptmt"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "adaptmt: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*make_toy) return cmd_make_toy(f, out, err);
    if (*learn) return cmd_learn_bpe(f, out, err);
    if (*train_cmd) return cmd_train(f, out, err);
    if (*translate_cmd) return cmd_translate(f, out, err);
    if (*simulate_cmd) return cmd_simulate(f, out, err);
    if (*evaluate_cmd) return cmd_evaluate(f, out, err);
    if (*significance_cmd) return cmd_significance(f, out, err);
    if (*replay_cmd) return cmd_replay(f, out, err);
    if (*report_cmd) return cmd_report(f, out, err);
    if (*select_cmd) return cmd_select(f, out, err);
    if (*serve_cmd) return cmd_serve(f, out, err);
  } catch (const IoError& e) {
    err << "adaptmt: " << e.what() << "\n";
    return kIo;
  } catch (const CheckpointError& e) {
    err << "adaptmt: " << e.what() << "\n";
    return kCheckpoint;
  } catch (const NumericError& e) {
    err << "adaptmt: " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    err << "adaptmt: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const std::exception& e) {
    err << "adaptmt: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace adaptmt::cli
