#include "adaptmt/server.hpp"

#include <algorithm>
#include <fstream>

#include "adaptmt/error.hpp"
#include "adaptmt/harness.hpp"
#include "adaptmt/version.hpp"
#include "httplib.h"

namespace adaptmt {

using nlohmann::json;

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos < path.size()) {
    const auto next = path.find('/', pos);
    const auto end = next == std::string::npos ? path.size() : next;
    if (end > pos) parts.push_back(path.substr(pos, end - pos));
    pos = end + 1;
  }
  return parts;
}

// Accepts an array of lines or one newline-separated string.
std::vector<Tokens> read_lines(const json& value, const std::string& field) {
  std::vector<std::string> lines;
  if (value.is_string()) {
    std::string text = value.get<std::string>();
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(pos, end - pos);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
      pos = end + 1;
    }
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
  } else if (value.is_array()) {
    for (const auto& v : value) {
      if (!v.is_string()) throw ValidationError(field + " lines must be strings");
      lines.push_back(v.get<std::string>());
    }
  } else {
    throw ValidationError(field + " must be a string or an array of strings");
  }
  std::vector<Tokens> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (auto bad = find_invalid_utf8(lines[i])) {
      throw EncodingError(field + " line " + std::to_string(i + 1) + ": invalid UTF-8 at byte " + std::to_string(*bad));
    }
    out.push_back(tokenize(lines[i]));
  }
  return out;
}

json lines_json(const std::vector<Tokens>& lines) {
  json out = json::array();
  for (const auto& l : lines) out.push_back(join(l));
  return out;
}

std::size_t require_index(const json& request) {
  if (!request.contains("index") || !request.at("index").is_number_integer()) {
    throw ValidationError("request needs an integer segment index");
  }
  const auto index = request.at("index").get<long long>();
  if (index < 1) throw ValidationError("segment indices start at 1");
  return static_cast<std::size_t>(index);
}

std::size_t id_number(const std::string& id, const std::string& prefix) {
  if (id.rfind(prefix, 0) != 0) return 0;
  try {
    return std::stoul(id.substr(prefix.size()));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

WorkbenchService::WorkbenchService(std::shared_ptr<const TranslationSystem> base, ServiceOptions options)
    : base_(std::move(base)), options_(std::move(options)), blind_rng_(options_.seed) {
  if (!base_) throw ValidationError("service needs a base translation system");
  if (!options_.clock) options_.clock = steady_clock_seconds();
  if (!options_.log_dir.empty()) std::filesystem::create_directories(options_.log_dir);
}

json WorkbenchService::health() const {
  return {{"status", "ok"}, {"version", kVersion}, {"checkpoint_hash", base_->checkpoint_hash}};
}

json WorkbenchService::create_document(const json& request) {
  auto doc = std::make_shared<Document>();
  doc->name = request.value("name", std::string("document"));
  if (!request.contains("source")) throw ValidationError("document needs a source");
  doc->source = read_lines(request.at("source"), "source");
  if (doc->source.empty()) throw ValidationError("document has no segments");
  for (std::size_t i = 0; i < doc->source.size(); ++i) {
    if (doc->source[i].empty()) throw ValidationError("source segment " + std::to_string(i + 1) + " is empty");
  }
  if (request.contains("reference") && !request.at("reference").is_null()) {
    doc->reference = read_lines(request.at("reference"), "reference");
    if (doc->reference.size() != doc->source.size()) {
      throw ValidationError("reference has " + std::to_string(doc->reference.size()) + " lines, source has " +
                            std::to_string(doc->source.size()));
    }
  }
  std::unique_lock lock(registry_mutex_);
  doc->id = "doc-" + std::to_string(next_document_++);
  documents_[doc->id] = doc;
  return {{"document_id", doc->id}, {"name", doc->name}, {"segments", doc->source.size()}};
}

std::shared_ptr<const Document> WorkbenchService::find_document(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  auto it = documents_.find(id);
  if (it == documents_.end()) throw NotFoundError("unknown document '" + id + "'");
  return it->second;
}

std::shared_ptr<WorkbenchService::SessionState> WorkbenchService::find_session(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

std::string WorkbenchService::open_session(SessionMode mode, const std::shared_ptr<const Document>& doc, bool blind,
                                           const SessionConfig& config) {
  auto state = std::make_shared<SessionState>();
  SessionConfig c = config;
  c.mode = mode;
  std::string id;
  {
    std::unique_lock lock(registry_mutex_);
    id = "session-" + std::to_string(next_session_++);
  }
  state->session = std::make_unique<AdaptationSession>(id, base_, c, options_.clock);
  state->document_id = doc->id;
  state->blind = blind;
  auto& meta = state->session->metadata();
  meta["document"] = doc->name;
  meta["document_id"] = doc->id;
  meta["segments"] = lines_json(doc->source);
  if (!doc->reference.empty()) meta["reference"] = lines_json(doc->reference);
  meta["blind"] = blind;
  meta["closed"] = false;
  write_log(*state);
  std::unique_lock lock(registry_mutex_);
  sessions_[id] = state;
  return id;
}

json WorkbenchService::create_session(const json& request) {
  if (request.contains("checkpoint") && request.at("checkpoint") != base_->checkpoint_hash) {
    throw NotFoundError("unknown checkpoint '" + request.at("checkpoint").dump() + "'");
  }
  const std::string mode = request.value("mode", std::string("adaptive"));
  const auto describe = [&](const std::string& id) {
    auto state = find_session(id);
    json j = {{"session_id", id},
              {"document_id", state->document_id},
              {"segments", find_document(state->document_id)->source.size()},
              {"blind", state->blind}};
    if (!state->blind) j["mode"] = to_string(state->session->mode());
    return j;
  };

  if (mode == "blind-pair") {
    if (!request.contains("documents") || !request.at("documents").is_array() || request.at("documents").size() != 2) {
      throw ValidationError("blind-pair needs two document ids in 'documents'");
    }
    const auto a = find_document(request.at("documents").at(0).get<std::string>());
    const auto b = find_document(request.at("documents").at(1).get<std::string>());
    bool first_adaptive;
    {
      std::unique_lock lock(registry_mutex_);
      first_adaptive = blind_rng_() & 1u;
    }
    const auto mode_a = first_adaptive ? SessionMode::kAdaptive : SessionMode::kStatic;
    const auto mode_b = first_adaptive ? SessionMode::kStatic : SessionMode::kAdaptive;
    const auto id_a = open_session(mode_a, a, true, options_.session_defaults);
    const auto id_b = open_session(mode_b, b, true, options_.session_defaults);
    return {{"sessions", json::array({describe(id_a), describe(id_b)})}};
  }

  const SessionMode parsed = parse_mode(mode);
  if (!request.contains("document_id")) throw ValidationError("session needs a document_id");
  const auto doc = find_document(request.at("document_id").get<std::string>());
  const bool blind = request.value("blind", false);
  return describe(open_session(parsed, doc, blind, options_.session_defaults));
}

json WorkbenchService::translate(const std::string& session_id, const json& request) {
  auto state = find_session(session_id);
  const auto doc = find_document(state->document_id);
  const std::size_t index = require_index(request);
  std::lock_guard lock(state->mutex);
  if (state->closed) throw SequencingError("session " + session_id + " is closed");
  if (index > doc->source.size()) {
    throw ValidationError("document has " + std::to_string(doc->source.size()) + " segments, got index " +
                          std::to_string(index));
  }
  const std::size_t expected = state->session->next_index();
  if (index != expected) {
    throw SequencingError("expected segment " + std::to_string(expected) + ", got " + std::to_string(index));
  }
  auto result = state->session->next_hypothesis(doc->source[index - 1]);
  state->pending_hypothesis = result.hypothesis;
  return {{"index", index}, {"hypothesis", join(result.hypothesis)}, {"translate_latency", result.translate_latency}};
}

json WorkbenchService::confirm(const std::string& session_id, const json& request) {
  auto state = find_session(session_id);
  const auto doc = find_document(state->document_id);
  const std::size_t index = require_index(request);
  if (!request.contains("post_edit") || !request.at("post_edit").is_string()) {
    throw ValidationError("confirm needs a post_edit string");
  }
  const std::string text = request.at("post_edit").get<std::string>();
  if (auto bad = find_invalid_utf8(text)) throw EncodingError("post_edit: invalid UTF-8 at byte " + std::to_string(*bad));
  const json duration = request.value("edit_duration", json(0.0));
  if (!duration.is_number()) throw ValidationError("edit_duration must be a number of seconds");

  std::lock_guard lock(state->mutex);
  if (state->closed) throw SequencingError("session " + session_id + " is closed");
  const std::size_t expected = state->session->next_index();
  if (index != expected || !state->pending_hypothesis) {
    throw SequencingError("segment " + std::to_string(index) + " cannot be confirmed: expected a translated segment " +
                          std::to_string(expected));
  }
  const auto& rec = state->session->confirm_postedit(doc->source[index - 1], *state->pending_hypothesis,
                                                     tokenize(text), duration.get<double>());
  state->pending_hypothesis.reset();
  append_record(*state);

  json record = {{"index", rec.index}, {"hter", rec.hter}, {"hbleu", rec.hbleu}};
  json out = {{"index", rec.index}, {"record", record}, {"complete", rec.index == doc->source.size()}};
  // Update timings and step counts would give a blind session's mode away.
  if (!state->blind || state->closed) {
    out["update_latency"] = rec.update_latency;
    out["record"]["sgd_steps"] = rec.sgd_steps;
    out["record"]["version"] = state->session->version();
  }
  if (rec.update_error) out["warning"] = "model update failed and was rolled back: " + *rec.update_error;
  return out;
}

json WorkbenchService::close(const std::string& session_id) {
  auto state = find_session(session_id);
  std::lock_guard lock(state->mutex);
  state->closed = true;
  state->pending_hypothesis.reset();
  state->session->metadata()["closed"] = true;
  write_log(*state);
  return {{"session_id", session_id},
          {"mode", to_string(state->session->mode())},
          {"records", state->session->records().size()},
          {"closed", true}};
}

json WorkbenchService::report(const std::string& session_id) {
  auto state = find_session(session_id);
  const auto doc = find_document(state->document_id);
  std::lock_guard lock(state->mutex);
  if (state->session->records().empty()) throw ValidationError("session " + session_id + " has no confirmed segments");
  ReportOptions ro;
  ro.test_name = doc->name;
  ro.scored_against = "post-edit";
  json j = report_to_json(build_report({session_log(*state->session)}, ro));
  j["session_id"] = session_id;
  j["closed"] = state->closed;
  j["blind"] = state->blind;
  if (state->blind && !state->closed) {
    for (auto& s : j["systems"]) {
      s.erase("mode");
      s["latency"].erase("mean_update");
    }
    j["config"].erase("session");
    j.erase("logs");
  }
  return j;
}

std::string WorkbenchService::log(const std::string& session_id) {
  auto state = find_session(session_id);
  std::lock_guard lock(state->mutex);
  if (state->blind && !state->closed) {
    throw SequencingError("the log of blind session " + session_id + " is available after close");
  }
  return serialize_log(*state->session);
}

std::filesystem::path WorkbenchService::log_path(const std::string& session_id) const {
  return options_.log_dir / (session_id + ".jsonl");
}

void WorkbenchService::write_log(const SessionState& state) const {
  if (options_.log_dir.empty()) return;
  const auto path = log_path(state.session->id());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << serialize_log(*state.session);
    out.flush();
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void WorkbenchService::append_record(const SessionState& state) const {
  if (options_.log_dir.empty()) return;
  const auto path = log_path(state.session->id());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  out << record_to_json(state.session->records().back()).dump() << '\n';
  out.flush();
  if (!out) throw IoError("cannot append to " + path.string());
}

std::size_t WorkbenchService::resume() {
  if (options_.log_dir.empty()) return 0;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(options_.log_dir)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::size_t restored = 0;
  for (const auto& file : files) {
    const SessionLog log = load_log(file);
    {
      std::shared_lock lock(registry_mutex_);
      if (sessions_.count(log.session_id)) continue;
    }
    auto replayed = replay_log(base_, log, options_.clock);
    if (!replayed.mismatches.empty()) {
      throw ValidationError("replay of " + file.string() + " diverged at segment " +
                            std::to_string(replayed.mismatches.front()));
    }
    const auto& meta = log.metadata;
    auto doc = std::make_shared<Document>();
    doc->id = meta.at("document_id").get<std::string>();
    doc->name = meta.value("document", std::string("document"));
    doc->source = read_lines(meta.at("segments"), "segments");
    if (meta.contains("reference")) doc->reference = read_lines(meta.at("reference"), "reference");

    auto state = std::make_shared<SessionState>();
    state->session = std::make_unique<AdaptationSession>(std::move(replayed.session));
    state->document_id = doc->id;
    state->blind = meta.value("blind", false);
    state->closed = meta.value("closed", false);

    std::unique_lock lock(registry_mutex_);
    documents_.try_emplace(doc->id, doc);
    sessions_[log.session_id] = state;
    next_session_ = std::max(next_session_, id_number(log.session_id, "session-") + 1);
    next_document_ = std::max(next_document_, id_number(doc->id, "doc-") + 1);
    ++restored;
  }
  return restored;
}

ServiceResponse WorkbenchService::handle(const std::string& method, const std::string& path, const std::string& body) {
  ServiceResponse r;
  try {
    json request = json::object();
    if (!body.empty()) {
      request = json::parse(body);
      if (!request.is_object()) throw ValidationError("request body must be a JSON object");
    }
    const auto parts = split_path(path);
    if (method == "GET" && parts == std::vector<std::string>{"health"}) {
      r.body = health();
    } else if (method == "POST" && parts == std::vector<std::string>{"documents"}) {
      r.body = create_document(request);
      r.status = 201;
    } else if (method == "POST" && parts == std::vector<std::string>{"sessions"}) {
      r.body = create_session(request);
      r.status = 201;
    } else if (parts.size() == 3 && parts[0] == "sessions") {
      const auto& id = parts[1];
      const auto& action = parts[2];
      if (method == "POST" && action == "translate") {
        r.body = translate(id, request);
      } else if (method == "POST" && action == "confirm") {
        r.body = confirm(id, request);
      } else if (method == "POST" && action == "close") {
        r.body = close(id);
      } else if (method == "GET" && action == "report") {
        r.body = report(id);
      } else if (method == "GET" && action == "log") {
        r.text = log(id);
      } else {
        throw NotFoundError("no route " + method + " " + path);
      }
    } else {
      throw NotFoundError("no route " + method + " " + path);
    }
  } catch (const NotFoundError& e) {
    r = {404, {{"error", e.what()}}, std::nullopt};
  } catch (const SequencingError& e) {
    r = {409, {{"error", e.what()}}, std::nullopt};
  } catch (const ValidationError& e) {
    r = {400, {{"error", e.what()}}, std::nullopt};
  } catch (const EncodingError& e) {
    r = {400, {{"error", e.what()}}, std::nullopt};
  } catch (const json::exception& e) {
    r = {400, {{"error", std::string("malformed request: ") + e.what()}}, std::nullopt};
  } catch (const std::exception& e) {
    r = {500, {{"error", e.what()}}, std::nullopt};
  }
  return r;
}

std::unique_ptr<httplib::Server> make_http_server(WorkbenchService& service) {
  auto server = std::make_unique<httplib::Server>();
  server->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  const auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto out = service.handle(req.method, req.path, req.body);
    res.status = out.status;
    if (out.text) {
      res.set_content(*out.text, "application/x-ndjson");
    } else {
      res.set_content(out.body.dump(), "application/json");
    }
  };
  server->Get(".*", dispatch);
  server->Post(".*", dispatch);
  server->Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  return server;
}

void serve(WorkbenchService& service, const std::string& host, int port) {
  auto server = make_http_server(service);
  if (!server->listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace adaptmt
