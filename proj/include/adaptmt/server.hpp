#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include "adaptmt/adapt.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace adaptmt {

struct Document {
  std::string id;
  std::string name;
  std::vector<Tokens> source;
  // Optional; only used for post-hoc scoring.
  std::vector<Tokens> reference;
};

struct ServiceOptions {
  // Session logs are written here, one JSONL file per session, flushed on
  // every confirmation. Empty disables logging.
  std::filesystem::path log_dir;
  SessionConfig session_defaults;
  // Drives the hidden mode assignment of blind pairs.
  std::uint64_t seed = 1;
  Clock clock;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
  // Non-JSON payloads (session log downloads).
  std::optional<std::string> text;
};

// The post-editing service behind the HTTP endpoints. Every public method is
// safe to call concurrently; requests for one session are serialized.
class WorkbenchService {
 public:
  WorkbenchService(std::shared_ptr<const TranslationSystem> base, ServiceOptions options = {});

  // Dispatches "METHOD /path" with a JSON body and maps errors onto status
  // codes: 400 invalid input, 404 unknown id, 409 out-of-sequence request.
  ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body);

  nlohmann::json health() const;
  nlohmann::json create_document(const nlohmann::json& request);
  nlohmann::json create_session(const nlohmann::json& request);
  nlohmann::json translate(const std::string& session_id, const nlohmann::json& request);
  nlohmann::json confirm(const std::string& session_id, const nlohmann::json& request);
  nlohmann::json close(const std::string& session_id);
  nlohmann::json report(const std::string& session_id);
  // JSONL session log; blind sessions only once closed.
  std::string log(const std::string& session_id);

  // Rebuilds sessions from the logs in the log directory by replaying them
  // on the base checkpoint. Returns the number of sessions restored.
  std::size_t resume();

 private:
  struct SessionState {
    std::mutex mutex;
    std::unique_ptr<AdaptationSession> session;
    std::string document_id;
    bool blind = false;
    bool closed = false;
    std::optional<Tokens> pending_hypothesis;
  };

  std::shared_ptr<SessionState> find_session(const std::string& id) const;
  std::shared_ptr<const Document> find_document(const std::string& id) const;
  std::string open_session(SessionMode mode, const std::shared_ptr<const Document>& doc, bool blind,
                           const SessionConfig& config);
  void write_log(const SessionState& state) const;
  void append_record(const SessionState& state) const;
  std::filesystem::path log_path(const std::string& session_id) const;

  std::shared_ptr<const TranslationSystem> base_;
  ServiceOptions options_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<const Document>> documents_;
  std::map<std::string, std::shared_ptr<SessionState>> sessions_;
  std::size_t next_document_ = 1;
  std::size_t next_session_ = 1;
  std::mt19937_64 blind_rng_;
};

// An HTTP/1.1 server routing every request through service.handle().
std::unique_ptr<httplib::Server> make_http_server(WorkbenchService& service);

// Serves until the process is stopped.
void serve(WorkbenchService& service, const std::string& host, int port);

}  // namespace adaptmt
