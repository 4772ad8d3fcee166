#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "poolal/harness.hpp"

namespace poolal {

enum class OracleMode { simulated, human };

OracleMode parse_oracle_mode(const std::string& name);
std::string to_string(OracleMode mode);

struct PendingItem {
  std::size_t index = 0;
  std::vector<double> features;
  /// Untransformed features, for display.
  std::vector<double> raw_features;
};

/// How a client should draw an example.
struct RenderHint {
  std::string kind;  // "scatter", "image" or "vector"
  std::size_t width = 0;
  std::size_t height = 0;
};

struct PendingView {
  std::vector<PendingItem> items;
  RenderHint render;
  std::size_t awaiting = 0;
};

struct AdvanceResult {
  bool done = false;
  std::size_t round = 0;
  std::optional<RoundRecord> record;  // simulated mode
  PendingView pending;                // human mode
};

struct SessionInfo {
  std::string id;
  OracleMode mode = OracleMode::simulated;
  std::map<std::string, std::string> config;
  std::size_t round = 0;
  std::size_t rounds = 0;
  int num_classes = 0;
  std::size_t feature_dim = 0;
  std::size_t n_labeled = 0;
  std::size_t n_unlabeled = 0;
  RenderHint render;
};

/// In-memory sessions over ActiveLearner. Mutations of one session are
/// serialized; distinct sessions proceed independently.
class SessionManager {
 public:
  /// With a snapshot directory set, every session is written to
  /// `<dir>/<id>.json` at creation and after each completed round.
  explicit SessionManager(std::optional<std::string> snapshot_dir = std::nullopt);

  std::string create_session(const ExperimentConfig& config, OracleMode mode);

  /// Simulated mode runs a whole round. Human mode moves the next query
  /// into the pending list. Throws ConflictError while labels are pending.
  AdvanceResult advance(const std::string& id);

  /// Records labels for pending examples and returns how many remain. When
  /// none remain the round is applied atomically. Throws ValidationError
  /// naming the offending index or label.
  std::size_t submit_labels(const std::string& id, const std::vector<std::pair<std::size_t, int>>& labels);

  std::vector<RoundRecord> curve(const std::string& id) const;
  PendingView pending(const std::string& id) const;
  SessionInfo info(const std::string& id) const;

  /// Snapshot of a session at its last round boundary, as JSON text.
  std::string snapshot(const std::string& id) const;
  /// Rebuilds a session from snapshot text by replaying its rounds.
  /// Returns the restored id.
  std::string restore(const std::string& snapshot_text);

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  static PendingView pending_locked(const Session& s);
  void write_snapshot(const Session& s) const;

  std::optional<std::string> snapshot_dir_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t next_id_ = 1;
};

struct ApiResponse {
  int status = 200;
  std::string body;
};

/// Routes one request against the documented API. Transport-independent so
/// the routes can be exercised without a socket.
ApiResponse handle_api_request(SessionManager& manager, const std::string& method, const std::string& path,
                               const std::string& body);

/// Serves the API over HTTP until stop() is called from another thread.
class HttpService {
 public:
  explicit HttpService(SessionManager& manager);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds and blocks. Port 0 picks a free port, reported by port().
  bool listen(const std::string& host, int port);
  bool bind(const std::string& host, int port);
  void listen_after_bind();
  int port() const { return port_; }
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace poolal
