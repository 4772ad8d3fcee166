#include "poolal/service.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "poolal/error.hpp"

namespace poolal {

using nlohmann::json;

OracleMode parse_oracle_mode(const std::string& name) {
  if (name == "simulated") return OracleMode::simulated;
  if (name == "human") return OracleMode::human;
  throw ValidationError("mode must be 'simulated' or 'human', got '" + name + "'");
}

std::string to_string(OracleMode mode) { return mode == OracleMode::simulated ? "simulated" : "human"; }

struct SessionManager::Session {
  Session(std::string id_, OracleMode mode_, const ExperimentConfig& config)
      : id(std::move(id_)), mode(mode_), learner(config) {}

  std::string id;
  OracleMode mode;
  mutable std::mutex mutex;
  ActiveLearner learner;
  IndexList pending;
  std::map<std::size_t, int> submitted;
  /// Labels supplied by annotators for each completed round, in selection
  /// order; empty entries for rounds labeled from held ground truth.
  std::vector<std::vector<int>> round_labels;
};

namespace {

RenderHint render_hint(const ActiveLearner& learner) {
  const DatasetSpec& ds = learner.config().dataset;
  const std::size_t dim = learner.pool().feature_dim();
  if (ds.image_width > 0 && ds.image_height > 0 && ds.image_width * ds.image_height == dim) {
    return {"image", ds.image_width, ds.image_height};
  }
  if (dim == 2) return {"scatter", 0, 0};
  return {"vector", 0, 0};
}

std::vector<double> row_values(const Matrix& m, Eigen::Index row) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(j)] = m(row, j);
  return out;
}

}  // namespace

SessionManager::SessionManager(std::optional<std::string> snapshot_dir) : snapshot_dir_(std::move(snapshot_dir)) {}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no session '" + id + "'");
  return it->second;
}

std::string SessionManager::create_session(const ExperimentConfig& config, OracleMode mode) {
  std::string id;
  {
    std::unique_lock lock(sessions_mutex_);
    do {
      id = "s" + std::to_string(next_id_++);
    } while (sessions_.count(id));
  }
  // Pool construction and the first training run happen outside the map lock.
  auto session = std::make_shared<Session>(id, mode, config);
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_[id] = session;
  }
  write_snapshot(*session);
  return id;
}

AdvanceResult SessionManager::advance(const std::string& id) {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (!s->pending.empty()) {
    throw ConflictError(std::to_string(s->pending.size() - s->submitted.size()) +
                        " labels are still pending for round " + std::to_string(s->learner.rounds_completed() + 1));
  }
  AdvanceResult result;
  if (s->learner.done()) {
    result.done = true;
    result.round = s->learner.rounds_completed();
    return result;
  }
  if (s->mode == OracleMode::simulated) {
    result.record = s->learner.step();
    s->round_labels.emplace_back();
    result.round = s->learner.rounds_completed();
    write_snapshot(*s);
    return result;
  }
  s->pending = s->learner.query().selected;
  s->submitted.clear();
  result.round = s->learner.rounds_completed();
  result.pending = pending_locked(*s);
  return result;
}

PendingView SessionManager::pending_locked(const Session& s) {
  PendingView view;
  view.render = render_hint(s.learner);
  const Pool& pool = s.learner.pool();
  for (std::size_t idx : s.pending) {
    if (s.submitted.count(idx)) continue;
    const Matrix row = pool.features().row(static_cast<Eigen::Index>(idx));
    PendingItem item;
    item.index = idx;
    item.features = row_values(row, 0);
    item.raw_features = row_values(pool.preprocessor().invert(row), 0);
    view.items.push_back(std::move(item));
  }
  view.awaiting = view.items.size();
  return view;
}

std::size_t SessionManager::submit_labels(const std::string& id,
                                          const std::vector<std::pair<std::size_t, int>>& labels) {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (s->mode != OracleMode::human) throw ConflictError("session '" + id + "' labels from ground truth");
  if (s->pending.empty()) throw ConflictError("no labels are pending; advance the session first");
  if (labels.empty()) throw ValidationError("no labels submitted");
  const int k = s->learner.pool().num_classes();
  std::set<std::size_t> seen;
  for (const auto& [idx, label] : labels) {
    if (std::find(s->pending.begin(), s->pending.end(), idx) == s->pending.end()) {
      throw ValidationError("index " + std::to_string(idx) + " is not pending");
    }
    if (s->submitted.count(idx) || !seen.insert(idx).second) {
      throw ValidationError("index " + std::to_string(idx) + " was already labeled");
    }
    if (label < 0 || label >= k) {
      throw ValidationError("label " + std::to_string(label) + " for index " + std::to_string(idx) +
                            " is outside [0, " + std::to_string(k) + ")");
    }
  }
  for (const auto& [idx, label] : labels) s->submitted[idx] = label;

  const std::size_t remaining = s->pending.size() - s->submitted.size();
  if (remaining > 0) return remaining;

  std::vector<int> ordered;
  ordered.reserve(s->pending.size());
  for (std::size_t idx : s->pending) ordered.push_back(s->submitted.at(idx));
  s->learner.complete_round(s->pending, ordered);
  s->round_labels.push_back(std::move(ordered));
  s->pending.clear();
  s->submitted.clear();
  write_snapshot(*s);
  return 0;
}

std::vector<RoundRecord> SessionManager::curve(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->learner.records();
}

PendingView SessionManager::pending(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  return pending_locked(*s);
}

SessionInfo SessionManager::info(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  SessionInfo out;
  out.id = s->id;
  out.mode = s->mode;
  out.config = config_to_map(s->learner.config());
  out.round = s->learner.rounds_completed();
  out.rounds = s->learner.config().rounds;
  out.num_classes = s->learner.pool().num_classes();
  out.feature_dim = s->learner.pool().feature_dim();
  out.n_labeled = s->learner.pool().n_labeled();
  out.n_unlabeled = s->learner.pool().n_unlabeled();
  out.render = render_hint(s->learner);
  return out;
}

namespace {

json snapshot_json(const std::string& id, OracleMode mode, const ActiveLearner& learner,
                   const std::vector<std::vector<int>>& round_labels) {
  json rounds = json::array();
  const auto& records = learner.records();
  for (std::size_t t = 1; t < records.size(); ++t) {
    json entry{{"selected", records[t].selected}, {"accuracy", records[t].accuracy}};
    if (!round_labels[t - 1].empty()) entry["labels"] = round_labels[t - 1];
    rounds.push_back(std::move(entry));
  }
  return json{{"format", "poolal-session"},
              {"version", 1},
              {"id", id},
              {"mode", to_string(mode)},
              {"config", config_to_map(learner.config())},
              {"round0_accuracy", records.front().accuracy},
              {"rounds", std::move(rounds)}};
}

}  // namespace

std::string SessionManager::snapshot(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  return snapshot_json(s->id, s->mode, s->learner, s->round_labels).dump(2);
}

void SessionManager::write_snapshot(const Session& s) const {
  if (!snapshot_dir_) return;
  const std::string path = *snapshot_dir_ + "/" + s.id + ".json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write snapshot '" + path + "'");
  out << snapshot_json(s.id, s.mode, s.learner, s.round_labels).dump(2) << '\n';
}

std::string SessionManager::restore(const std::string& snapshot_text) {
  json doc;
  try {
    doc = json::parse(snapshot_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("snapshot: ") + e.what());
  }
  if (doc.value("format", "") != "poolal-session") throw ParseError("snapshot: not a session snapshot");

  std::string id;
  OracleMode mode;
  ExperimentConfig config;
  std::shared_ptr<Session> session;
  try {
    id = doc.at("id").get<std::string>();
    mode = parse_oracle_mode(doc.at("mode").get<std::string>());
    config = config_from_map(doc.at("config").get<std::map<std::string, std::string>>());
    session = std::make_shared<Session>(id, mode, config);
    if (session->learner.records().front().accuracy != doc.at("round0_accuracy").get<double>()) {
      throw ParseError("snapshot: round 0 does not reproduce the recorded accuracy");
    }
    for (const auto& entry : doc.at("rounds")) {
      const auto selected = entry.at("selected").get<IndexList>();
      if (entry.contains("labels")) {
        const auto labels = entry.at("labels").get<std::vector<int>>();
        session->learner.complete_round(selected, labels);
        session->round_labels.push_back(labels);
      } else {
        session->learner.complete_round(selected);
        session->round_labels.emplace_back();
      }
      if (session->learner.records().back().accuracy != entry.at("accuracy").get<double>()) {
        throw ParseError("snapshot: replayed round " + std::to_string(session->learner.rounds_completed()) +
                         " does not reproduce the recorded accuracy");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("snapshot: ") + e.what());
  }

  std::unique_lock lock(sessions_mutex_);
  while (sessions_.count(id)) {
    id = "s" + std::to_string(next_id_++);
    session->id = id;
  }
  sessions_[id] = session;
  return id;
}

}  // namespace poolal
