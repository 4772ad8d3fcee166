#include "poolal/error.hpp"
#include "poolal/service.hpp"

#include <json.hpp>
// After Eigen: the resolver headers pulled in here define a `res` macro.
#include <httplib.h>

namespace poolal {

using nlohmann::json;

namespace {

json record_json(const RoundRecord& r) {
  return json{{"round", r.round},
              {"n_labeled", r.n_labeled},
              {"accuracy", r.accuracy},
              {"selected_indices", r.selected},
              {"wall_seconds", r.wall_seconds}};
}

json curve_json(const std::vector<RoundRecord>& records) {
  json arr = json::array();
  for (const RoundRecord& r : records) arr.push_back(record_json(r));
  return arr;
}

json render_json(const RenderHint& h) {
  json out{{"kind", h.kind}};
  if (h.kind == "image") {
    out["width"] = h.width;
    out["height"] = h.height;
  }
  return out;
}

json pending_json(const PendingView& view) {
  json items = json::array();
  for (const PendingItem& item : view.items) {
    json entry{{"index", item.index}, {"features", item.features}, {"raw_features", item.raw_features}};
    if (item.raw_features.size() == 2) {
      entry["x"] = item.raw_features[0];
      entry["y"] = item.raw_features[1];
    }
    items.push_back(std::move(entry));
  }
  return json{{"items", std::move(items)}, {"awaiting", view.awaiting}, {"render", render_json(view.render)}};
}

std::string value_text(const std::string& key, const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return v.dump();
  if (v.is_array()) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer() && !v[i].is_number_unsigned()) {
        throw ValidationError("config field '" + key + "': array entries must be integers");
      }
      s += (i ? "," : "") + v[i].dump();
    }
    return s;
  }
  throw ValidationError("config field '" + key + "' has an unsupported type");
}

int status_for(const Error& e) {
  const std::string code = e.code();
  if (code == "not_found") return 404;
  if (code == "conflict") return 409;
  if (code == "numeric_error") return 500;
  return 400;
}

ApiResponse reply(int status, const json& body) { return {status, body.dump()}; }

ApiResponse error_reply(int status, const std::string& code, const std::string& message) {
  return reply(status, json{{"error", {{"code", code}, {"message", message}}}});
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start < path.size()) {
    const auto slash = path.find('/', start);
    const auto end = slash == std::string::npos ? path.size() : slash;
    if (end > start) parts.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("request body is not valid JSON: ") + e.what());
  }
}

ApiResponse create(SessionManager& manager, const json& body) {
  if (!body.is_object()) throw ValidationError("request body must be a JSON object");
  ExperimentConfig config;
  if (body.contains("config")) {
    if (!body["config"].is_object()) throw ValidationError("'config' must be an object");
    for (const auto& [key, value] : body["config"].items()) {
      set_config_value(config, key, value_text(key, value));
    }
  }
  const OracleMode mode = parse_oracle_mode(body.value("mode", std::string("simulated")));
  const std::string id = manager.create_session(config, mode);
  const SessionInfo info = manager.info(id);
  json curve = curve_json(manager.curve(id));
  return reply(201, json{{"id", id},
                         {"mode", to_string(mode)},
                         {"round", info.round},
                         {"rounds", info.rounds},
                         {"curve", std::move(curve)}});
}

ApiResponse advance(SessionManager& manager, const std::string& id) {
  const AdvanceResult r = manager.advance(id);
  json out{{"done", r.done}, {"round", r.round}};
  if (r.record) out["record"] = record_json(*r.record);
  if (!r.done && !r.record) out["pending"] = pending_json(r.pending);
  return reply(200, out);
}

ApiResponse labels(SessionManager& manager, const std::string& id, const json& body) {
  if (!body.is_object() || !body.contains("labels") || !body["labels"].is_array()) {
    throw ValidationError("body must be {\"labels\": [{\"index\": i, \"label\": y}, ...]}");
  }
  std::vector<std::pair<std::size_t, int>> pairs;
  for (const json& entry : body["labels"]) {
    if (!entry.is_object() || !entry.contains("index") || !entry.contains("label") ||
        !entry["index"].is_number_unsigned() || !entry["label"].is_number_integer()) {
      throw ValidationError("each label needs a non-negative integer 'index' and an integer 'label'");
    }
    pairs.emplace_back(entry["index"].get<std::size_t>(), entry["label"].get<int>());
  }
  const std::size_t before = manager.curve(id).size();
  const std::size_t remaining = manager.submit_labels(id, pairs);
  json out{{"remaining", remaining}};
  const auto curve = manager.curve(id);
  if (curve.size() > before) out["record"] = record_json(curve.back());
  return reply(200, out);
}

ApiResponse config(SessionManager& manager, const std::string& id) {
  const SessionInfo info = manager.info(id);
  return reply(200, json{{"id", info.id},
                         {"mode", to_string(info.mode)},
                         {"config", info.config},
                         {"round", info.round},
                         {"rounds", info.rounds},
                         {"num_classes", info.num_classes},
                         {"feature_dim", info.feature_dim},
                         {"n_labeled", info.n_labeled},
                         {"n_unlabeled", info.n_unlabeled},
                         {"render", render_json(info.render)}});
}

}  // namespace

ApiResponse handle_api_request(SessionManager& manager, const std::string& method, const std::string& path,
                               const std::string& body) {
  try {
    const auto parts = split_path(path);
    if (parts.empty() || parts[0] != "sessions" || parts.size() > 3) {
      return error_reply(404, "not_found", "no route for " + path);
    }
    if (parts.size() == 1) {
      if (method != "POST") return error_reply(405, "method_not_allowed", method + " " + path);
      return create(manager, parse_body(body));
    }
    const std::string& id = parts[1];
    const std::string action = parts.size() == 3 ? parts[2] : "";
    if (method == "POST" && action == "advance") return advance(manager, id);
    if (method == "POST" && action == "labels") return labels(manager, id, parse_body(body));
    if (method == "GET" && action == "curve") {
      json records = curve_json(manager.curve(id));
      return reply(200, json{{"records", std::move(records)}});
    }
    if (method == "GET" && action == "pending") return reply(200, pending_json(manager.pending(id)));
    if (method == "GET" && action == "config") return config(manager, id);
    if (action == "advance" || action == "labels" || action == "curve" || action == "pending" || action == "config") {
      return error_reply(405, "method_not_allowed", method + " " + path);
    }
    return error_reply(404, "not_found", "no route for " + path);
  } catch (const Error& e) {
    return error_reply(status_for(e), e.code(), e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal_error", e.what());
  }
}

struct HttpService::Impl {
  httplib::Server server;
};

HttpService::HttpService(SessionManager& manager) : impl_(std::make_unique<Impl>()) {
  auto handler = [&manager](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = handle_api_request(manager, req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  impl_->server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                     {"Access-Control-Allow-Headers", "Content-Type"},
                                     {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
}

HttpService::~HttpService() = default;

bool HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    return port_ > 0;
  }
  port_ = port;
  return impl_->server.bind_to_port(host, port);
}

void HttpService::listen_after_bind() { impl_->server.listen_after_bind(); }

bool HttpService::listen(const std::string& host, int port) {
  if (!bind(host, port)) return false;
  return impl_->server.listen_after_bind();
}

void HttpService::stop() { impl_->server.stop(); }

}  // namespace poolal
