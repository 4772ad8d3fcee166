#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

#include "poolal/error.hpp"
#include "poolal/harness.hpp"

namespace poolal {

namespace {

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("option '" + key + "': expected a non-negative integer, got '" + value + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError("option '" + key + "': expected a number, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("option '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<std::size_t> parse_widths(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  if (value.empty() || value == "none") return out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = std::min(value.find(',', start), value.size());
    out.push_back(parse_integer<std::size_t>(key, value.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Option {
  const char* key;
  Setter set;
  Getter get;
};

const std::vector<Option>& options() {
  static const std::vector<Option> table = {
      {"dataset",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         if (v == "two_gaussians") {
           c.dataset.kind = DatasetKind::two_gaussians;
           c.dataset.csv_path.clear();
         } else {
           c.dataset.kind = DatasetKind::csv;
           c.dataset.csv_path = v.rfind("csv:", 0) == 0 ? v.substr(4) : v;
         }
       },
       [](const ExperimentConfig& c) {
         return c.dataset.kind == DatasetKind::two_gaussians ? std::string("two_gaussians") : c.dataset.csv_path;
       }},
      {"header", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.csv_header = parse_bool(k, v); },
       [](const ExperimentConfig& c) { return std::string(c.dataset.csv_header ? "true" : "false"); }},
      {"label-column", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.dataset.label_column = v; },
       [](const ExperimentConfig& c) { return c.dataset.label_column; }},
      {"num-classes",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.num_classes = parse_integer<int>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.dataset.num_classes); }},
      {"n-per-class",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.n_per_class = parse_integer<std::size_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.dataset.n_per_class); }},
      {"separation", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.separation = parse_real(k, v); },
       [](const ExperimentConfig& c) { return real_text(c.dataset.separation); }},
      {"noise", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.noise_sd = parse_real(k, v); },
       [](const ExperimentConfig& c) { return real_text(c.dataset.noise_sd); }},
      {"image-width",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.image_width = parse_integer<std::size_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.dataset.image_width); }},
      {"image-height",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dataset.image_height = parse_integer<std::size_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.dataset.image_height); }},
      {"preprocess",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.preprocess = parse_preprocess_scheme(v); },
       [](const ExperimentConfig& c) { return to_string(c.preprocess); }},
      {"test-fraction", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.test_fraction = parse_real(k, v); },
       [](const ExperimentConfig& c) { return real_text(c.test_fraction); }},
      {"n-init", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.n_init = parse_integer<std::size_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.n_init); }},
      {"n-query", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.n_query = parse_integer<std::size_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.n_query); }},
      {"rounds", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.rounds = parse_integer<std::size_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.rounds); }},
      {"hidden", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.hidden = parse_widths(k, v); },
       [](const ExperimentConfig& c) {
         std::string s;
         for (std::size_t i = 0; i < c.hidden.size(); ++i) s += (i ? "," : "") + std::to_string(c.hidden[i]);
         return s.empty() ? std::string("none") : s;
       }},
      {"dropout", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dropout_rate = parse_real(k, v); },
       [](const ExperimentConfig& c) { return real_text(c.dropout_rate); }},
      {"epochs", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.epochs = parse_integer<std::size_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.train.epochs); }},
      {"batch-size",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.batch_size = parse_integer<std::size_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.train.batch_size); }},
      {"lr", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.learning_rate = parse_real(k, v); },
       [](const ExperimentConfig& c) { return real_text(c.train.learning_rate); }},
      {"strategy", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.strategy.kind = parse_strategy_kind(v); },
       [](const ExperimentConfig& c) { return to_string(c.strategy.kind); }},
      {"n-drop", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.strategy.n_drop = parse_integer<std::size_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.strategy.n_drop); }},
      {"bim-eps", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.strategy.bim_eps = parse_real(k, v); },
       [](const ExperimentConfig& c) { return real_text(c.strategy.bim_eps); }},
      {"adv-max-iter",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.strategy.adv_max_iter = parse_integer<std::size_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.strategy.adv_max_iter); }},
      {"overshoot", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.strategy.deepfool_overshoot = parse_real(k, v); },
       [](const ExperimentConfig& c) { return real_text(c.strategy.deepfool_overshoot); }},
      {"kmeans-max-iter",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.strategy.kmeans_max_iter = parse_integer<std::size_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.strategy.kmeans_max_iter); }},
      {"strategy-seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.strategy.seed = parse_integer<std::uint64_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.strategy.seed); }},
      {"seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = parse_integer<std::uint64_t>(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      {"warm-start", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.warm_start = parse_bool(k, v); },
       [](const ExperimentConfig& c) { return std::string(c.warm_start ? "true" : "false"); }},
      {"out", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_path = v; },
       [](const ExperimentConfig& c) { return c.output_path; }},
  };
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_init == 0) throw ConfigError("n-init must be at least 1");
  if (n_query == 0) throw ConfigError("n-query must be at least 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test-fraction must lie in (0, 1)");
  if (dataset.kind == DatasetKind::csv && dataset.csv_path.empty()) throw ConfigError("dataset: CSV path is empty");
  if (dataset.num_classes < 1) throw ConfigError("num-classes must be positive");
  if (dataset.kind == DatasetKind::two_gaussians && dataset.num_classes != 2) {
    throw ConfigError("num-classes must be 2 for the two_gaussians dataset");
  }
  if (std::find(hidden.begin(), hidden.end(), std::size_t{0}) != hidden.end()) {
    throw ConfigError("hidden widths must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (train.epochs == 0) throw ConfigError("epochs must be positive");
  if (train.batch_size == 0) throw ConfigError("batch-size must be positive");
  if (!(train.learning_rate > 0.0)) throw ConfigError("lr must be positive");
  strategy.validate();
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const std::string k = normalize_key(key);
  for (const Option& opt : options()) {
    if (k == opt.key) {
      opt.set(config, k, value);
      return;
    }
  }
  throw ConfigError("unknown option '" + key + "'");
}

ExperimentConfig config_from_map(const std::map<std::string, std::string>& values) {
  ExperimentConfig config;
  for (const auto& [key, value] : values) set_config_value(config, key, value);
  return config;
}

std::map<std::string, std::string> config_to_map(const ExperimentConfig& config) {
  std::map<std::string, std::string> out;
  for (const Option& opt : options()) out[opt.key] = opt.get(config);
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Option& opt : options()) k.emplace_back(opt.key);
    return k;
  }();
  return keys;
}

}  // namespace poolal
