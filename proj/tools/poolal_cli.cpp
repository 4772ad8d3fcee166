// Command-line front end: run one experiment, compare strategies, or serve
// the labeling API.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "poolal/error.hpp"
#include "poolal/harness.hpp"
#include "poolal/service.hpp"

namespace {

const std::map<std::string, std::string>& option_help() {
  static const std::map<std::string, std::string> help = {
      {"dataset", "two_gaussians, or a path to a CSV file"},
      {"header", "CSV has a header row (true/false)"},
      {"label-column", "CSV label column: header name or index (negative counts from the right)"},
      {"num-classes", "number of classes K"},
      {"n-per-class", "two_gaussians: points per class"},
      {"separation", "two_gaussians: distance between the class means"},
      {"noise", "two_gaussians: isotropic noise standard deviation"},
      {"image-width", "flattened-image datasets: image width (rendering hint)"},
      {"image-height", "flattened-image datasets: image height (rendering hint)"},
      {"preprocess", "none, min_max or standardize"},
      {"test-fraction", "fraction of rows held out for testing"},
      {"n-init", "initial labeled examples"},
      {"n-query", "examples queried per round"},
      {"rounds", "number of query rounds T"},
      {"hidden", "comma-separated hidden widths, or none"},
      {"dropout", "dropout rate on hidden layers"},
      {"epochs", "training epochs per round"},
      {"batch-size", "minibatch size"},
      {"lr", "SGD learning rate"},
      {"strategy", "query strategy"},
      {"n-drop", "dropout passes for *_dropout and bald"},
      {"bim-eps", "adv_bim step size"},
      {"adv-max-iter", "iteration cap for adversarial strategies"},
      {"overshoot", "adv_deepfool overshoot"},
      {"kmeans-max-iter", "Lloyd iteration cap for kmeans"},
      {"strategy-seed", "extra seed mixed into strategy randomness"},
      {"seed", "master seed"},
      {"warm-start", "continue training from the previous round's model"},
      {"out", "output path (.csv or .json)"},
  };
  return help;
}

struct ConfigOptions {
  std::string config_file;
  std::map<std::string, std::string> values;
};

void add_config_options(CLI::App& cmd, ConfigOptions& opts) {
  cmd.add_option("--config", opts.config_file, "flat key = value file; flags override it");
  for (const std::string& key : poolal::config_keys()) {
    const auto it = option_help().find(key);
    cmd.add_option_function<std::string>(
        "--" + key, [&opts, key](const std::string& v) { opts.values[key] = v; },
        it == option_help().end() ? std::string() : it->second);
  }
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

poolal::ExperimentConfig build_config(const ConfigOptions& opts) {
  poolal::ExperimentConfig config;
  if (!opts.config_file.empty()) {
    std::ifstream in(opts.config_file);
    if (!in) throw poolal::IoError("cannot open config file '" + opts.config_file + "'");
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      const std::string text = trim(line.substr(0, line.find('#')));
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos) {
        throw poolal::ConfigError(opts.config_file + ":" + std::to_string(line_no) + ": expected key = value");
      }
      std::string value = trim(text.substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
      poolal::set_config_value(config, trim(text.substr(0, eq)), value);
    }
  }
  for (const auto& [key, value] : opts.values) poolal::set_config_value(config, key, value);
  return config;
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw poolal::IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!trim(item).empty()) out.push_back(trim(item));
  }
  return out;
}

poolal::HttpService* g_service = nullptr;

void handle_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning experiments and labeling service"};
  app.require_subcommand(1);

  ConfigOptions run_opts;
  auto* run = app.add_subcommand("run", "run one active-learning experiment");
  add_config_options(*run, run_opts);
  std::string diagnostics_dir;
  run->add_option("--diagnostics", diagnostics_dir, "write per-round candidate scores to DIR/round_<t>.csv");

  ConfigOptions cmp_opts;
  std::string strategies = "random,least_confidence,margin,entropy";
  std::string seeds = "0,1,2,3,4";
  double target = 0.9;
  auto* compare = app.add_subcommand("compare", "compare strategies over several seeds");
  add_config_options(*compare, cmp_opts);
  compare->add_option("--strategies", strategies, "comma-separated strategy names");
  compare->add_option("--seeds", seeds, "comma-separated master seeds");
  compare->add_option("--target", target, "accuracy target for rounds-to-target");

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string snapshot_dir;
  auto* serve = app.add_subcommand("serve", "serve the labeling HTTP API");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "bind port (0 picks a free port)");
  serve->add_option("--snapshot-dir", snapshot_dir, "write session snapshots to this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      const poolal::ExperimentConfig config = build_config(run_opts);
      poolal::ActiveLearner learner(config);
      if (!diagnostics_dir.empty()) ensure_directory(diagnostics_dir);
      while (!learner.done()) {
        const poolal::QueryResult q = learner.query();
        if (!diagnostics_dir.empty()) {
          poolal::export_diagnostics(
              q, diagnostics_dir + "/round_" + std::to_string(learner.rounds_completed() + 1) + ".csv");
        }
        learner.complete_round(q.selected);
      }
      const auto& records = learner.records();
      if (config.output_path.empty()) {
        std::cout << poolal::format_curve(records, poolal::CurveFormat::csv);
      } else {
        poolal::export_curve(records, config.output_path, poolal::curve_format_for_path(config.output_path));
        std::cerr << "wrote " << records.size() << " rounds to " << config.output_path << '\n';
      }
    } else if (*compare) {
      const poolal::ExperimentConfig config = build_config(cmp_opts);
      std::vector<poolal::StrategyKind> kinds;
      for (const std::string& name : split_list(strategies)) kinds.push_back(poolal::parse_strategy_kind(name));
      std::vector<std::uint64_t> seed_list;
      for (const std::string& s : split_list(seeds)) {
        try {
          seed_list.push_back(std::stoull(s));
        } catch (const std::exception&) {
          throw poolal::ConfigError("bad seed '" + s + "'");
        }
      }
      const auto table = poolal::compare_strategies(config, kinds, seed_list, target);
      const std::string text = poolal::format_summary_csv(table);
      if (config.output_path.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(config.output_path);
        if (!out) throw poolal::IoError("cannot open '" + config.output_path + "' for writing");
        out << text;
      }
    } else if (*serve) {
      if (!snapshot_dir.empty()) ensure_directory(snapshot_dir);
      poolal::SessionManager manager(snapshot_dir.empty() ? std::nullopt : std::optional<std::string>(snapshot_dir));
      poolal::HttpService service(manager);
      if (!service.bind(host, port)) throw poolal::IoError("cannot bind " + host + ":" + std::to_string(port));
      g_service = &service;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cerr << "listening on http://" << host << ":" << service.port() << '\n';
      service.listen_after_bind();
      g_service = nullptr;
    }
  } catch (const poolal::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
