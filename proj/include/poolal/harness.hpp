#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "poolal/data.hpp"
#include "poolal/nn.hpp"
#include "poolal/strategies.hpp"

namespace poolal {

enum class DatasetKind { two_gaussians, csv };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::two_gaussians;
  std::string csv_path;
  bool csv_header = false;
  /// Header name, or an integer position (negative counts from the right).
  std::string label_column = "-1";
  int num_classes = 2;
  std::size_t n_per_class = 300;
  double separation = 3.0;
  double noise_sd = 1.0;
  /// Non-zero for flattened grayscale images; used only as a rendering hint.
  std::size_t image_width = 0;
  std::size_t image_height = 0;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  PreprocessScheme preprocess = PreprocessScheme::none;
  double test_fraction = 1.0 / 3.0;
  std::size_t n_init = 10;
  std::size_t n_query = 5;
  std::size_t rounds = 10;
  std::vector<std::size_t> hidden = {16};
  double dropout_rate = 0.1;
  /// `train.seed` is ignored; every round derives its own.
  TrainParams train{100, 16, 0.1, 0};
  StrategyConfig strategy;
  std::uint64_t seed = 0;
  bool warm_start = false;
  std::string output_path;

  /// Checks everything that does not need the data. The capacity rule
  /// n_query * rounds <= N_u is checked once the pool exists.
  void validate() const;
};

/// Sets one option by its flag name (`n-init`, `lr`, ...). Underscores are
/// accepted in place of hyphens. Throws ConfigError naming the key.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);
ExperimentConfig config_from_map(const std::map<std::string, std::string>& values);
std::map<std::string, std::string> config_to_map(const ExperimentConfig& config);
const std::vector<std::string>& config_keys();

/// Seed streams. Round t (0..T) uses round_seed(master, t); training init,
/// SGD, and query randomness take derive_seed(round_seed, 1), (.., 2) and
/// (.., 3). Data generation and pool split use derive_seed(master, 1) and
/// derive_seed(master, 2).
std::uint64_t round_seed(std::uint64_t master, std::size_t round);

Dataset load_dataset(const DatasetSpec& spec, std::uint64_t master_seed);

struct RoundRecord {
  std::size_t round = 0;
  std::size_t n_labeled = 0;
  double accuracy = 0.0;
  IndexList selected;
  double wall_seconds = 0.0;
};

/// Compares everything except wall time.
bool same_record(const RoundRecord& a, const RoundRecord& b);
bool same_curve(const std::vector<RoundRecord>& a, const std::vector<RoundRecord>& b);

/// One experiment, stepped a round at a time. Construction builds the pool,
/// trains f(0) and records round 0.
class ActiveLearner {
 public:
  explicit ActiveLearner(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const Pool& pool() const { return pool_; }
  const Classifier& classifier() const { return classifier_; }
  const std::vector<RoundRecord>& records() const { return records_; }
  std::size_t rounds_completed() const { return records_.size() - 1; }
  bool done() const { return rounds_completed() >= config_.rounds; }

  /// Selection for the next round. Does not modify the learner.
  QueryResult query() const;

  /// Labels `selected` from the held ground truth, retrains and evaluates.
  const RoundRecord& complete_round(const IndexList& selected);
  /// As above with externally supplied labels.
  const RoundRecord& complete_round(const IndexList& selected, std::span<const int> labels);

  /// query() followed by complete_round().
  const RoundRecord& step();

 private:
  void fit(std::size_t round);
  const RoundRecord& record(std::size_t round, IndexList selected, double seconds);

  ExperimentConfig config_;
  Pool pool_;
  Classifier classifier_;
  std::vector<RoundRecord> records_;
};

std::vector<RoundRecord> run_experiment(const ExperimentConfig& config);

/// Mean accuracy over the T+1 recorded rounds.
double area_under_curve(const std::vector<RoundRecord>& records);
/// First round whose accuracy reaches `target`; records.size() if none does.
std::size_t rounds_to_reach(const std::vector<RoundRecord>& records, double target);

struct StrategySummary {
  std::string strategy;
  std::vector<double> mean_accuracy;
  std::vector<double> stddev_accuracy;
  std::vector<double> aulc;
  std::vector<std::size_t> rounds_to_target;
  double mean_aulc = 0.0;
  double mean_rounds_to_target = 0.0;
};

struct SummaryTable {
  double target_accuracy = 0.9;
  std::vector<std::uint64_t> seeds;
  std::vector<StrategySummary> rows;
};

/// Runs every (strategy, seed) cell; cells run concurrently, results are
/// merged in input order.
SummaryTable compare_strategies(const ExperimentConfig& base, const std::vector<StrategyKind>& strategies,
                                const std::vector<std::uint64_t>& seeds, double target_accuracy = 0.9);

enum class CurveFormat { csv, json };

CurveFormat curve_format_for_path(const std::string& path);
std::string format_curve(const std::vector<RoundRecord>& records, CurveFormat format);
std::vector<RoundRecord> parse_curve(const std::string& text, CurveFormat format);
void export_curve(const std::vector<RoundRecord>& records, const std::string& path, CurveFormat format);
std::vector<RoundRecord> read_curve(const std::string& path, CurveFormat format);

std::string format_summary_csv(const SummaryTable& table);

}  // namespace poolal
