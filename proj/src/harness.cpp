#include "poolal/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <set>

#include "poolal/error.hpp"
#include "poolal/rng.hpp"

namespace poolal {

namespace {

constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kQueryStream = 3;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ColumnRef parse_column(const std::string& text) {
  int pos = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), pos);
  if (ec == std::errc{} && ptr == text.data() + text.size()) return pos;
  return text;
}

Pool build_pool(const ExperimentConfig& config) {
  config.validate();
  const Dataset data = load_dataset(config.dataset, config.seed);
  PoolOptions opts;
  opts.test_fraction = config.test_fraction;
  opts.n_init = config.n_init;
  opts.seed = derive_seed(config.seed, kSplitStream);
  opts.preprocess = config.preprocess;
  Pool pool = initialize_pool(data, config.dataset.num_classes, opts);
  if (config.n_query * config.rounds > pool.n_unlabeled()) {
    throw ConfigError("rounds x n-query (" + std::to_string(config.n_query * config.rounds) +
                      ") exceeds the " + std::to_string(pool.n_unlabeled()) + " unlabeled examples");
  }
  return pool;
}

NetConfig net_config(const ExperimentConfig& config, std::size_t input_dim, std::uint64_t init_seed) {
  NetConfig net;
  net.layer_widths.push_back(input_dim);
  net.layer_widths.insert(net.layer_widths.end(), config.hidden.begin(), config.hidden.end());
  net.layer_widths.push_back(static_cast<std::size_t>(config.dataset.num_classes));
  net.dropout_rate = config.dropout_rate;
  net.init_seed = init_seed;
  return net;
}

}  // namespace

std::uint64_t round_seed(std::uint64_t master, std::size_t round) {
  return derive_seed(master, 0x100 + static_cast<std::uint64_t>(round));
}

Dataset load_dataset(const DatasetSpec& spec, std::uint64_t master_seed) {
  if (spec.kind == DatasetKind::two_gaussians) {
    return make_two_gaussians(spec.n_per_class, spec.separation, spec.noise_sd,
                              derive_seed(master_seed, kDataStream));
  }
  CsvOptions opts;
  opts.has_header = spec.csv_header;
  opts.label_column = parse_column(spec.label_column);
  opts.num_classes = spec.num_classes;
  return load_csv(spec.csv_path, opts);
}

bool same_record(const RoundRecord& a, const RoundRecord& b) {
  return a.round == b.round && a.n_labeled == b.n_labeled && a.accuracy == b.accuracy &&
         a.selected == b.selected;
}

bool same_curve(const std::vector<RoundRecord>& a, const std::vector<RoundRecord>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), same_record);
}

ActiveLearner::ActiveLearner(ExperimentConfig config)
    : config_(std::move(config)), pool_(build_pool(config_)) {
  const auto start = Clock::now();
  fit(0);
  record(0, {}, seconds_since(start));
}

void ActiveLearner::fit(std::size_t round) {
  const std::uint64_t seed = round_seed(config_.seed, round);
  const bool fresh = round == 0 || !config_.warm_start;
  const Classifier start =
      fresh ? init_classifier(net_config(config_, pool_.feature_dim(), derive_seed(seed, kInitStream)))
            : classifier_;
  TrainParams params = config_.train;
  params.seed = derive_seed(seed, kTrainStream);
  const LabeledView labeled = pool_.labeled_view();
  try {
    classifier_ = train(start, labeled.features, labeled.labels, params).classifier;
  } catch (const NumericError& e) {
    throw NumericError("round " + std::to_string(round) + ": " + e.what());
  }
}

const RoundRecord& ActiveLearner::record(std::size_t round, IndexList selected, double seconds) {
  RoundRecord r;
  r.round = round;
  r.n_labeled = pool_.n_labeled();
  r.accuracy = evaluate_accuracy(predict(classifier_, pool_.test_features()), pool_.test_labels());
  r.selected = std::move(selected);
  r.wall_seconds = seconds;
  records_.push_back(std::move(r));
  return records_.back();
}

QueryResult ActiveLearner::query() const {
  if (done()) throw ConflictError("all " + std::to_string(config_.rounds) + " rounds are complete");
  const std::size_t next = rounds_completed() + 1;
  return run_query(config_.strategy, pool_, classifier_, config_.n_query,
                   derive_seed(round_seed(config_.seed, next), kQueryStream));
}

const RoundRecord& ActiveLearner::complete_round(const IndexList& selected) {
  if (done()) throw ConflictError("all " + std::to_string(config_.rounds) + " rounds are complete");
  const auto start = Clock::now();
  pool_.update(selected);
  const std::size_t round = rounds_completed() + 1;
  fit(round);
  return record(round, selected, seconds_since(start));
}

const RoundRecord& ActiveLearner::complete_round(const IndexList& selected, std::span<const int> labels) {
  if (done()) throw ConflictError("all " + std::to_string(config_.rounds) + " rounds are complete");
  const auto start = Clock::now();
  pool_.update(selected, labels);
  const std::size_t round = rounds_completed() + 1;
  fit(round);
  return record(round, selected, seconds_since(start));
}

const RoundRecord& ActiveLearner::step() {
  const auto start = Clock::now();
  const QueryResult q = query();
  const double query_seconds = seconds_since(start);
  complete_round(q.selected);
  records_.back().wall_seconds += query_seconds;
  return records_.back();
}

std::vector<RoundRecord> run_experiment(const ExperimentConfig& config) {
  ActiveLearner learner(config);
  while (!learner.done()) learner.step();
  return learner.records();
}

double area_under_curve(const std::vector<RoundRecord>& records) {
  if (records.empty()) throw PreconditionError("learning curve is empty");
  double total = 0.0;
  for (const RoundRecord& r : records) total += r.accuracy;
  return total / static_cast<double>(records.size());
}

std::size_t rounds_to_reach(const std::vector<RoundRecord>& records, double target) {
  for (std::size_t t = 0; t < records.size(); ++t) {
    if (records[t].accuracy >= target) return t;
  }
  return records.size();
}

SummaryTable compare_strategies(const ExperimentConfig& base, const std::vector<StrategyKind>& strategies,
                                const std::vector<std::uint64_t>& seeds, double target_accuracy) {
  if (strategies.empty() || seeds.empty()) throw ConfigError("compare needs at least one strategy and one seed");
  std::vector<std::vector<std::future<std::vector<RoundRecord>>>> cells(strategies.size());
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = base;
      cfg.strategy.kind = strategies[s];
      cfg.seed = seed;
      cells[s].push_back(std::async(std::launch::async, [cfg] { return run_experiment(cfg); }));
    }
  }

  SummaryTable table;
  table.target_accuracy = target_accuracy;
  table.seeds = seeds;
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    std::vector<std::vector<RoundRecord>> curves;
    for (auto& f : cells[s]) curves.push_back(f.get());

    StrategySummary row;
    row.strategy = to_string(strategies[s]);
    const std::size_t n_rounds = curves.front().size();
    const auto n = static_cast<double>(curves.size());
    for (std::size_t t = 0; t < n_rounds; ++t) {
      double mean = 0.0;
      for (const auto& c : curves) mean += c[t].accuracy;
      mean /= n;
      double var = 0.0;
      for (const auto& c : curves) var += (c[t].accuracy - mean) * (c[t].accuracy - mean);
      row.mean_accuracy.push_back(mean);
      row.stddev_accuracy.push_back(curves.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0);
    }
    for (const auto& c : curves) {
      row.aulc.push_back(area_under_curve(c));
      row.rounds_to_target.push_back(rounds_to_reach(c, target_accuracy));
    }
    row.mean_aulc = std::accumulate(row.aulc.begin(), row.aulc.end(), 0.0) / n;
    row.mean_rounds_to_target =
        static_cast<double>(std::accumulate(row.rounds_to_target.begin(), row.rounds_to_target.end(), std::size_t{0})) / n;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace poolal
