#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "poolal/error.hpp"
#include "poolal/rng.hpp"
#include "poolal/strategies.hpp"

namespace poolal {

namespace {

struct KindName {
  StrategyKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {StrategyKind::random, "random"},
    {StrategyKind::least_confidence, "least_confidence"},
    {StrategyKind::margin, "margin"},
    {StrategyKind::entropy, "entropy"},
    {StrategyKind::lc_dropout, "lc_dropout"},
    {StrategyKind::margin_dropout, "margin_dropout"},
    {StrategyKind::entropy_dropout, "entropy_dropout"},
    {StrategyKind::bald, "bald"},
    {StrategyKind::kcenter_greedy, "kcenter_greedy"},
    {StrategyKind::kmeans, "kmeans"},
    {StrategyKind::adv_bim, "adv_bim"},
    {StrategyKind::adv_deepfool, "adv_deepfool"},
};

void check_capacity(std::size_t n, std::size_t available) {
  if (n > available) {
    throw CapacityError("cannot select " + std::to_string(n) + " examples from " +
                        std::to_string(available) + " unlabeled");
  }
}

QueryResult scored(const ScoreVector& scores, std::size_t n, IndexList candidates) {
  QueryResult r;
  r.selected = select_top(scores, n, candidates);
  r.candidates = std::move(candidates);
  r.scores = scores;
  return r;
}

}  // namespace

StrategyKind parse_strategy_kind(const std::string& name) {
  for (const auto& [kind, label] : kKindNames) {
    if (name == label) return kind;
  }
  throw ConfigError("unknown strategy '" + name + "'");
}

std::string to_string(StrategyKind kind) {
  for (const auto& [k, label] : kKindNames) {
    if (k == kind) return label;
  }
  return "unknown";
}

const std::vector<StrategyKind>& all_strategy_kinds() {
  static const std::vector<StrategyKind> kinds = [] {
    std::vector<StrategyKind> v;
    for (const auto& entry : kKindNames) v.push_back(entry.kind);
    return v;
  }();
  return kinds;
}

void StrategyConfig::validate() const {
  switch (kind) {
    case StrategyKind::lc_dropout:
    case StrategyKind::margin_dropout:
    case StrategyKind::entropy_dropout:
    case StrategyKind::bald:
      if (n_drop == 0) throw ConfigError("n_drop must be positive for " + to_string(kind));
      break;
    case StrategyKind::adv_bim:
      if (!(bim_eps > 0.0) || !std::isfinite(bim_eps)) throw ConfigError("bim_eps must be positive");
      if (adv_max_iter == 0) throw ConfigError("adv_max_iter must be positive");
      break;
    case StrategyKind::adv_deepfool:
      if (!(deepfool_overshoot >= 0.0) || !std::isfinite(deepfool_overshoot)) {
        throw ConfigError("deepfool_overshoot must be non-negative");
      }
      if (adv_max_iter == 0) throw ConfigError("adv_max_iter must be positive");
      break;
    case StrategyKind::kmeans:
      if (kmeans_max_iter == 0) throw ConfigError("kmeans_max_iter must be positive");
      break;
    default:
      break;
  }
}

IndexList select_top_positions(const ScoreVector& scores, std::size_t n) {
  const auto& s = scores.scores;
  check_capacity(n, s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::isnan(s[i])) throw NumericError("score at position " + std::to_string(i) + " is NaN");
  }
  IndexList order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (scores.direction == Direction::select_max) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  } else {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
  }
  order.resize(n);
  return order;
}

IndexList select_top(const ScoreVector& scores, std::size_t n, const IndexList& global_indices) {
  if (global_indices.size() != scores.scores.size()) {
    throw ShapeError("score vector and index map differ in length");
  }
  IndexList out;
  out.reserve(n);
  for (std::size_t pos : select_top_positions(scores, n)) out.push_back(global_indices[pos]);
  return out;
}

QueryResult random_query(const Pool& pool, std::size_t n, std::uint64_t seed) {
  IndexList candidates = pool.unlabeled_indices();
  check_capacity(n, candidates.size());
  Rng rng(seed);
  IndexList pick = candidates;
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pick.size() - i));
    std::swap(pick[i], pick[j]);
  }
  pick.resize(n);
  QueryResult r;
  r.selected = std::move(pick);
  r.candidates = std::move(candidates);
  return r;
}

QueryResult run_query(const StrategyConfig& config, const Pool& pool, const Classifier& clf,
                      std::size_t n, std::uint64_t seed) {
  config.validate();
  check_capacity(n, pool.n_unlabeled());
  const std::uint64_t s = derive_seed(seed, config.seed);

  const auto dropout_stack = [&] {
    Rng rng(s);
    return mc_dropout_probs(clf, pool.unlabeled_view().features, config.n_drop, rng);
  };

  switch (config.kind) {
    case StrategyKind::random:
      return random_query(pool, n, s);
    case StrategyKind::least_confidence:
    case StrategyKind::margin:
    case StrategyKind::entropy: {
      UnlabeledView view = pool.unlabeled_view();
      const ProbMatrix probs = predict_prob(clf, view.features);
      const ScoreVector scores = config.kind == StrategyKind::least_confidence ? least_confidence_scores(probs)
                                 : config.kind == StrategyKind::margin         ? margin_scores(probs)
                                                                               : entropy_scores(probs);
      return scored(scores, n, std::move(view.indices));
    }
    case StrategyKind::lc_dropout:
      return scored(dropout_uncertainty_scores(dropout_stack(), UncertaintyBase::least_confidence), n,
                    pool.unlabeled_indices());
    case StrategyKind::margin_dropout:
      return scored(dropout_uncertainty_scores(dropout_stack(), UncertaintyBase::margin), n,
                    pool.unlabeled_indices());
    case StrategyKind::entropy_dropout:
      return scored(dropout_uncertainty_scores(dropout_stack(), UncertaintyBase::entropy), n,
                    pool.unlabeled_indices());
    case StrategyKind::bald:
      return scored(bald_scores(dropout_stack()), n, pool.unlabeled_indices());
    case StrategyKind::kcenter_greedy:
      return kcenter_greedy(get_embeddings(clf, pool.features()), pool.labeled_mask(), n);
    case StrategyKind::kmeans:
      return kmeans_query(pool, clf, n, s, config.kmeans_max_iter);
    case StrategyKind::adv_bim:
      return adversarial_query(pool, clf, AdversarialMethod::bim, n, config);
    case StrategyKind::adv_deepfool:
      return adversarial_query(pool, clf, AdversarialMethod::deepfool, n, config);
  }
  throw ConfigError("unhandled strategy kind");
}

void export_diagnostics(const QueryResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  std::vector<long> rank(result.candidates.size(), -1);
  for (std::size_t r = 0; r < result.selected.size(); ++r) {
    const auto it = std::find(result.candidates.begin(), result.candidates.end(), result.selected[r]);
    if (it != result.candidates.end()) rank[static_cast<std::size_t>(it - result.candidates.begin())] = static_cast<long>(r);
  }
  const bool has_iters = !result.iterations.empty();
  out << "global_index,score" << (has_iters ? ",iterations" : "") << ",selected_rank\n";
  char buf[64];
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    out << result.candidates[i] << ',';
    if (result.scores) {
      std::snprintf(buf, sizeof(buf), "%.17g", result.scores->scores[i]);
      out << buf;
    }
    if (has_iters) out << ',' << result.iterations[i];
    out << ',' << rank[i] << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace poolal
