#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "poolal/data.hpp"
#include "poolal/nn.hpp"
#include "poolal/types.hpp"

namespace poolal {

enum class Direction { select_max, select_min };

/// One informativeness score per unlabeled example, aligned with the
/// unlabeled view.
struct ScoreVector {
  std::vector<double> scores;
  Direction direction = Direction::select_max;
};

enum class StrategyKind {
  random,
  least_confidence,
  margin,
  entropy,
  lc_dropout,
  margin_dropout,
  entropy_dropout,
  bald,
  kcenter_greedy,
  kmeans,
  adv_bim,
  adv_deepfool,
};

StrategyKind parse_strategy_kind(const std::string& name);
std::string to_string(StrategyKind kind);
const std::vector<StrategyKind>& all_strategy_kinds();

struct StrategyConfig {
  StrategyKind kind = StrategyKind::random;
  std::size_t n_drop = 10;
  double bim_eps = 0.05;
  std::size_t adv_max_iter = 50;
  double deepfool_overshoot = 0.02;
  std::size_t kmeans_max_iter = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct QueryResult {
  /// Global train indices, best first.
  IndexList selected;
  /// Global indices the scores refer to (the unlabeled set at query time).
  IndexList candidates;
  std::optional<ScoreVector> scores;
  /// Per-candidate adversarial iteration counts; empty for other kinds.
  std::vector<std::size_t> iterations;
};

inline constexpr double kNoFlip = std::numeric_limits<double>::infinity();

/// The n best view positions per direction; ties go to the lower position.
/// NaN scores are rejected; +infinity is allowed and ranks last for
/// select_min.
IndexList select_top_positions(const ScoreVector& scores, std::size_t n);

/// select_top_positions translated through `global_indices`.
IndexList select_top(const ScoreVector& scores, std::size_t n, const IndexList& global_indices);

QueryResult random_query(const Pool& pool, std::size_t n, std::uint64_t seed);

ScoreVector least_confidence_scores(const ProbMatrix& probs);
ScoreVector margin_scores(const ProbMatrix& probs);
ScoreVector entropy_scores(const ProbMatrix& probs);

enum class UncertaintyBase { least_confidence, margin, entropy };

/// Mean predictive distribution over the stack, rows renormalized when they
/// drift from 1 by more than 1e-12.
ProbMatrix mean_probs(const MCProbStack& stack);
ScoreVector dropout_uncertainty_scores(const MCProbStack& stack, UncertaintyBase base);

/// Mutual information H(mean_t p_t) - mean_t H(p_t), natural log.
ScoreVector bald_scores(const MCProbStack& stack);

/// Greedy k-center over all training embeddings: repeatedly takes the
/// unlabeled point farthest from every labeled or already chosen point.
QueryResult kcenter_greedy(const EmbeddingMatrix& embeddings_all,
                           const std::vector<bool>& labeled_mask, std::size_t n);

/// Positions (rows of `embeddings`) nearest to the n k-means centroids,
/// distinct, in centroid order.
IndexList kmeans_select(const EmbeddingMatrix& embeddings, std::size_t n, std::uint64_t seed,
                        std::size_t max_iter);

QueryResult kmeans_query(const Pool& pool, const Classifier& clf, std::size_t n,
                         std::uint64_t seed, std::size_t max_iter);

struct AdversarialDistance {
  double norm = kNoFlip;
  std::size_t iterations = 0;
};

/// Iterated sign-gradient ascent on (runner-up logit - original logit) until
/// the predicted label changes. Returns kNoFlip if it never does.
AdversarialDistance adv_bim_distance(const Classifier& clf, const RowVector& x, double bim_eps,
                                     std::size_t max_iter);

/// Multiclass DeepFool. Throws NumericError when every class gradient
/// vanishes.
AdversarialDistance adv_deepfool_distance(const Classifier& clf, const RowVector& x,
                                          std::size_t max_iter, double overshoot);

enum class AdversarialMethod { bim, deepfool };

QueryResult adversarial_query(const Pool& pool, const Classifier& clf, AdversarialMethod method,
                              std::size_t n, const StrategyConfig& config);

/// Runs the configured strategy. `seed` drives every random choice the
/// strategy makes in this call.
QueryResult run_query(const StrategyConfig& config, const Pool& pool, const Classifier& clf,
                      std::size_t n, std::uint64_t seed);

/// Writes candidate scores as CSV keyed by global index.
void export_diagnostics(const QueryResult& result, const std::string& path);

}  // namespace poolal
