#include <algorithm>
#include <cmath>
#include <limits>

#include "poolal/error.hpp"
#include "poolal/rng.hpp"
#include "poolal/strategies.hpp"

namespace poolal {

namespace {

double distance(const EmbeddingMatrix& e, Eigen::Index a, Eigen::Index b) {
  return std::sqrt((e.row(a) - e.row(b)).squaredNorm());
}

}  // namespace

QueryResult kcenter_greedy(const EmbeddingMatrix& embeddings_all,
                           const std::vector<bool>& labeled_mask, std::size_t n) {
  const std::size_t total = labeled_mask.size();
  if (static_cast<std::size_t>(embeddings_all.rows()) != total) {
    throw ShapeError("embedding rows and labeled mask differ in length");
  }
  IndexList centres;
  IndexList candidates;
  for (std::size_t i = 0; i < total; ++i) (labeled_mask[i] ? centres : candidates).push_back(i);
  if (centres.empty()) throw PreconditionError("k-center greedy needs at least one labeled example");
  if (n > candidates.size()) {
    throw CapacityError("cannot select " + std::to_string(n) + " examples from " +
                        std::to_string(candidates.size()) + " unlabeled");
  }

  // Distance from each candidate to its nearest centre.
  std::vector<double> nearest(candidates.size(), std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    for (std::size_t centre : centres) {
      nearest[c] = std::min(nearest[c], distance(embeddings_all, static_cast<Eigen::Index>(candidates[c]),
                                                 static_cast<Eigen::Index>(centre)));
    }
  }

  QueryResult r;
  r.scores = ScoreVector{nearest, Direction::select_max};
  std::vector<bool> taken(candidates.size(), false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best = candidates.size();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (!taken[c] && (best == candidates.size() || nearest[c] > nearest[best])) best = c;
    }
    taken[best] = true;
    r.selected.push_back(candidates[best]);
    const auto picked = static_cast<Eigen::Index>(candidates[best]);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (!taken[c]) {
        nearest[c] = std::min(nearest[c], distance(embeddings_all, static_cast<Eigen::Index>(candidates[c]), picked));
      }
    }
  }
  r.candidates = std::move(candidates);
  return r;
}

IndexList kmeans_select(const EmbeddingMatrix& embeddings, std::size_t n, std::uint64_t seed,
                        std::size_t max_iter) {
  const auto m = static_cast<std::size_t>(embeddings.rows());
  if (n > m) {
    throw CapacityError("cannot select " + std::to_string(n) + " examples from " + std::to_string(m) +
                        " unlabeled");
  }
  if (n == 0) return {};
  if (max_iter == 0) throw ConfigError("kmeans max_iter must be positive");
  const auto rows = static_cast<Eigen::Index>(m);
  const auto k = static_cast<Eigen::Index>(n);

  // k-means++ seeding.
  Rng rng(seed);
  Matrix centroids(k, embeddings.cols());
  std::vector<bool> is_seed(m, false);
  std::vector<double> d2(m, std::numeric_limits<double>::infinity());
  std::size_t next = static_cast<std::size_t>(rng.below(m));
  for (Eigen::Index c = 0; c < k; ++c) {
    is_seed[next] = true;
    centroids.row(c) = embeddings.row(static_cast<Eigen::Index>(next));
    if (c + 1 == k) break;
    double total = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)], (embeddings.row(i) - centroids.row(c)).squaredNorm());
      total += d2[static_cast<std::size_t>(i)];
    }
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      next = m;
      for (std::size_t i = 0; i < m; ++i) {
        cumulative += d2[i];
        if (d2[i] > 0.0 && cumulative > target) {
          next = i;
          break;
        }
      }
      // Rounding can leave target at the very end of the range.
      if (next == m) {
        for (std::size_t i = m; i-- > 0;) {
          if (d2[i] > 0.0) {
            next = i;
            break;
          }
        }
      }
    } else {
      next = static_cast<std::size_t>(std::find(is_seed.begin(), is_seed.end(), false) - is_seed.begin());
    }
  }

  // Lloyd iterations until the assignment stops changing.
  std::vector<Eigen::Index> assign(m, -1);
  const auto nearest_centroid = [&](Eigen::Index i) {
    Eigen::Index best = 0;
    double best_d = (embeddings.row(i) - centroids.row(0)).squaredNorm();
    for (Eigen::Index c = 1; c < k; ++c) {
      const double d = (embeddings.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return best;
  };
  for (std::size_t sweep = 0; sweep < max_iter; ++sweep) {
    bool changed = false;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Eigen::Index c = nearest_centroid(i);
      if (c != assign[static_cast<std::size_t>(i)]) {
        assign[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(k, embeddings.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < rows; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += embeddings.row(i);
      ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      // An empty cluster keeps its previous centroid.
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }

  IndexList picked;
  std::vector<bool> taken(m, false);
  for (Eigen::Index c = 0; c < k; ++c) {
    std::size_t best = m;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      if (taken[i]) continue;
      const double d = (embeddings.row(static_cast<Eigen::Index>(i)) - centroids.row(c)).squaredNorm();
      if (best == m || d < best_d) {
        best = i;
        best_d = d;
      }
    }
    taken[best] = true;
    picked.push_back(best);
  }
  return picked;
}

QueryResult kmeans_query(const Pool& pool, const Classifier& clf, std::size_t n,
                         std::uint64_t seed, std::size_t max_iter) {
  UnlabeledView view = pool.unlabeled_view();
  const EmbeddingMatrix emb = get_embeddings(clf, view.features);
  QueryResult r;
  for (std::size_t pos : kmeans_select(emb, n, seed, max_iter)) r.selected.push_back(view.indices[pos]);
  r.candidates = std::move(view.indices);
  return r;
}

}  // namespace poolal
