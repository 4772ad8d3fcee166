#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Everything here is written the slow, obvious way on purpose.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "poolal/nn.hpp"
#include "poolal/rng.hpp"

namespace oracle {

using poolal::Classifier;
using poolal::Matrix;
using poolal::RowVector;

inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  long double m = -std::numeric_limits<long double>::infinity();
  for (double v : z) m = std::max<long double>(m, v);
  long double total = 0;
  std::vector<long double> e;
  for (double v : z) {
    e.push_back(std::exp(static_cast<long double>(v) - m));
    total += e.back();
  }
  std::vector<double> p;
  for (long double v : e) p.push_back(static_cast<double>(v / total));
  return p;
}

inline double entropy(const std::vector<double>& p) {
  double h = 0;
  for (double v : p) {
    if (v > 0) h -= v * std::log(v);
  }
  return h;
}

/// Logits of one row computed with explicit loops.
inline std::vector<double> logits(const Classifier& clf, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (std::size_t l = 0; l < clf.weights.size(); ++l) {
    const Matrix& w = clf.weights[l];
    std::vector<double> z(static_cast<std::size_t>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      double s = clf.biases[l](j);
      for (Eigen::Index i = 0; i < w.rows(); ++i) s += a[static_cast<std::size_t>(i)] * w(i, j);
      z[static_cast<std::size_t>(j)] = s;
    }
    if (l + 1 < clf.weights.size()) {
      for (double& v : z) v = std::max(0.0, v);
    }
    a = z;
  }
  return a;
}

inline double mean_cross_entropy(const Classifier& clf, const Matrix& x, const poolal::Labels& y) {
  double total = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::vector<double> row(x.row(r).data(), x.row(r).data() + x.cols());
    const auto p = softmax(logits(clf, row));
    total -= std::log(p[static_cast<std::size_t>(y[static_cast<std::size_t>(r)])]);
  }
  return total / static_cast<double>(x.rows());
}

/// Largest relative error between backprop parameter gradients and central
/// differences of the loop-based loss.
inline double max_param_gradient_error(const Classifier& clf, const Matrix& x, const poolal::Labels& y,
                                       double h = 1e-5) {
  const poolal::Gradients g = poolal::loss_and_gradients(clf, x, y);
  double worst = 0;
  Classifier probe = clf;
  for (std::size_t l = 0; l < clf.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < clf.weights[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < clf.weights[l].cols(); ++j) {
        const double orig = probe.weights[l](i, j);
        probe.weights[l](i, j) = orig + h;
        const double up = mean_cross_entropy(probe, x, y);
        probe.weights[l](i, j) = orig - h;
        const double down = mean_cross_entropy(probe, x, y);
        probe.weights[l](i, j) = orig;
        worst = std::max(worst, rel_error(g.weights[l](i, j), (up - down) / (2 * h)));
      }
    }
    for (Eigen::Index j = 0; j < clf.biases[l].size(); ++j) {
      const double orig = probe.biases[l](j);
      probe.biases[l](j) = orig + h;
      const double up = mean_cross_entropy(probe, x, y);
      probe.biases[l](j) = orig - h;
      const double down = mean_cross_entropy(probe, x, y);
      probe.biases[l](j) = orig;
      worst = std::max(worst, rel_error(g.biases[l](j), (up - down) / (2 * h)));
    }
  }
  return worst;
}

inline double max_input_gradient_error(const Classifier& clf, const RowVector& x, double h = 1e-5) {
  double worst = 0;
  const std::size_t k = clf.config.num_classes();
  for (std::size_t c = 0; c < k; ++c) {
    const RowVector g = poolal::input_gradient(clf, x, c);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      std::vector<double> up(x.data(), x.data() + x.size());
      std::vector<double> down = up;
      up[static_cast<std::size_t>(i)] += h;
      down[static_cast<std::size_t>(i)] -= h;
      const double fd = (logits(clf, up)[c] - logits(clf, down)[c]) / (2 * h);
      worst = std::max(worst, rel_error(g(i), fd));
    }
  }
  return worst;
}

/// Exhaustive single-step k-center: unlabeled row with the largest distance
/// to its nearest labeled row; first such row wins.
inline std::size_t kcenter_argmax(const Matrix& emb, const std::vector<bool>& labeled) {
  std::size_t best = emb.rows();
  double best_d = -1;
  for (Eigen::Index i = 0; i < emb.rows(); ++i) {
    if (labeled[static_cast<std::size_t>(i)]) continue;
    double nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < emb.rows(); ++j) {
      if (!labeled[static_cast<std::size_t>(j)]) continue;
      double d2 = 0;
      for (Eigen::Index c = 0; c < emb.cols(); ++c) d2 += (emb(i, c) - emb(j, c)) * (emb(i, c) - emb(j, c));
      nearest = std::min(nearest, std::sqrt(d2));
    }
    if (nearest > best_d) {
      best_d = nearest;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

/// Random row-stochastic matrix; rows drawn from normalized exponentials,
/// with some rows pushed towards certainty.
inline Matrix random_probs(poolal::Rng& rng, std::size_t rows, std::size_t k) {
  Matrix p(rows, k);
  for (std::size_t r = 0; r < rows; ++r) {
    const double sharpness = rng.uniform() < 0.2 ? 8.0 : 1.0;
    double total = 0;
    for (std::size_t c = 0; c < k; ++c) {
      p(r, c) = std::exp(sharpness * rng.normal());
      total += p(r, c);
    }
    p.row(r) /= total;
  }
  return p;
}

}  // namespace oracle
