#include <cmath>

#include "poolal/error.hpp"
#include "poolal/strategies.hpp"

namespace poolal {

namespace {

int label_of(const Classifier& clf, const RowVector& x) { return predict(clf, Matrix(x)).front(); }

RowVector logits_of(const Classifier& clf, const RowVector& x) { return forward(clf, Matrix(x)).logits.row(0); }

void check_row(const Classifier& clf, const RowVector& x) {
  if (static_cast<std::size_t>(x.size()) != clf.config.input_width()) {
    throw ShapeError("input has " + std::to_string(x.size()) + " features, classifier expects " +
                     std::to_string(clf.config.input_width()));
  }
}

}  // namespace

AdversarialDistance adv_bim_distance(const Classifier& clf, const RowVector& x, double bim_eps,
                                     std::size_t max_iter) {
  check_row(clf, x);
  const int original = label_of(clf, x);
  const auto k = static_cast<Eigen::Index>(clf.config.num_classes());
  if (k < 2) return {kNoFlip, 0};

  RowVector current = x;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const RowVector logits = logits_of(clf, current);
    Eigen::Index runner_up = -1;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (j != original && (runner_up < 0 || logits(j) > logits(runner_up))) runner_up = j;
    }
    const Matrix jac = logit_jacobian(clf, current);
    const RowVector ascent = jac.row(runner_up) - jac.row(original);
    current += bim_eps * ascent.unaryExpr([](double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); });
    if (label_of(clf, current) != original) return {(current - x).norm(), it};
  }
  return {kNoFlip, max_iter};
}

AdversarialDistance adv_deepfool_distance(const Classifier& clf, const RowVector& x,
                                          std::size_t max_iter, double overshoot) {
  check_row(clf, x);
  const int original = label_of(clf, x);
  const auto k = static_cast<Eigen::Index>(clf.config.num_classes());
  if (k < 2) return {kNoFlip, 0};

  RowVector total = RowVector::Zero(x.size());
  RowVector current = x;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const RowVector logits = logits_of(clf, current);
    const Matrix jac = logit_jacobian(clf, current);
    double best_ratio = kNoFlip;
    double best_gap = 0.0;
    RowVector best_w;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (j == original) continue;
      RowVector w = jac.row(j) - jac.row(original);
      const double w_norm = w.norm();
      if (w_norm < 1e-12) continue;
      const double gap = std::abs(logits(j) - logits(original));
      if (gap / w_norm < best_ratio) {
        best_ratio = gap / w_norm;
        best_gap = gap;
        best_w = std::move(w);
      }
    }
    if (best_w.size() == 0) throw NumericError("DeepFool: every class gradient vanished");
    // Already on the decision boundary.
    if (best_gap == 0.0) return {(1.0 + overshoot) * total.norm(), it - 1};
    total += (best_gap / best_w.squaredNorm()) * best_w;
    current = x + (1.0 + overshoot) * total;
    if (label_of(clf, current) != original) return {(current - x).norm(), it};
  }
  return {kNoFlip, max_iter};
}

QueryResult adversarial_query(const Pool& pool, const Classifier& clf, AdversarialMethod method,
                              std::size_t n, const StrategyConfig& config) {
  UnlabeledView view = pool.unlabeled_view();
  if (n > view.indices.size()) {
    throw CapacityError("cannot select " + std::to_string(n) + " examples from " +
                        std::to_string(view.indices.size()) + " unlabeled");
  }
  ScoreVector scores{std::vector<double>(view.indices.size()), Direction::select_min};
  QueryResult r;
  r.iterations.resize(view.indices.size());
  for (std::size_t i = 0; i < view.indices.size(); ++i) {
    const RowVector x = view.features.row(static_cast<Eigen::Index>(i));
    AdversarialDistance d;
    if (method == AdversarialMethod::bim) {
      d = adv_bim_distance(clf, x, config.bim_eps, config.adv_max_iter);
    } else {
      try {
        d = adv_deepfool_distance(clf, x, config.adv_max_iter, config.deepfool_overshoot);
      } catch (const NumericError&) {
        d = {kNoFlip, 0};
      }
    }
    scores.scores[i] = d.norm;
    r.iterations[i] = d.iterations;
  }
  r.selected = select_top(scores, n, view.indices);
  r.candidates = std::move(view.indices);
  r.scores = std::move(scores);
  return r;
}

}  // namespace poolal
