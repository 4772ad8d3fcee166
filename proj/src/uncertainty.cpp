#include <algorithm>
#include <cmath>

#include "poolal/error.hpp"
#include "poolal/strategies.hpp"

namespace poolal {

namespace {

double row_entropy(const ProbMatrix& probs, Eigen::Index i) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    const double p = probs(i, j);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<double> row_entropies(const ProbMatrix& probs) {
  std::vector<double> h(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) h[static_cast<std::size_t>(i)] = row_entropy(probs, i);
  return h;
}

void check_stack(const MCProbStack& stack) {
  if (stack.empty()) throw ConfigError("dropout probability stack is empty");
  for (const ProbMatrix& p : stack) {
    if (p.rows() != stack.front().rows() || p.cols() != stack.front().cols()) {
      throw ShapeError("dropout passes disagree in shape");
    }
  }
}

}  // namespace

ScoreVector least_confidence_scores(const ProbMatrix& probs) {
  ScoreVector out{std::vector<double>(static_cast<std::size_t>(probs.rows())), Direction::select_max};
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    out.scores[static_cast<std::size_t>(i)] = 1.0 - probs.row(i).maxCoeff();
  }
  return out;
}

ScoreVector margin_scores(const ProbMatrix& probs) {
  ScoreVector out{std::vector<double>(static_cast<std::size_t>(probs.rows())), Direction::select_min};
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    double first = 0.0;
    double second = 0.0;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      const double p = probs(i, j);
      if (p > first) {
        second = first;
        first = p;
      } else if (p > second) {
        second = p;
      }
    }
    out.scores[static_cast<std::size_t>(i)] = first - second;
  }
  return out;
}

ScoreVector entropy_scores(const ProbMatrix& probs) {
  return {row_entropies(probs), Direction::select_max};
}

ProbMatrix mean_probs(const MCProbStack& stack) {
  check_stack(stack);
  ProbMatrix mean = stack.front();
  for (std::size_t t = 1; t < stack.size(); ++t) mean += stack[t];
  if (stack.size() > 1) mean /= static_cast<double>(stack.size());
  for (Eigen::Index i = 0; i < mean.rows(); ++i) {
    const double s = mean.row(i).sum();
    if (std::abs(s - 1.0) > 1e-12) mean.row(i) /= s;
  }
  return mean;
}

ScoreVector dropout_uncertainty_scores(const MCProbStack& stack, UncertaintyBase base) {
  const ProbMatrix mean = mean_probs(stack);
  switch (base) {
    case UncertaintyBase::least_confidence: return least_confidence_scores(mean);
    case UncertaintyBase::margin: return margin_scores(mean);
    case UncertaintyBase::entropy: return entropy_scores(mean);
  }
  throw ConfigError("unknown uncertainty base");
}

ScoreVector bald_scores(const MCProbStack& stack) {
  check_stack(stack);
  ProbMatrix mean = stack.front();
  for (std::size_t t = 1; t < stack.size(); ++t) mean += stack[t];
  if (stack.size() > 1) mean /= static_cast<double>(stack.size());

  std::vector<double> expected_entropy(static_cast<std::size_t>(mean.rows()), 0.0);
  for (const ProbMatrix& p : stack) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) expected_entropy[static_cast<std::size_t>(i)] += row_entropy(p, i);
  }
  ScoreVector out{row_entropies(mean), Direction::select_max};
  for (std::size_t i = 0; i < out.scores.size(); ++i) {
    out.scores[i] -= expected_entropy[i] / static_cast<double>(stack.size());
  }
  return out;
}

}  // namespace poolal
