#include "poolal/nn.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "poolal/error.hpp"

namespace poolal {

void NetConfig::validate() const {
  if (layer_widths.size() < 2) {
    throw ConfigError("layer_widths needs at least an input and an output width, got " +
                      std::to_string(layer_widths.size()) + " entries");
  }
  for (std::size_t i = 0; i < layer_widths.size(); ++i) {
    if (layer_widths[i] == 0) {
      throw ConfigError("layer_widths[" + std::to_string(i) + "] must be positive");
    }
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0, 1), got " + std::to_string(dropout_rate));
  }
}

void TrainParams::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  // Zero is accepted: it yields a no-op run, which is handy for checking losses.
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and non-negative");
  }
}

bool operator==(const Classifier& a, const Classifier& b) {
  if (a.config.layer_widths != b.config.layer_widths ||
      a.config.dropout_rate != b.config.dropout_rate ||
      a.config.activation != b.config.activation || a.config.init_seed != b.config.init_seed ||
      a.weights.size() != b.weights.size()) {
    return false;
  }
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l].rows() != b.weights[l].rows() || a.weights[l].cols() != b.weights[l].cols() ||
        a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) {
      return false;
    }
  }
  return true;
}

Classifier init_classifier(const NetConfig& config) {
  config.validate();
  Classifier clf{config, {}, {}};
  Rng rng(config.init_seed);
  for (std::size_t l = 0; l < config.num_layers(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(config.layer_widths[l]);
    const auto fan_out = static_cast<Eigen::Index>(config.layer_widths[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < fan_in; ++i) {
      for (Eigen::Index j = 0; j < fan_out; ++j) w(i, j) = rng.uniform(-bound, bound);
    }
    clf.weights.push_back(std::move(w));
    clf.biases.push_back(RowVector::Zero(fan_out));
  }
  return clf;
}

namespace {

void check_input(const Classifier& clf, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != clf.config.input_width()) {
    throw ShapeError("input has " + std::to_string(x.cols()) + " columns, classifier expects " +
                     std::to_string(clf.config.input_width()));
  }
}

DropoutMasks draw_masks(const NetConfig& config, Eigen::Index rows, Rng& rng) {
  DropoutMasks masks;
  const double rate = config.dropout_rate;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t l = 1; l + 1 < config.layer_widths.size(); ++l) {
    const auto width = static_cast<Eigen::Index>(config.layer_widths[l]);
    Matrix mask(rows, width);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < width; ++c) {
        mask(r, c) = rng.uniform() < rate ? 0.0 : keep_scale;
      }
    }
    masks.push_back(std::move(mask));
  }
  return masks;
}

// ReLU derivative, taking 1/2 at the kink: the symmetric derivative there,
// so exact zeros (a dead layer feeding a zero bias) match central differences.
Matrix relu_slope(const Matrix& pre) {
  return pre.unaryExpr([](double z) { return z > 0.0 ? 1.0 : (z == 0.0 ? 0.5 : 0.0); });
}

// Activations recorded during a pass, kept for backpropagation.
struct Trace {
  std::vector<Matrix> inputs;  // inputs[l] feeds layer l; inputs[0] is x
  std::vector<Matrix> pre;     // pre-activations of hidden layers
  Matrix logits;
};

Trace run(const Classifier& clf, const Matrix& x, const DropoutMasks* masks) {
  Trace t;
  const std::size_t n_layers = clf.weights.size();
  t.inputs.reserve(n_layers);
  t.inputs.push_back(x);
  for (std::size_t l = 0; l < n_layers; ++l) {
    Matrix z = t.inputs.back() * clf.weights[l];
    z.rowwise() += clf.biases[l];
    if (l + 1 == n_layers) {
      t.logits = std::move(z);
      break;
    }
    Matrix a = z.cwiseMax(0.0);
    if (masks != nullptr) a = a.cwiseProduct((*masks)[l]);
    t.pre.push_back(std::move(z));
    t.inputs.push_back(std::move(a));
  }
  return t;
}

// Per-example cross-entropy losses plus mean-loss gradients.
Gradients backprop(const Classifier& clf, const Matrix& x, const Labels& y,
                   const DropoutMasks* masks, std::vector<double>* per_example) {
  const Trace t = run(clf, x, masks);
  const Eigen::Index n = x.rows();
  Matrix dz = softmax_rows(t.logits);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = y[static_cast<std::size_t>(i)];
    const double row_max = t.logits.row(i).maxCoeff();
    const double lse = row_max + std::log((t.logits.row(i).array() - row_max).exp().sum());
    const double loss = lse - t.logits(i, label);
    total += loss;
    if (per_example != nullptr) (*per_example)[static_cast<std::size_t>(i)] = loss;
    dz(i, label) -= 1.0;
  }
  dz /= static_cast<double>(n);

  Gradients g;
  g.loss = total / static_cast<double>(n);
  const std::size_t n_layers = clf.weights.size();
  g.weights.resize(n_layers);
  g.biases.resize(n_layers);
  for (std::size_t l = n_layers; l-- > 0;) {
    g.weights[l] = t.inputs[l].transpose() * dz;
    g.biases[l] = dz.colwise().sum();
    if (l == 0) break;
    Matrix da = dz * clf.weights[l].transpose();
    if (masks != nullptr) da = da.cwiseProduct((*masks)[l - 1]);
    dz = da.cwiseProduct(relu_slope(t.pre[l - 1]));
  }
  return g;
}

void check_labels(const Classifier& clf, const Matrix& x, const Labels& y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ShapeError("feature rows (" + std::to_string(x.rows()) + ") and labels (" +
                     std::to_string(y.size()) + ") differ in length");
  }
  const auto k = static_cast<int>(clf.config.num_classes());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= k) {
      throw PreconditionError("label " + std::to_string(y[i]) + " at row " + std::to_string(i) +
                              " is outside [0, " + std::to_string(k) + ")");
    }
  }
}

}  // namespace

ForwardResult forward(const Classifier& clf, const Matrix& x) {
  check_input(clf, x);
  Trace t = run(clf, x, nullptr);
  return {std::move(t.logits), std::move(t.inputs.back())};
}

ForwardResult forward(const Classifier& clf, const Matrix& x, Rng& rng) {
  check_input(clf, x);
  const DropoutMasks masks = draw_masks(clf.config, x.rows(), rng);
  Trace t = run(clf, x, &masks);
  return {std::move(t.logits), std::move(t.inputs.back())};
}

ProbMatrix softmax_rows(const Matrix& logits) {
  if (!logits.allFinite()) throw NumericError("non-finite logits passed to softmax");
  ProbMatrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double row_max = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - row_max).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

ProbMatrix predict_prob(const Classifier& clf, const Matrix& x) {
  return softmax_rows(forward(clf, x).logits);
}

Labels argmax_rows(const Matrix& m) {
  Labels out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j) {
      if (m(i, j) > m(i, best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Labels predict(const Classifier& clf, const Matrix& x) { return argmax_rows(predict_prob(clf, x)); }

EmbeddingMatrix get_embeddings(const Classifier& clf, const Matrix& x) {
  return forward(clf, x).embeddings;
}

MCProbStack mc_dropout_probs(const Classifier& clf, const Matrix& x, std::size_t n_drop,
                             Rng& rng) {
  if (n_drop == 0) throw ConfigError("n_drop must be positive");
  MCProbStack stack;
  stack.reserve(n_drop);
  for (std::size_t t = 0; t < n_drop; ++t) stack.push_back(softmax_rows(forward(clf, x, rng).logits));
  return stack;
}

Gradients loss_and_gradients(const Classifier& clf, const Matrix& x, const Labels& y, Rng* rng) {
  check_input(clf, x);
  check_labels(clf, x, y);
  if (x.rows() == 0) throw PreconditionError("loss needs at least one example");
  if (rng == nullptr) return backprop(clf, x, y, nullptr, nullptr);
  const DropoutMasks masks = draw_masks(clf.config, x.rows(), *rng);
  return backprop(clf, x, y, &masks, nullptr);
}

TrainResult train(const Classifier& clf, const Matrix& x, const Labels& y,
                  const TrainParams& params) {
  params.validate();
  check_input(clf, x);
  check_labels(clf, x, y);
  if (y.empty()) throw PreconditionError("training needs at least one labeled example");

  TrainResult result{clf, {}};
  Classifier& model = result.classifier;
  Rng rng(params.seed);
  const std::size_t n = y.size();
  const bool use_dropout = model.config.dropout_rate > 0.0;

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<double> example_loss(n);
  std::vector<double> batch_loss;
  Labels batch_labels;

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(std::span<Eigen::Index>(order));
    for (std::size_t start = 0; start < n; start += params.batch_size) {
      const std::size_t end = std::min(n, start + params.batch_size);
      const std::span<const Eigen::Index> idx(order.data() + start, end - start);
      const Matrix xb = x(idx, Eigen::all);
      batch_labels.resize(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) batch_labels[i] = y[static_cast<std::size_t>(idx[i])];
      batch_loss.resize(idx.size());

      Gradients g;
      try {
        if (use_dropout) {
          const DropoutMasks masks = draw_masks(model.config, xb.rows(), rng);
          g = backprop(model, xb, batch_labels, &masks, &batch_loss);
        } else {
          g = backprop(model, xb, batch_labels, nullptr, &batch_loss);
        }
      } catch (const NumericError& e) {
        throw NumericError("training failed at epoch " + std::to_string(epoch) + ": " + e.what());
      }
      for (std::size_t i = 0; i < idx.size(); ++i) {
        example_loss[static_cast<std::size_t>(idx[i])] = batch_loss[i];
      }
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        model.weights[l] -= params.learning_rate * g.weights[l];
        model.biases[l] -= params.learning_rate * g.biases[l];
      }
    }
    // Summed in example order so the value does not depend on the shuffle.
    double total = 0.0;
    for (double v : example_loss) total += v;
    const double mean = total / static_cast<double>(n);
    if (!std::isfinite(mean)) {
      throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(mean);
  }
  return result;
}

Matrix logit_jacobian(const Classifier& clf, const RowVector& x) {
  const Matrix input = x;
  check_input(clf, input);
  const Trace t = run(clf, input, nullptr);
  const auto k = static_cast<Eigen::Index>(clf.config.num_classes());
  // Row c of `upstream` carries d logit_c / d (current layer output).
  Matrix upstream = Matrix::Identity(k, k);
  for (std::size_t l = clf.weights.size(); l-- > 1;) {
    Matrix da = upstream * clf.weights[l].transpose();
    const RowVector slope = relu_slope(t.pre[l - 1].row(0));
    upstream = da.array().rowwise() * slope.array();
  }
  return upstream * clf.weights[0].transpose();
}

RowVector input_gradient(const Classifier& clf, const RowVector& x, std::size_t target_class) {
  if (target_class >= clf.config.num_classes()) {
    throw ShapeError("target class " + std::to_string(target_class) + " is outside [0, " +
                     std::to_string(clf.config.num_classes()) + ")");
  }
  return logit_jacobian(clf, x).row(static_cast<Eigen::Index>(target_class));
}

}  // namespace poolal
