#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "poolal/rng.hpp"
#include "poolal/types.hpp"

namespace poolal {

enum class Activation { relu };

/// Architecture of a fully-connected classifier.
///
/// `layer_widths` lists the input dimension, every hidden width, and finally
/// the class count K. Dropout is applied after the activation of every
/// hidden layer.
struct NetConfig {
  std::vector<std::size_t> layer_widths;
  double dropout_rate = 0.0;
  Activation activation = Activation::relu;
  std::uint64_t init_seed = 0;

  /// Throws ConfigError when the invariants do not hold.
  void validate() const;

  std::size_t input_width() const { return layer_widths.front(); }
  std::size_t num_classes() const { return layer_widths.back(); }
  /// Width of the hidden representation returned by get_embeddings. For a
  /// net without hidden layers this is the input width.
  std::size_t embedding_width() const { return layer_widths[layer_widths.size() - 2]; }
  std::size_t num_layers() const { return layer_widths.size() - 1; }
};

struct TrainParams {
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// A trained or freshly initialized model. Layer l maps width[l] to
/// width[l+1] through `weights[l]` (width[l] x width[l+1]) and `biases[l]`.
struct Classifier {
  NetConfig config;
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;

  friend bool operator==(const Classifier&, const Classifier&);
};

struct ForwardResult {
  Matrix logits;
  Matrix embeddings;
};

/// Inverted-dropout masks for one pass: one (rows x width) matrix per hidden
/// layer holding 0 or 1/(1-rate).
using DropoutMasks = std::vector<Matrix>;

using ProbMatrix = Matrix;
using MCProbStack = std::vector<ProbMatrix>;
using EmbeddingMatrix = Matrix;

Classifier init_classifier(const NetConfig& config);

/// Deterministic pass (dropout off).
ForwardResult forward(const Classifier& clf, const Matrix& x);
/// Dropout-active pass; masks are drawn from `rng`.
ForwardResult forward(const Classifier& clf, const Matrix& x, Rng& rng);

/// Row-wise softmax with max subtraction. Throws NumericError on non-finite
/// input.
ProbMatrix softmax_rows(const Matrix& logits);

ProbMatrix predict_prob(const Classifier& clf, const Matrix& x);
Labels predict(const Classifier& clf, const Matrix& x);
/// Row argmax with the lowest index winning ties.
Labels argmax_rows(const Matrix& m);
EmbeddingMatrix get_embeddings(const Classifier& clf, const Matrix& x);

MCProbStack mc_dropout_probs(const Classifier& clf, const Matrix& x, std::size_t n_drop,
                             Rng& rng);

struct Gradients {
  double loss = 0.0;
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;
};

/// Mean cross-entropy of the softmax outputs and its exact gradient with
/// respect to every parameter. With `rng` set, dropout masks are drawn from
/// it exactly as a training step would.
Gradients loss_and_gradients(const Classifier& clf, const Matrix& x, const Labels& y,
                             Rng* rng = nullptr);

struct TrainResult {
  Classifier classifier;
  std::vector<double> loss_history;
};

/// Minibatch SGD from `clf`'s current parameters.
TrainResult train(const Classifier& clf, const Matrix& x, const Labels& y,
                  const TrainParams& params);

/// Jacobian of the logits with respect to one input row (K x d), dropout off.
Matrix logit_jacobian(const Classifier& clf, const RowVector& x);

/// Gradient of one class logit with respect to the input, dropout off.
RowVector input_gradient(const Classifier& clf, const RowVector& x, std::size_t target_class);

// Checkpoints are text with hexadecimal floats, so doubles round-trip exactly.
void write_checkpoint(const Classifier& clf, std::ostream& out);
Classifier read_checkpoint(std::istream& in);
void save_checkpoint(const Classifier& clf, const std::string& path);
Classifier load_checkpoint(const std::string& path);

}  // namespace poolal
