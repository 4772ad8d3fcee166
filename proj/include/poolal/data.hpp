#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "poolal/types.hpp"

namespace poolal {

struct Dataset {
  Matrix features;
  Labels labels;
};

/// Selects the label column of a CSV file either by header name or by
/// zero-based position. A negative position counts from the right.
using ColumnRef = std::variant<std::string, int>;

struct CsvOptions {
  bool has_header = false;
  ColumnRef label_column = -1;
  int num_classes = 2;
};

/// Reads a numeric CSV file. Throws IoError for a missing file, ParseError
/// (naming row and column) for a non-numeric cell, LabelRangeError for a
/// label outside [0, num_classes), and EmptyDatasetError for a file with no
/// data rows.
Dataset load_csv(const std::string& path, const CsvOptions& options);

/// Two isotropic Gaussian blobs in the plane centred at (-separation/2, 0)
/// and (+separation/2, 0). Class 0 rows come first.
Dataset make_two_gaussians(std::size_t n_per_class, double separation, double noise_sd,
                           std::uint64_t seed);

enum class PreprocessScheme { none, min_max, standardize };

PreprocessScheme parse_preprocess_scheme(const std::string& name);
std::string to_string(PreprocessScheme scheme);

/// Per-feature affine transform fitted on training rows.
class Preprocessor {
 public:
  Preprocessor() = default;
  static Preprocessor fit(PreprocessScheme scheme, const Matrix& x_train);

  Matrix apply(const Matrix& x) const;
  /// Maps transformed rows back to the original feature space.
  Matrix invert(const Matrix& x) const;
  PreprocessScheme scheme() const { return scheme_; }
  const RowVector& offset() const { return offset_; }
  const RowVector& scale() const { return scale_; }

 private:
  PreprocessScheme scheme_ = PreprocessScheme::none;
  RowVector offset_;
  RowVector scale_;
};

struct LabeledView {
  Matrix features;
  Labels labels;
  IndexList indices;
};

struct UnlabeledView {
  Matrix features;
  IndexList indices;
};

/// Labeled pool, unlabeled pool and test set.
///
/// All training rows live in one matrix; the labeled mask decides which pool
/// a row belongs to. Ground-truth labels of unlabeled rows are held only so
/// a simulated oracle can reveal them through update(); nothing in the public
/// interface reads them otherwise.
class Pool {
 public:
  Pool(Matrix x_train, Labels y_train, Matrix x_test, Labels y_test, int num_classes,
       std::vector<bool> labeled_mask, Preprocessor preprocessor = {});

  std::size_t size() const { return mask_.size(); }
  std::size_t n_labeled() const { return n_labeled_; }
  std::size_t n_unlabeled() const { return size() - n_labeled_; }
  int num_classes() const { return num_classes_; }
  std::size_t feature_dim() const { return static_cast<std::size_t>(x_train_.cols()); }

  bool is_labeled(std::size_t index) const;
  const std::vector<bool>& labeled_mask() const { return mask_; }

  /// Training features for every row, labeled or not.
  const Matrix& features() const { return x_train_; }
  const Matrix& test_features() const { return x_test_; }
  const Labels& test_labels() const { return y_test_; }
  /// Transform already applied to the stored features.
  const Preprocessor& preprocessor() const { return preprocessor_; }

  /// Ascending global-index order.
  LabeledView labeled_view() const;
  UnlabeledView unlabeled_view() const;
  IndexList unlabeled_indices() const;

  /// Moves `query` into the labeled pool with the held ground truth
  /// (simulated oracle). Throws PreconditionError naming the first index
  /// that is out of range, already labeled, or repeated; the pool is left
  /// untouched on error.
  void update(std::span<const std::size_t> query);

  /// As above, but with labels supplied by an external oracle.
  void update(std::span<const std::size_t> query, std::span<const int> labels);

 private:
  void check_query(std::span<const std::size_t> query) const;

  Matrix x_train_;
  Labels y_train_;
  Matrix x_test_;
  Labels y_test_;
  int num_classes_;
  std::vector<bool> mask_;
  std::size_t n_labeled_ = 0;
  Preprocessor preprocessor_;
};

struct PoolOptions {
  double test_fraction = 1.0 / 3.0;
  std::size_t n_init = 10;
  std::uint64_t seed = 0;
  PreprocessScheme preprocess = PreprocessScheme::none;
};

/// Shuffles, holds out the test split, fits the preprocessor on the training
/// rows, and labels n_init training rows chosen uniformly. When the training
/// rows contain two or more classes, the initial labeled set does too.
Pool initialize_pool(const Dataset& data, int num_classes, const PoolOptions& options);

/// Fraction of positions where the two label vectors agree.
double evaluate_accuracy(const Labels& predictions, const Labels& truth);

}  // namespace poolal
