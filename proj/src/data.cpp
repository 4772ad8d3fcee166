#include "poolal/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <string_view>

#include "poolal/error.hpp"
#include "poolal/rng.hpp"

namespace poolal {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_number(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc{} && ptr == cell.data() + cell.size() && std::isfinite(out);
}

std::string where(std::size_t line, std::size_t column) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column + 1);
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvOptions& options) {
  if (options.num_classes < 1) throw ConfigError("num_classes must be positive");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file '" + path + "'");

  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!trim(line).empty()) lines.push_back(std::move(line));
  }
  if (lines.empty()) throw EmptyDatasetError("CSV file '" + path + "' is empty");

  std::size_t first_data = 0;
  std::vector<std::string_view> header;
  if (options.has_header) {
    header = split(lines[0]);
    first_data = 1;
  }
  if (lines.size() == first_data) {
    throw EmptyDatasetError("CSV file '" + path + "' has no data rows");
  }

  const std::size_t n_cols = split(lines[first_data]).size();
  if (n_cols < 2) throw ParseError("CSV file '" + path + "' needs a label column and at least one feature");
  if (options.has_header && header.size() != n_cols) {
    throw ParseError("header has " + std::to_string(header.size()) + " columns, data has " +
                     std::to_string(n_cols));
  }

  std::size_t label_col = 0;
  if (const auto* name = std::get_if<std::string>(&options.label_column)) {
    if (!options.has_header) throw ConfigError("label column given by name but the CSV has no header");
    const auto it = std::find(header.begin(), header.end(), std::string_view(*name));
    if (it == header.end()) throw ConfigError("label column '" + *name + "' not found in header");
    label_col = static_cast<std::size_t>(it - header.begin());
  } else {
    const int pos = std::get<int>(options.label_column);
    const long resolved = pos < 0 ? static_cast<long>(n_cols) + pos : pos;
    if (resolved < 0 || resolved >= static_cast<long>(n_cols)) {
      throw ConfigError("label column index " + std::to_string(pos) + " is out of range");
    }
    label_col = static_cast<std::size_t>(resolved);
  }

  const std::size_t n_rows = lines.size() - first_data;
  Dataset data{Matrix(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols - 1)), {}};
  data.labels.reserve(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::size_t line_no = r + first_data + 1;
    const auto cells = split(lines[r + first_data]);
    if (cells.size() != n_cols) {
      throw ParseError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                       " columns, expected " + std::to_string(n_cols));
    }
    Eigen::Index feature = 0;
    for (std::size_t c = 0; c < n_cols; ++c) {
      double value = 0.0;
      if (!parse_number(cells[c], value)) {
        throw ParseError("non-numeric cell '" + std::string(cells[c]) + "' at " + where(line_no, c));
      }
      if (c != label_col) {
        data.features(static_cast<Eigen::Index>(r), feature++) = value;
        continue;
      }
      if (value != std::floor(value)) {
        throw ParseError("label '" + std::string(cells[c]) + "' is not an integer at " + where(line_no, c));
      }
      if (value < 0 || value >= options.num_classes) {
        throw LabelRangeError("label " + std::string(cells[c]) + " at line " +
                              std::to_string(line_no) + " is outside [0, " +
                              std::to_string(options.num_classes) + ")");
      }
      data.labels.push_back(static_cast<int>(value));
    }
  }
  return data;
}

Dataset make_two_gaussians(std::size_t n_per_class, double separation, double noise_sd,
                           std::uint64_t seed) {
  if (n_per_class == 0) throw ConfigError("n_per_class must be positive");
  if (!(noise_sd >= 0.0) || !std::isfinite(separation)) {
    throw ConfigError("noise_sd must be non-negative and separation finite");
  }
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(2 * n_per_class);
  Dataset data{Matrix(n, 2), Labels(static_cast<std::size_t>(n))};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = i < static_cast<Eigen::Index>(n_per_class) ? 0 : 1;
    const double centre = (label == 0 ? -0.5 : 0.5) * separation;
    data.features(i, 0) = centre + noise_sd * rng.normal();
    data.features(i, 1) = noise_sd * rng.normal();
    data.labels[static_cast<std::size_t>(i)] = label;
  }
  return data;
}

PreprocessScheme parse_preprocess_scheme(const std::string& name) {
  if (name == "none") return PreprocessScheme::none;
  if (name == "min_max" || name == "minmax") return PreprocessScheme::min_max;
  if (name == "standardize") return PreprocessScheme::standardize;
  throw ConfigError("unknown preprocess scheme '" + name + "'");
}

std::string to_string(PreprocessScheme scheme) {
  switch (scheme) {
    case PreprocessScheme::none: return "none";
    case PreprocessScheme::min_max: return "min_max";
    case PreprocessScheme::standardize: return "standardize";
  }
  return "none";
}

Preprocessor Preprocessor::fit(PreprocessScheme scheme, const Matrix& x_train) {
  Preprocessor p;
  p.scheme_ = scheme;
  const Eigen::Index d = x_train.cols();
  p.offset_ = RowVector::Zero(d);
  p.scale_ = RowVector::Ones(d);
  if (scheme == PreprocessScheme::none || x_train.rows() == 0) return p;
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto col = x_train.col(j);
    if (scheme == PreprocessScheme::min_max) {
      const double lo = col.minCoeff();
      const double range = col.maxCoeff() - lo;
      p.offset_(j) = lo;
      p.scale_(j) = range > 0.0 ? range : 1.0;
    } else {
      const double mean = col.mean();
      const double var = (col.array() - mean).square().mean();
      p.offset_(j) = mean;
      p.scale_(j) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
  }
  return p;
}

Matrix Preprocessor::apply(const Matrix& x) const {
  if (scheme_ == PreprocessScheme::none) return x;
  if (x.cols() != offset_.size()) {
    throw ShapeError("preprocessor fitted on " + std::to_string(offset_.size()) +
                     " features, got " + std::to_string(x.cols()));
  }
  Matrix out = x;
  out.rowwise() -= offset_;
  out.array().rowwise() /= scale_.array();
  return out;
}

Matrix Preprocessor::invert(const Matrix& x) const {
  if (scheme_ == PreprocessScheme::none) return x;
  Matrix out = x;
  out.array().rowwise() *= scale_.array();
  out.rowwise() += offset_;
  return out;
}

Pool::Pool(Matrix x_train, Labels y_train, Matrix x_test, Labels y_test, int num_classes,
           std::vector<bool> labeled_mask, Preprocessor preprocessor)
    : x_train_(std::move(x_train)),
      y_train_(std::move(y_train)),
      x_test_(std::move(x_test)),
      y_test_(std::move(y_test)),
      num_classes_(num_classes),
      mask_(std::move(labeled_mask)),
      preprocessor_(std::move(preprocessor)) {
  if (num_classes_ < 1) throw ConfigError("num_classes must be positive");
  if (static_cast<std::size_t>(x_train_.rows()) != y_train_.size() || y_train_.size() != mask_.size()) {
    throw ShapeError("training features, labels and labeled mask differ in length");
  }
  if (static_cast<std::size_t>(x_test_.rows()) != y_test_.size()) {
    throw ShapeError("test features and labels differ in length");
  }
  if (x_test_.rows() > 0 && x_test_.cols() != x_train_.cols()) {
    throw ShapeError("test and training features differ in width");
  }
  const auto in_range = [this](int y) { return y >= 0 && y < num_classes_; };
  if (!std::all_of(y_train_.begin(), y_train_.end(), in_range) ||
      !std::all_of(y_test_.begin(), y_test_.end(), in_range)) {
    throw LabelRangeError("pool labels must lie in [0, " + std::to_string(num_classes_) + ")");
  }
  n_labeled_ = static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true));
}

bool Pool::is_labeled(std::size_t index) const {
  if (index >= size()) throw PreconditionError("index " + std::to_string(index) + " is out of range");
  return mask_[index];
}

LabeledView Pool::labeled_view() const {
  LabeledView view;
  view.indices.reserve(n_labeled_);
  for (std::size_t i = 0; i < size(); ++i) {
    if (mask_[i]) view.indices.push_back(i);
  }
  view.features = x_train_(view.indices, Eigen::all);
  view.labels.reserve(view.indices.size());
  for (std::size_t i : view.indices) view.labels.push_back(y_train_[i]);
  return view;
}

IndexList Pool::unlabeled_indices() const {
  IndexList out;
  out.reserve(n_unlabeled());
  for (std::size_t i = 0; i < size(); ++i) {
    if (!mask_[i]) out.push_back(i);
  }
  return out;
}

UnlabeledView Pool::unlabeled_view() const {
  UnlabeledView view;
  view.indices = unlabeled_indices();
  view.features = x_train_(view.indices, Eigen::all);
  return view;
}

void Pool::check_query(std::span<const std::size_t> query) const {
  std::set<std::size_t> seen;
  for (std::size_t idx : query) {
    if (idx >= size()) {
      throw PreconditionError("query index " + std::to_string(idx) + " is out of range");
    }
    if (mask_[idx]) {
      throw PreconditionError("query index " + std::to_string(idx) + " is already labeled");
    }
    if (!seen.insert(idx).second) {
      throw PreconditionError("query index " + std::to_string(idx) + " appears more than once");
    }
  }
}

void Pool::update(std::span<const std::size_t> query) {
  check_query(query);
  for (std::size_t idx : query) mask_[idx] = true;
  n_labeled_ += query.size();
}

void Pool::update(std::span<const std::size_t> query, std::span<const int> labels) {
  if (query.size() != labels.size()) {
    throw ShapeError("query has " + std::to_string(query.size()) + " indices but " +
                     std::to_string(labels.size()) + " labels");
  }
  check_query(query);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes_) {
      throw LabelRangeError("label " + std::to_string(labels[i]) + " for index " +
                            std::to_string(query[i]) + " is outside [0, " +
                            std::to_string(num_classes_) + ")");
    }
  }
  for (std::size_t i = 0; i < query.size(); ++i) {
    y_train_[query[i]] = labels[i];
    mask_[query[i]] = true;
  }
  n_labeled_ += query.size();
}

Pool initialize_pool(const Dataset& data, int num_classes, const PoolOptions& options) {
  const auto n = static_cast<std::size_t>(data.features.rows());
  if (n != data.labels.size()) throw ShapeError("features and labels differ in length");
  if (n == 0) throw EmptyDatasetError("dataset has no rows");
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  if (options.n_init == 0) throw ConfigError("n_init must be at least 1");
  const auto n_test = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n) {
    throw ConfigError("test_fraction leaves no rows for one of the splits");
  }
  const std::size_t n_train = n - n_test;
  if (options.n_init > n_train) {
    throw ConfigError("n_init (" + std::to_string(options.n_init) + ") exceeds the " +
                      std::to_string(n_train) + " training rows");
  }

  Rng rng(options.seed);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  rng.shuffle(std::span<Eigen::Index>(order));
  const std::span<const Eigen::Index> train_rows(order.data(), n_train);
  const std::span<const Eigen::Index> test_rows(order.data() + n_train, n_test);

  const Matrix raw_train = data.features(train_rows, Eigen::all);
  const Matrix raw_test = data.features(test_rows, Eigen::all);
  const Preprocessor prep = Preprocessor::fit(options.preprocess, raw_train);
  Labels y_train(n_train);
  Labels y_test(n_test);
  for (std::size_t i = 0; i < n_train; ++i) y_train[i] = data.labels[static_cast<std::size_t>(train_rows[i])];
  for (std::size_t i = 0; i < n_test; ++i) y_test[i] = data.labels[static_cast<std::size_t>(test_rows[i])];

  const std::set<int> train_classes(y_train.begin(), y_train.end());
  const bool want_diversity = train_classes.size() >= 2 && options.n_init >= 2;
  constexpr int kMaxDraws = 100;

  std::vector<std::size_t> candidates(n_train);
  std::vector<std::size_t> chosen;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(candidates));
    chosen.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(options.n_init));
    const std::set<int> classes = [&] {
      std::set<int> s;
      for (std::size_t i : chosen) s.insert(y_train[i]);
      return s;
    }();
    if (!want_diversity || classes.size() >= 2) break;
    if (attempt + 1 == kMaxDraws) {
      // Extremely unbalanced data: swap in the first row of another class.
      for (std::size_t i = 0; i < n_train; ++i) {
        if (y_train[i] != y_train[chosen.front()]) {
          chosen.back() = i;
          break;
        }
      }
    }
  }

  std::vector<bool> mask(n_train, false);
  for (std::size_t i : chosen) mask[i] = true;
  return Pool(prep.apply(raw_train), std::move(y_train), prep.apply(raw_test), std::move(y_test),
              num_classes, std::move(mask), prep);
}

double evaluate_accuracy(const Labels& predictions, const Labels& truth) {
  if (predictions.size() != truth.size()) {
    throw ShapeError("predictions (" + std::to_string(predictions.size()) + ") and labels (" +
                     std::to_string(truth.size()) + ") differ in length");
  }
  if (truth.empty()) throw PreconditionError("accuracy of an empty test set is undefined");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace poolal
