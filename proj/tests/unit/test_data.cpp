#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

#include "../temp_file.hpp"
#include "poolal/data.hpp"
#include "poolal/error.hpp"
#include "poolal/rng.hpp"

using namespace poolal;

namespace {

template <typename E>
std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  return "<no exception>";
}

Pool small_pool(std::vector<bool> mask) {
  const std::size_t n = mask.size();
  Matrix x(static_cast<Eigen::Index>(n), 1);
  Labels y;
  for (std::size_t i = 0; i < n; ++i) {
    x(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    y.push_back(static_cast<int>(i % 2));
  }
  return Pool(x, y, Matrix::Zero(1, 1), Labels{0}, 2, std::move(mask));
}

bool is_partition(const Pool& pool) {
  IndexList all = pool.labeled_view().indices;
  const IndexList unl = pool.unlabeled_indices();
  all.insert(all.end(), unl.begin(), unl.end());
  std::sort(all.begin(), all.end());
  IndexList expected(pool.size());
  std::iota(expected.begin(), expected.end(), std::size_t{0});
  return all == expected;
}

}  // namespace

TEST_CASE("load_csv") {
  SUBCASE("echoes rows and labels") {
    TempFile f(".csv", "1.5,2,0\n-3,4e-1,1\n5,6,0\n");
    const Dataset d = load_csv(f.path(), {});
    CHECK(d.features.rows() == 3);
    CHECK(d.features.cols() == 2);
    CHECK(d.labels == Labels{0, 1, 0});
    CHECK(d.features(0, 0) == 1.5);
    CHECK(d.features(1, 1) == 0.4);
  }
  SUBCASE("label column by header name or position") {
    TempFile f(".csv", "label,a,b\n1,0.5,0.25\n0,1,2\n");
    CsvOptions by_name{true, std::string("label"), 2};
    const Dataset d = load_csv(f.path(), by_name);
    CHECK(d.labels == Labels{1, 0});
    CHECK(d.features(0, 0) == 0.5);
    CsvOptions by_index{true, 0, 2};
    CHECK(load_csv(f.path(), by_index).labels == Labels{1, 0});
    CsvOptions missing{true, std::string("nope"), 2};
    CHECK_THROWS_AS(load_csv(f.path(), missing), ConfigError);
  }
  SUBCASE("out-of-range label names the row") {
    TempFile f(".csv", "0,0\n1,1\n5,2\n");
    CsvOptions opts{false, 0, 2};
    CHECK_THROWS_AS(load_csv(f.path(), opts), LabelRangeError);
    CHECK(message_of<LabelRangeError>([&] { load_csv(f.path(), opts); }).find("line 3") != std::string::npos);
  }
  SUBCASE("non-numeric cell names row and column") {
    TempFile f(".csv", "0,0,1\n1,abc,0\n");
    const std::string msg = message_of<ParseError>([&] { load_csv(f.path(), {}); });
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
  SUBCASE("empty and missing files") {
    TempFile empty(".csv", "");
    std::ofstream(empty.path()).flush();
    CHECK_THROWS_AS(load_csv(empty.path(), {}), EmptyDatasetError);
    TempFile header_only(".csv", "a,b\n");
    CHECK_THROWS_AS(load_csv(header_only.path(), {true, -1, 2}), EmptyDatasetError);
    CHECK_THROWS_AS(load_csv("/nonexistent/data.csv", {}), IoError);
  }
}

TEST_CASE("make_two_gaussians") {
  const Dataset a = make_two_gaussians(50, 3.0, 1.0, 7);
  const Dataset b = make_two_gaussians(50, 3.0, 1.0, 7);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.features.rows() == 100);
  CHECK(std::count(a.labels.begin(), a.labels.end(), 0) == 50);

  const Dataset exact = make_two_gaussians(10, 4.0, 0.0, 1);
  for (Eigen::Index i = 0; i < exact.features.rows(); ++i) {
    const double cx = exact.labels[static_cast<std::size_t>(i)] == 0 ? -2.0 : 2.0;
    CHECK(exact.features(i, 0) == cx);
    CHECK(exact.features(i, 1) == 0.0);
  }
  CHECK_THROWS_AS(make_two_gaussians(0, 1.0, 1.0, 0), ConfigError);

  // The Bayes rule for equal isotropic blobs on the x axis is sign(x).
  const Dataset wide = make_two_gaussians(200, 4.0, 0.5, 3);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < wide.features.rows(); ++i) {
    hits += (wide.features(i, 0) > 0 ? 1 : 0) == wide.labels[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  CHECK(static_cast<double>(hits) / 400.0 >= 0.99);
}

TEST_CASE("preprocessor is fitted on training rows") {
  Matrix train(3, 2);
  train << 0, 10, 1, 20, 2, 30;
  const Preprocessor mm = Preprocessor::fit(PreprocessScheme::min_max, train);
  const Matrix t = mm.apply(train);
  CHECK(t.col(0).minCoeff() == 0.0);
  CHECK(t.col(0).maxCoeff() == 1.0);
  CHECK(t(1, 1) == doctest::Approx(0.5));
  CHECK((mm.invert(t) - train).cwiseAbs().maxCoeff() < 1e-12);

  const Preprocessor st = Preprocessor::fit(PreprocessScheme::standardize, train);
  const Matrix s = st.apply(train);
  CHECK(std::abs(s.col(1).mean()) < 1e-12);

  Matrix constant = Matrix::Constant(3, 1, 4.0);
  CHECK(Preprocessor::fit(PreprocessScheme::min_max, constant).apply(constant).allFinite());
  const Preprocessor none = Preprocessor::fit(PreprocessScheme::none, train);
  CHECK(none.apply(none.apply(train)) == train);
  CHECK_THROWS_AS(parse_preprocess_scheme("whiten"), ConfigError);
  CHECK_THROWS_AS(mm.apply(Matrix::Zero(1, 3)), ShapeError);
}

TEST_CASE("initialize_pool") {
  const Dataset d = make_two_gaussians(30, 3.0, 1.0, 2);
  PoolOptions opts;
  opts.n_init = 10;
  opts.seed = 5;
  const Pool p = initialize_pool(d, 2, opts);
  CHECK(p.size() == 40);
  CHECK(p.test_labels().size() == 20);
  CHECK(p.n_labeled() == 10);
  CHECK(std::count(p.labeled_mask().begin(), p.labeled_mask().end(), true) == 10);
  const Labels& y = p.labeled_view().labels;
  CHECK(std::set<int>(y.begin(), y.end()).size() == 2);

  const Pool again = initialize_pool(d, 2, opts);
  CHECK(again.labeled_mask() == p.labeled_mask());
  CHECK(again.features() == p.features());
  CHECK(again.test_features() == p.test_features());

  opts.n_init = 40;
  CHECK(initialize_pool(d, 2, opts).n_unlabeled() == 0);
  opts.n_init = 41;
  CHECK_THROWS_AS(initialize_pool(d, 2, opts), ConfigError);
  opts.n_init = 0;
  CHECK_THROWS_AS(initialize_pool(d, 2, opts), ConfigError);
}

TEST_CASE("initial pool keeps two classes on unbalanced data") {
  Dataset d;
  d.features = Matrix::Zero(300, 1);
  d.labels.assign(300, 0);
  d.labels[17] = 1;
  d.labels[250] = 1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PoolOptions opts;
    opts.n_init = 2;
    opts.seed = seed;
    opts.test_fraction = 0.1;
    const Pool p = initialize_pool(d, 2, opts);
    // Both minority rows may land in the test split; diversity is only
    // promised when the training rows contain two classes.
    const LabeledView v = p.labeled_view();
    const auto test = p.test_labels();
    const bool minority_in_train = std::count(test.begin(), test.end(), 1) < 2;
    if (minority_in_train) CHECK(std::set<int>(v.labels.begin(), v.labels.end()).size() == 2);
  }
}

TEST_CASE("update and views") {
  Pool p = small_pool({true, false, true});
  CHECK(p.labeled_view().indices == IndexList{0, 2});
  CHECK(p.unlabeled_view().indices == IndexList{1});
  CHECK(p.unlabeled_view().features(0, 0) == 1.0);
  CHECK(is_partition(p));
  const IndexList one{1};
  p.update(one);
  CHECK(p.unlabeled_view().indices.empty());
  CHECK(p.labeled_view().labels == Labels{0, 1, 0});
  CHECK(is_partition(p));

  Pool q = small_pool(std::vector<bool>(10, false));
  const IndexList two{3, 7};
  q.update(two);
  CHECK(q.n_labeled() == 2);
  CHECK(q.n_unlabeled() == 8);
  const auto before = q.labeled_mask();
  q.update(IndexList{});
  CHECK(q.labeled_mask() == before);

  CHECK(message_of<PreconditionError>([&] { q.update(IndexList{4, 3}); }).find("3") != std::string::npos);
  CHECK(q.labeled_mask() == before);
  CHECK_THROWS_AS(q.update(IndexList{5, 5}), PreconditionError);
  CHECK_THROWS_AS(q.update(IndexList{10}), PreconditionError);
  CHECK(q.labeled_mask() == before);

  const IndexList ext{0, 1};
  const std::vector<int> bad_labels{0, 2};
  CHECK_THROWS_AS(q.update(ext, bad_labels), LabelRangeError);
  CHECK(q.labeled_mask() == before);
  const std::vector<int> labels{1, 1};
  q.update(ext, labels);
  CHECK(q.labeled_view().labels.front() == 1);
}

TEST_CASE("partition and monotonicity hold over random update sequences") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    Pool p = small_pool(std::vector<bool>(30, false));
    std::size_t last = 0;
    while (p.n_unlabeled() > 0) {
      IndexList unl = p.unlabeled_indices();
      rng.shuffle(std::span<std::size_t>(unl));
      unl.resize(1 + rng.below(std::min<std::size_t>(unl.size(), 5)));
      const auto before = p.labeled_mask();
      p.update(unl);
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (before[i]) CHECK(p.is_labeled(i));
      }
      CHECK(p.n_labeled() > last);
      last = p.n_labeled();
      CHECK(is_partition(p));
    }
  }
}

TEST_CASE("evaluate_accuracy") {
  CHECK(evaluate_accuracy({0, 1, 1}, {0, 1, 1}) == 1.0);
  CHECK(evaluate_accuracy({1, 0}, {0, 1}) == 0.0);
  CHECK(evaluate_accuracy({0, 1, 0, 1}, {0, 1, 1, 0}) == 0.5);
  CHECK_THROWS_AS(evaluate_accuracy({0}, {0, 1}), ShapeError);
}
