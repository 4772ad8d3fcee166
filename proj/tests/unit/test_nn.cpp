#include <doctest.h>

#include <cmath>
#include <sstream>

#include "../oracles.hpp"
#include "poolal/data.hpp"
#include "poolal/error.hpp"
#include "poolal/nn.hpp"

using namespace poolal;

namespace {

NetConfig net(std::vector<std::size_t> widths, double dropout = 0.0, std::uint64_t seed = 0) {
  NetConfig c;
  c.layer_widths = std::move(widths);
  c.dropout_rate = dropout;
  c.init_seed = seed;
  return c;
}

Classifier zero_net(std::vector<std::size_t> widths) {
  Classifier clf = init_classifier(net(std::move(widths)));
  for (auto& w : clf.weights) w.setZero();
  return clf;
}

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

Matrix row_matrix(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_CASE("init_classifier is seeded and shaped by layer_widths") {
  CHECK(init_classifier(net({2, 4, 2}, 0.0, 7)) == init_classifier(net({2, 4, 2}, 0.0, 7)));
  CHECK_FALSE(init_classifier(net({2, 4, 2}, 0.0, 7)) == init_classifier(net({2, 4, 2}, 0.0, 8)));
  CHECK_THROWS_AS(init_classifier(net({2})), ConfigError);
  CHECK_THROWS_AS(init_classifier(net({2, 0, 2})), ConfigError);
  CHECK_THROWS_AS(init_classifier(net({2, 2}, 1.0)), ConfigError);

  const Classifier clf = init_classifier(net({3, 5, 2}, 0.0, 1));
  REQUIRE(clf.weights.size() == 2);
  CHECK(clf.weights[0].rows() == 3);
  CHECK(clf.weights[0].cols() == 5);
  CHECK(clf.weights[1].rows() == 5);
  CHECK(clf.weights[1].cols() == 2);
  CHECK(clf.biases[0].size() == 5);
  CHECK(clf.biases[1].size() == 2);
  CHECK(clf.biases[0].isZero(0.0));
  CHECK(clf.weights[0].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(3.0));
  CHECK(clf.weights[1].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(5.0));
}

TEST_CASE("forward") {
  Rng data_rng(3);
  const Matrix x = random_matrix(data_rng, 6, 3);

  SUBCASE("zero parameters give zero logits") {
    const auto out = forward(zero_net({3, 4, 2}), x);
    CHECK(out.logits.isZero(0.0));
    CHECK(out.embeddings.isZero(0.0));
  }
  SUBCASE("dropout rate 0 is the identity") {
    const Classifier clf = init_classifier(net({3, 4, 4, 2}, 0.0, 5));
    Rng rng(11);
    const auto on = forward(clf, x, rng);
    const auto off = forward(clf, x);
    CHECK(on.logits == off.logits);
    CHECK(on.embeddings == off.embeddings);
  }
  SUBCASE("replayed rng gives identical masked output") {
    const Classifier clf = init_classifier(net({3, 8, 2}, 0.5, 5));
    Rng a(42), b(42);
    const auto first = forward(clf, x, a);
    const auto second = forward(clf, x, b);
    CHECK(first.logits == second.logits);
    Rng c(43);
    CHECK_FALSE(forward(clf, x, c).logits == first.logits);
  }
  SUBCASE("inverted dropout scales survivors") {
    Classifier clf = init_classifier(net({1, 200, 1}, 0.25, 0));
    clf.weights[0].setOnes();
    Rng rng(1);
    const auto out = forward(clf, Matrix::Ones(1, 1), rng);
    for (Eigen::Index j = 0; j < out.embeddings.cols(); ++j) {
      const double v = out.embeddings(0, j);
      CHECK((v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-15));
    }
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(forward(init_classifier(net({2, 2})), x), ShapeError);
  }
}

TEST_CASE("softmax and predict_prob") {
  const Matrix p = softmax_rows(row_matrix({{0, 0}, {1000, 0}}));
  CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::isfinite(p(1, 0)));
  CHECK(p(1, 0) == doctest::Approx(1.0));
  CHECK(p(1, 1) < 1e-300);

  const Matrix q = softmax_rows(row_matrix({{1, 2, 3}}));
  CHECK(q(0, 0) == doctest::Approx(0.0900).epsilon(1e-3));
  CHECK(q(0, 1) == doctest::Approx(0.2447).epsilon(1e-3));
  CHECK(q(0, 2) == doctest::Approx(0.6652).epsilon(1e-3));
  const auto ref = oracle::softmax({1, 2, 3});
  for (int c = 0; c < 3; ++c) CHECK(std::abs(q(0, c) - ref[static_cast<std::size_t>(c)]) < 1e-15);

  CHECK_THROWS_AS(softmax_rows(row_matrix({{0, std::nan("")}})), NumericError);
  CHECK_THROWS_AS(softmax_rows(row_matrix({{0, INFINITY}})), NumericError);
}

TEST_CASE("softmax rows are stochastic for arbitrary finite logits") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix z(4, 1 + static_cast<Eigen::Index>(rng.below(6)));
    for (Eigen::Index i = 0; i < z.rows(); ++i)
      for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.uniform(-1000, 1000);
    const Matrix p = softmax_rows(z);
    CHECK(p.minCoeff() >= 0.0);
    for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(std::abs(p.row(i).sum() - 1.0) <= 1e-9);
  }
}

TEST_CASE("shifting a row of logits leaves its probabilities unchanged") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix z = random_matrix(rng, 3, 4, 5.0);
    Matrix shifted = z;
    shifted.array() += rng.uniform(-50, 50);
    CHECK((softmax_rows(z) - softmax_rows(shifted)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("predict breaks ties towards the lowest class") {
  CHECK(argmax_rows(row_matrix({{0.5, 0.5}, {0.1, 0.9}, {0.3, 0.3}})) == Labels{0, 1, 0});
  Rng rng(2);
  const Matrix x = random_matrix(rng, 10, 3);
  CHECK(predict(zero_net({3, 4, 3}), x) == Labels(10, 0));

  const Classifier clf = init_classifier(net({3, 6, 4}, 0.2, 9));
  CHECK(predict(clf, x) == argmax_rows(predict_prob(clf, x)));
}

TEST_CASE("get_embeddings") {
  Rng rng(4);
  Matrix x = random_matrix(rng, 5, 3);
  CHECK(get_embeddings(zero_net({3, 6, 2}), x).isZero(0.0));
  const Classifier clf = init_classifier(net({3, 6, 4, 2}, 0.5, 1));
  const Matrix e = get_embeddings(clf, x);
  CHECK(static_cast<std::size_t>(e.cols()) == clf.config.embedding_width());
  x.row(4) = x.row(1);
  const Matrix e2 = get_embeddings(clf, x);
  CHECK(e2.row(4) == e2.row(1));
  CHECK(get_embeddings(clf, x) == e2);
}

TEST_CASE("mc_dropout_probs") {
  Rng data_rng(6);
  const Matrix x = random_matrix(data_rng, 7, 3);

  const Classifier plain = init_classifier(net({3, 5, 3}, 0.0, 2));
  Rng rng(1);
  const MCProbStack same = mc_dropout_probs(plain, x, 4, rng);
  REQUIRE(same.size() == 4);
  for (const auto& slice : same) CHECK(slice == predict_prob(plain, x));

  const Classifier noisy = init_classifier(net({3, 5, 3}, 0.5, 2));
  Rng a(9), b(9);
  const MCProbStack first = mc_dropout_probs(noisy, x, 1, a);
  const MCProbStack second = mc_dropout_probs(noisy, x, 1, b);
  CHECK(first[0] == second[0]);

  Rng c(10);
  const MCProbStack stack = mc_dropout_probs(noisy, x, 6, c);
  Matrix mean = Matrix::Zero(x.rows(), 3);
  for (const auto& slice : stack) mean += slice;
  mean /= 6.0;
  for (Eigen::Index i = 0; i < mean.rows(); ++i) CHECK(std::abs(mean.row(i).sum() - 1.0) <= 1e-9);

  Rng d(0);
  CHECK_THROWS_AS(mc_dropout_probs(noisy, x, 0, d), ConfigError);
}

TEST_CASE("parameter gradients match central differences") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const Classifier clf = init_classifier(net({3, 5, 4, 2}, 0.0, rng.next()));
    const Matrix x = random_matrix(rng, 6, 3);
    Labels y;
    for (int i = 0; i < 6; ++i) y.push_back(static_cast<int>(rng.below(2)));
    CHECK(oracle::max_param_gradient_error(clf, x, y) <= 1e-4);
    CHECK(loss_and_gradients(clf, x, y).loss == doctest::Approx(oracle::mean_cross_entropy(clf, x, y)));
  }
}

TEST_CASE("input gradient") {
  SUBCASE("single linear layer returns the weight column") {
    Classifier clf = init_classifier(net({3, 2}, 0.0, 3));
    const RowVector x = RowVector::Constant(3, 0.7);
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(input_gradient(clf, x, c) == clf.weights[0].col(static_cast<Eigen::Index>(c)).transpose());
    }
  }
  SUBCASE("random [3,5,2] net against central differences") {
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
      const Classifier clf = init_classifier(net({3, 5, 2}, 0.0, rng.next()));
      const RowVector x = random_matrix(rng, 1, 3).row(0);
      CHECK(oracle::max_input_gradient_error(clf, x) <= 1e-4);
    }
  }
  SUBCASE("zero net") {
    CHECK(input_gradient(zero_net({3, 4, 2}), RowVector::Ones(3), 1).isZero(0.0));
  }
  SUBCASE("errors") {
    const Classifier clf = init_classifier(net({3, 2}));
    CHECK_THROWS_AS(input_gradient(clf, RowVector::Ones(2), 0), ShapeError);
    CHECK_THROWS_AS(input_gradient(clf, RowVector::Ones(3), 2), ShapeError);
  }
}

TEST_CASE("train") {
  SUBCASE("separable data is fitted exactly") {
    const Dataset d = make_two_gaussians(10, 6.0, 0.5, 12);
    const Classifier start = init_classifier(net({2, 8, 2}, 0.0, 0));
    const TrainResult r = train(start, d.features, d.labels, {200, 16, 0.1, 0});
    CHECK(r.loss_history.size() == 200);
    CHECK(evaluate_accuracy(predict(r.classifier, d.features), d.labels) == 1.0);
  }
  SUBCASE("zero learning rate leaves parameters unchanged") {
    const Dataset d = make_two_gaussians(5, 2.0, 1.0, 1);
    const Classifier start = init_classifier(net({2, 4, 2}, 0.0, 3));
    const TrainResult r = train(start, d.features, d.labels, {6, 3, 0.0, 9});
    CHECK(r.classifier == start);
    for (double loss : r.loss_history) CHECK(loss == r.loss_history.front());
  }
  SUBCASE("XOR loss decreases over the first five epochs") {
    const Matrix x = row_matrix({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const Labels y{0, 1, 1, 0};
    const TrainResult r = train(init_classifier(net({2, 8, 2}, 0.0, 0)), x, y, {5, 4, 0.1, 0});
    REQUIRE(r.loss_history.size() == 5);
    for (std::size_t e = 1; e < 5; ++e) CHECK(r.loss_history[e] < r.loss_history[e - 1]);
  }
  SUBCASE("seeded and deterministic") {
    const Dataset d = make_two_gaussians(20, 2.0, 1.0, 4);
    const Classifier start = init_classifier(net({2, 6, 2}, 0.3, 3));
    const TrainResult a = train(start, d.features, d.labels, {10, 8, 0.1, 5});
    const TrainResult b = train(start, d.features, d.labels, {10, 8, 0.1, 5});
    CHECK(a.classifier == b.classifier);
    CHECK(a.loss_history == b.loss_history);
  }
  SUBCASE("errors") {
    const Classifier clf = init_classifier(net({2, 2}));
    CHECK_THROWS_AS(train(clf, Matrix(0, 2), Labels{}, {}), PreconditionError);
    CHECK_THROWS_AS(train(clf, Matrix::Zero(1, 2), Labels{2}, {}), PreconditionError);
    CHECK_THROWS_AS(train(clf, Matrix::Zero(1, 2), Labels{0}, {0, 1, 0.1, 0}), ConfigError);
    Classifier huge = clf;
    huge.weights[0].setConstant(1e300);
    try {
      train(huge, Matrix::Constant(1, 2, 1e300), Labels{0}, {3, 1, 0.1, 0});
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
  }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  const Classifier clf = init_classifier(net({3, 7, 5, 4}, 0.3, 99));
  std::stringstream buf;
  write_checkpoint(clf, buf);
  const Classifier back = read_checkpoint(buf);
  CHECK(back == clf);
  CHECK(back.config.dropout_rate == clf.config.dropout_rate);
  CHECK(back.config.layer_widths == clf.config.layer_widths);

  std::stringstream bad("poolal-classifier 1\nlayer_widths 2 3\n");
  CHECK_THROWS_AS(read_checkpoint(bad), ParseError);
  std::stringstream wrong("something else\n");
  CHECK_THROWS_AS(read_checkpoint(wrong), ParseError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/model.txt"), IoError);
}
