#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "poolal/error.hpp"
#include "poolal/nn.hpp"

namespace poolal {

namespace {

constexpr const char* kMagic = "poolal-classifier";
constexpr int kVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_double(const std::string& token) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE) {
    throw ParseError("checkpoint: bad number '" + token + "'");
  }
  return v;
}

void expect(std::istream& in, const std::string& keyword) {
  std::string token;
  if (!(in >> token) || token != keyword) {
    throw ParseError("checkpoint: expected '" + keyword + "', found '" + token + "'");
  }
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw ParseError(std::string("checkpoint: could not read ") + what);
  return v;
}

double read_double(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw ParseError("checkpoint: truncated parameter block");
  return parse_double(token);
}

}  // namespace

void write_checkpoint(const Classifier& clf, std::ostream& out) {
  const NetConfig& cfg = clf.config;
  out << kMagic << ' ' << kVersion << '\n';
  out << "layer_widths " << cfg.layer_widths.size();
  for (std::size_t w : cfg.layer_widths) out << ' ' << w;
  out << '\n';
  out << "dropout_rate " << hex(cfg.dropout_rate) << '\n';
  out << "activation relu\n";
  out << "init_seed " << cfg.init_seed << '\n';
  for (std::size_t l = 0; l < clf.weights.size(); ++l) {
    const Matrix& w = clf.weights[l];
    out << "weights " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) out << (j ? " " : "") << hex(w(i, j));
      out << '\n';
    }
    const RowVector& b = clf.biases[l];
    out << "bias " << l << ' ' << b.size() << '\n';
    for (Eigen::Index j = 0; j < b.size(); ++j) out << (j ? " " : "") << hex(b(j));
    out << '\n';
  }
  if (!out) throw IoError("checkpoint: write failed");
}

Classifier read_checkpoint(std::istream& in) {
  expect(in, kMagic);
  if (read_value<int>(in, "version") != kVersion) throw ParseError("checkpoint: unsupported version");

  NetConfig cfg;
  expect(in, "layer_widths");
  const auto n_widths = read_value<std::size_t>(in, "layer count");
  for (std::size_t i = 0; i < n_widths; ++i) cfg.layer_widths.push_back(read_value<std::size_t>(in, "width"));
  expect(in, "dropout_rate");
  cfg.dropout_rate = read_double(in);
  expect(in, "activation");
  expect(in, "relu");
  expect(in, "init_seed");
  cfg.init_seed = read_value<std::uint64_t>(in, "init_seed");
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }

  Classifier clf{cfg, {}, {}};
  for (std::size_t l = 0; l < cfg.num_layers(); ++l) {
    expect(in, "weights");
    const auto idx = read_value<std::size_t>(in, "layer index");
    const auto rows = read_value<Eigen::Index>(in, "rows");
    const auto cols = read_value<Eigen::Index>(in, "cols");
    if (idx != l || rows != static_cast<Eigen::Index>(cfg.layer_widths[l]) ||
        cols != static_cast<Eigen::Index>(cfg.layer_widths[l + 1])) {
      throw ParseError("checkpoint: weight block " + std::to_string(l) + " has the wrong shape");
    }
    Matrix w(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = read_double(in);
    }
    expect(in, "bias");
    if (read_value<std::size_t>(in, "layer index") != l ||
        read_value<Eigen::Index>(in, "bias size") != cols) {
      throw ParseError("checkpoint: bias block " + std::to_string(l) + " has the wrong shape");
    }
    RowVector b(cols);
    for (Eigen::Index j = 0; j < cols; ++j) b(j) = read_double(in);
    if (!w.allFinite() || !b.allFinite()) {
      throw ParseError("checkpoint: non-finite parameter in layer " + std::to_string(l));
    }
    clf.weights.push_back(std::move(w));
    clf.biases.push_back(std::move(b));
  }
  return clf;
}

void save_checkpoint(const Classifier& clf, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_checkpoint(clf, out);
}

Classifier load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace poolal
