#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace poolal {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Labels = std::vector<int>;
using IndexList = std::vector<std::size_t>;

}  // namespace poolal
