#pragma once

#include <Eigen/Dense>

namespace gapkit {

// Row-major storage: one embedding per row, matching the on-disk layout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace gapkit
