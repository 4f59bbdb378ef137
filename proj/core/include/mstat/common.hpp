#pragma once

#include <Eigen/Dense>

namespace mstat {

// samples are rows; row-major keeps per-sample access contiguous
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

}  // namespace mstat
