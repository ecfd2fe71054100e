#pragma once

#include <Eigen/Dense>

namespace mmdfuse {

// Feature matrices are row-per-sample; row-major storage keeps each sample
// contiguous for the kernel loops.
using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

}  // namespace mmdfuse
