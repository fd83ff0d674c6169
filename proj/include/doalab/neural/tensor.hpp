#pragma once

#include <Eigen/Dense>

namespace doalab::neural {

// Row-major so a row is one frame / one example, contiguous for GEMM packing.
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
using Row = Eigen::Matrix<S, 1, Eigen::Dynamic>;

using Matf = Mat<float>;
using Matd = Mat<double>;

}  // namespace doalab::neural
