// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "crash/diff/tensor.hpp"

namespace crash::diff::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix, Eigen::Aligned64>;
using ConstMatrixView = Eigen::Map<const RowMatrix, Eigen::Aligned64>;

inline MatrixView view(Tensor& t) { return {t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols())}; }
inline ConstMatrixView view(const Tensor& t) {
  return {t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols())};
}

}  // namespace crash::diff::detail
