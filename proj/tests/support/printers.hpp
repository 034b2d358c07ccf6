// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

#include "crash/diff/tensor.hpp"

namespace crash::diff {

// Readable gtest failure output for tensors.
inline void PrintTo(const Tensor& t, std::ostream* os) {
  *os << shape_string(t.shape()) << " [";
  const std::size_t shown = std::min<std::size_t>(t.size(), 12);
  for (std::size_t i = 0; i < shown; ++i) *os << (i ? ", " : "") << t[i];
  if (shown < t.size()) *os << ", ...";
  *os << "]";
}

}  // namespace crash::diff
