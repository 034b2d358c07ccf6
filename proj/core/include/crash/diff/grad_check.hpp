// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>

#include "crash/diff/tape.hpp"

namespace crash::diff {

// Builds a scalar loss on the given tape from the current parameter values.
using ScalarFn = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

// Compares analytic gradients of `f` against central differences
// (f(p + eps) - f(p - eps)) / (2 eps) for every entry of every parameter.
// Relative error is |a - n| / max(|a|, |n|, abs_floor); entries where both
// are below abs_floor are measured absolutely.
GradCheckResult grad_check(const ScalarFn& f, std::span<Parameter* const> params, double eps = 1e-5,
                           double abs_floor = 1e-8);

}  // namespace crash::diff
