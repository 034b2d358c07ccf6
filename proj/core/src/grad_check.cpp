// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/diff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "crash/errors.hpp"

namespace crash::diff {

namespace {

double evaluate(const ScalarFn& f) {
  Tape tape;
  return f(tape).value().item();
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& f, std::span<Parameter* const> params, double eps, double abs_floor) {
  if (!(eps > 0.0)) throw ConfigError("grad_check: eps must be positive");
  GradSink sink;
  std::vector<std::size_t> saved_ids;
  for (Parameter* p : params) {
    saved_ids.push_back(p->id);
    p->id = sink.size();
    sink.emplace_back(p->value.shape());
  }
  {
    Tape tape;
    Var loss = f(tape);
    tape.backward(loss, &sink);
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->id = saved_ids[i];
  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double saved = p.value[k];
      p.value[k] = saved + eps;
      const double up = evaluate(f);
      p.value[k] = saved - eps;
      const double down = evaluate(f);
      p.value[k] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = sink[pi][k];
      const double diff = std::abs(analytic - numeric);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
      result.max_abs_error = std::max(result.max_abs_error, diff);
      result.max_rel_error = std::max(result.max_rel_error, diff / denom);
      ++result.checked;
    }
  }
  return result;
}

}  // namespace crash::diff
