// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crash/diff/tape.hpp"

// Differentiable operations on rank-2 values. Every op checks operand shapes
// (ShapeError), index ranges (IndexError) and the finiteness of its result
// (NumericalError).
namespace crash::diff {

enum class Activation { relu, gelu };

// y = x W + b with x: n x c_in, W: c_in x c_out, b: 1 x c_out (or rank 1).
Var linear(Var x, Var weight, Var bias);

// Matrix product with optional transposes of either operand.
Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
// y[:, j] = x[:, j] * col_scale[j] + col_shift[j]; constants, not differentiated.
Var affine_cols(Var x, std::span<const double> col_scale, std::span<const double> col_shift);

// axis 1 normalizes each row, axis 0 each column. Max-subtracted.
Var softmax(Var x, int axis);

// Per-row standardization (biased variance) followed by gain and bias.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

Var activation(Var x, Activation kind);

// out[index[j]] += values[j]; untouched rows stay zero. Rows are accumulated
// with Neumaier compensation so the result barely depends on edge order.
Var scatter_sum(Var values, std::span<const std::size_t> index, std::size_t size);

// out[r] = x[index[r]].
Var gather(Var x, std::span<const std::size_t> index);

// Concatenation along the last axis; all parts share the row count.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);

// Columns [begin, end).
Var slice_cols(Var x, std::size_t begin, std::size_t end);

// Euclidean norm of each row as an n x 1 column; the gradient at a zero row is 0.
Var row_norm(Var x);

// Sum over rows: n x c -> 1 x c.
Var col_sum(Var x);

// 1 x c -> c x 1 and back.
Var transpose(Var x);

// y[i, :] = x[i, :] * s[i] with s: n x 1.
Var row_scale(Var x, Var s);

// 1/s elementwise where s >= floor, 0 (with zero gradient) otherwise.
Var reciprocal_guarded(Var s, double floor);

// Sum of all elements -> 1 x 1.
Var sum(Var x);
// Mean of squared elements -> 1 x 1.
Var mean_square(Var x);

// Central-difference position update dt^2 * accel + 2 * x_cur - x_prev.
Var verlet(Var x_cur, Var x_prev, Var accel, double dt);

}  // namespace crash::diff
