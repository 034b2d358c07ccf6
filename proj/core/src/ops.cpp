// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/diff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "crash/errors.hpp"
#include "eigen_view.hpp"

namespace crash::diff {

using detail::view;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

std::string dims(const Var& v) { return shape_string(v.shape()); }

void require_same(const Var& a, const Var& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch " + dims(a) + " vs " + dims(b));
}

bool wants(const Tape& t, const Var& v) { return t.needs_grad(v.id); }

Tensor& gbuf(Tape& t, const Var& v) { return t.grad_buffer(v.id); }

const Tensor& gself(Tape& t, std::size_t self) { return t.grad_buffer(self); }

Tensor matrix_like(std::size_t r, std::size_t c) { return Tensor::zeros(r, c); }

}  // namespace

Var linear(Var x, Var weight, Var bias) {
  require(x.cols() == weight.rows(),
          "linear: input " + dims(x) + " incompatible with weight " + dims(weight));
  require(bias.rows() * bias.cols() == weight.cols(), "linear: bias " + dims(bias) + " vs weight " + dims(weight));
  Tape& tape = *x.tape;
  Tensor y = matrix_like(x.rows(), weight.cols());
  auto Y = view(y);
  Y.noalias() = view(x.value()) * view(weight.value());
  const Eigen::Map<const Eigen::RowVectorXd> B(bias.value().data(), Eigen::Index(weight.cols()));
  Y.rowwise() += B;
  return tape.push(std::move(y), {x, weight, bias}, [x, weight, bias](Tape& t, std::size_t self) {
    const auto dY = view(gself(t, self));
    if (wants(t, x)) view(gbuf(t, x)).noalias() += dY * view(weight.value()).transpose();
    if (wants(t, weight)) view(gbuf(t, weight)).noalias() += view(x.value()).transpose() * dY;
    if (wants(t, bias)) {
      Eigen::Map<Eigen::RowVectorXd> dB(gbuf(t, bias).data(), dY.cols());
      dB += dY.colwise().sum();
    }
  });
}

Var matmul(Var a, Var b, bool ta, bool tb) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t ka = ta ? a.rows() : a.cols();
  const std::size_t kb = tb ? b.cols() : b.rows();
  const std::size_t n = tb ? b.rows() : b.cols();
  require(ka == kb, "matmul: inner dimensions differ " + dims(a) + " vs " + dims(b));
  Tape& tape = *a.tape;
  Tensor c = matrix_like(m, n);
  auto C = view(c);
  const auto A = view(a.value());
  const auto B = view(b.value());
  if (!ta && !tb) C.noalias() = A * B;
  else if (ta && !tb) C.noalias() = A.transpose() * B;
  else if (!ta && tb) C.noalias() = A * B.transpose();
  else C.noalias() = A.transpose() * B.transpose();
  return tape.push(std::move(c), {a, b}, [a, b, ta, tb](Tape& t, std::size_t self) {
    const auto dC = view(gself(t, self));
    const auto A = view(a.value());
    const auto B = view(b.value());
    if (wants(t, a)) {
      auto dA = view(gbuf(t, a));
      if (!ta && !tb) dA.noalias() += dC * B.transpose();
      else if (ta && !tb) dA.noalias() += B * dC.transpose();
      else if (!ta && tb) dA.noalias() += dC * B;
      else dA.noalias() += B.transpose() * dC.transpose();
    }
    if (wants(t, b)) {
      auto dB = view(gbuf(t, b));
      if (!ta && !tb) dB.noalias() += A.transpose() * dC;
      else if (ta && !tb) dB.noalias() += A * dC;
      else if (!ta && tb) dB.noalias() += dC.transpose() * A;
      else dB.noalias() += A.transpose() * dC.transpose();
    }
  });
}

Var add(Var a, Var b) {
  require_same(a, b, "add");
  Tensor y = a.value();
  view(y) += view(b.value());
  return a.tape->push(std::move(y), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto dY = view(gself(t, self));
    if (wants(t, a)) view(gbuf(t, a)) += dY;
    if (wants(t, b)) view(gbuf(t, b)) += dY;
  });
}

Var sub(Var a, Var b) {
  require_same(a, b, "sub");
  Tensor y = a.value();
  view(y) -= view(b.value());
  return a.tape->push(std::move(y), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto dY = view(gself(t, self));
    if (wants(t, a)) view(gbuf(t, a)) += dY;
    if (wants(t, b)) view(gbuf(t, b)) -= dY;
  });
}

Var mul(Var a, Var b) {
  require_same(a, b, "mul");
  Tensor y = a.value();
  view(y).array() *= view(b.value()).array();
  return a.tape->push(std::move(y), {a, b}, [a, b](Tape& t, std::size_t self) {
    const auto dY = view(gself(t, self));
    if (wants(t, a)) view(gbuf(t, a)).array() += dY.array() * view(b.value()).array();
    if (wants(t, b)) view(gbuf(t, b)).array() += dY.array() * view(a.value()).array();
  });
}

Var scale(Var x, double factor) {
  Tensor y = x.value();
  view(y) *= factor;
  return x.tape->push(std::move(y), {x}, [x, factor](Tape& t, std::size_t self) {
    view(gbuf(t, x)) += factor * view(gself(t, self));
  });
}

Var affine_cols(Var x, std::span<const double> col_scale, std::span<const double> col_shift) {
  const std::size_t c = x.cols();
  require(col_scale.size() == c && col_shift.size() == c, "affine_cols: expected " + std::to_string(c) + " columns");
  std::vector<double> s(col_scale.begin(), col_scale.end());
  Tensor y = x.value();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (std::size_t j = 0; j < c; ++j) y.at(r, j) = y.at(r, j) * col_scale[j] + col_shift[j];
  }
  return x.tape->push(std::move(y), {x}, [x, s = std::move(s)](Tape& t, std::size_t self) {
    const Tensor& dy = gself(t, self);
    Tensor& dx = gbuf(t, x);
    const std::size_t cols = s.size();
    for (std::size_t r = 0; r < dy.rows(); ++r) {
      for (std::size_t j = 0; j < cols; ++j) dx.at(r, j) += dy.at(r, j) * s[j];
    }
  });
}

Var softmax(Var x, int axis) {
  require(axis == 0 || axis == 1, "softmax: axis must be 0 or 1");
  const Tensor& in = x.value();
  const std::size_t rows = in.rows();
  const std::size_t cols = in.cols();
  // Iterate over `lines` groups of `len` entries separated by `stride`.
  const std::size_t lines = axis == 1 ? rows : cols;
  const std::size_t len = axis == 1 ? cols : rows;
  const std::size_t stride = axis == 1 ? 1 : cols;
  const std::size_t step = axis == 1 ? cols : 1;
  Tensor y(in.shape());
  for (std::size_t l = 0; l < lines; ++l) {
    const double* src = in.data() + l * step;
    double* dst = y.data() + l * step;
    double mx = src[0];
    for (std::size_t k = 1; k < len; ++k) mx = std::max(mx, src[k * stride]);
    double total = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      dst[k * stride] = std::exp(src[k * stride] - mx);
      total += dst[k * stride];
    }
    const double inv = 1.0 / total;
    for (std::size_t k = 0; k < len; ++k) dst[k * stride] *= inv;
  }
  return x.tape->push(std::move(y), {x}, [x, lines, len, stride, step](Tape& t, std::size_t self) {
    const Tensor& out = t.value(self);
    const Tensor& dy = gself(t, self);
    Tensor& dx = gbuf(t, x);
    for (std::size_t l = 0; l < lines; ++l) {
      const double* yv = out.data() + l * step;
      const double* gv = dy.data() + l * step;
      double* dv = dx.data() + l * step;
      double dot = 0.0;
      for (std::size_t k = 0; k < len; ++k) dot += yv[k * stride] * gv[k * stride];
      for (std::size_t k = 0; k < len; ++k) dv[k * stride] += yv[k * stride] * (gv[k * stride] - dot);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  require(c >= 1, "layer_norm: needs at least one channel");
  require(gain.value().size() == c && bias.value().size() == c, "layer_norm: gain/bias must have " + std::to_string(c) + " entries");
  const Tensor& in = x.value();
  Tensor y = matrix_like(n, c);
  Tensor xhat = matrix_like(n, c);
  std::vector<double> inv_std(n);
  const double* g = gain.value().data();
  const double* b = bias.value().data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = in.data() + r * c;
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += row[j];
    mean /= double(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= double(c);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (row[j] - mean) * inv;
      xhat.at(r, j) = h;
      y.at(r, j) = h * g[j] + b[j];
    }
  }
  return x.tape->push(std::move(y), {x, gain, bias},
                      [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
                        const Tensor& dy = gself(t, self);
                        const std::size_t rows = dy.rows();
                        const std::size_t cols = dy.cols();
                        const double* g = gain.value().data();
                        if (wants(t, gain) || wants(t, bias)) {
                          Tensor* dg = wants(t, gain) ? &gbuf(t, gain) : nullptr;
                          Tensor* db = wants(t, bias) ? &gbuf(t, bias) : nullptr;
                          for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t j = 0; j < cols; ++j) {
                              if (dg) (*dg)[j] += dy.at(r, j) * xhat.at(r, j);
                              if (db) (*db)[j] += dy.at(r, j);
                            }
                          }
                        }
                        if (!wants(t, x)) return;
                        Tensor& dx = gbuf(t, x);
                        std::vector<double> dh(cols);
                        for (std::size_t r = 0; r < rows; ++r) {
                          double s1 = 0.0;
                          double s2 = 0.0;
                          for (std::size_t j = 0; j < cols; ++j) {
                            dh[j] = dy.at(r, j) * g[j];
                            s1 += dh[j];
                            s2 += dh[j] * xhat.at(r, j);
                          }
                          const double k = inv_std[r] / double(cols);
                          for (std::size_t j = 0; j < cols; ++j) {
                            dx.at(r, j) += k * (double(cols) * dh[j] - s1 - xhat.at(r, j) * s2);
                          }
                        }
                      });
}

Var activation(Var x, Activation kind) {
  Tensor y = x.value();
  if (kind == Activation::relu) {
    for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  } else {
    for (double& v : y.values()) v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 * 0.5));
  }
  return x.tape->push(std::move(y), {x}, [x, kind](Tape& t, std::size_t self) {
    const Tensor& dy = gself(t, self);
    const Tensor& in = x.value();
    Tensor& dx = gbuf(t, x);
    if (kind == Activation::relu) {
      for (std::size_t i = 0; i < in.size(); ++i) dx[i] += in[i] > 0.0 ? dy[i] : 0.0;
    } else {
      const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
      for (std::size_t i = 0; i < in.size(); ++i) {
        const double v = in[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 * 0.5));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
        dx[i] += dy[i] * (cdf + v * pdf);
      }
    }
  });
}

Var scatter_sum(Var values, std::span<const std::size_t> index, std::size_t size) {
  const std::size_t m = values.rows();
  const std::size_t c = values.cols();
  require(index.size() == m, "scatter_sum: " + std::to_string(index.size()) + " indices for " + std::to_string(m) + " rows");
  for (std::size_t j = 0; j < m; ++j) {
    if (index[j] >= size) {
      throw IndexError("scatter_sum: index " + std::to_string(index[j]) + " out of range [0, " + std::to_string(size) + ")");
    }
  }
  const Tensor& in = values.value();
  Tensor out = matrix_like(size, c);
  Tensor comp = matrix_like(size, c);
  for (std::size_t j = 0; j < m; ++j) {
    const double* src = in.data() + j * c;
    double* dst = out.data() + index[j] * c;
    double* err = comp.data() + index[j] * c;
    for (std::size_t k = 0; k < c; ++k) {
      const double s = dst[k] + src[k];
      if (std::abs(dst[k]) >= std::abs(src[k])) err[k] += (dst[k] - s) + src[k];
      else err[k] += (src[k] - s) + dst[k];
      dst[k] = s;
    }
  }
  view(out) += view(comp);
  std::vector<std::size_t> idx(index.begin(), index.end());
  return values.tape->push(std::move(out), {values}, [values, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Tensor& dy = gself(t, self);
    Tensor& dv = gbuf(t, values);
    const std::size_t cols = dy.cols();
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double* src = dy.data() + idx[j] * cols;
      double* dst = dv.data() + j * cols;
      for (std::size_t k = 0; k < cols; ++k) dst[k] += src[k];
    }
  });
}

Var gather(Var x, std::span<const std::size_t> index) {
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  for (std::size_t i : index) {
    if (i >= n) throw IndexError("gather: index " + std::to_string(i) + " out of range [0, " + std::to_string(n) + ")");
  }
  const Tensor& in = x.value();
  Tensor out = matrix_like(index.size(), c);
  for (std::size_t r = 0; r < index.size(); ++r) {
    std::copy_n(in.data() + index[r] * c, c, out.data() + r * c);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return x.tape->push(std::move(out), {x}, [x, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Tensor& dy = gself(t, self);
    Tensor& dx = gbuf(t, x);
    const std::size_t cols = dy.cols();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const double* src = dy.data() + r * cols;
      double* dst = dx.data() + idx[r] * cols;
      for (std::size_t k = 0; k < cols; ++k) dst[k] += src[k];
    }
  });
}

Var concat(std::span<const Var> parts) {
  require(!parts.empty(), "concat: no operands");
  const std::size_t n = parts[0].rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require(p.rows() == n, "concat: row count mismatch " + dims(parts[0]) + " vs " + dims(p));
    total += p.cols();
  }
  Tensor out = matrix_like(n, total);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    const std::size_t c = v.cols();
    for (std::size_t r = 0; r < n; ++r) std::copy_n(v.data() + r * c, c, out.data() + r * total + off);
    off += c;
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  Tape& tape = *parts[0].tape;
  return tape.push(std::move(out), ps, [ps](Tape& t, std::size_t self) {
    const Tensor& dy = gself(t, self);
    const std::size_t total = dy.cols();
    std::size_t off = 0;
    for (const Var& p : ps) {
      const std::size_t c = p.cols();
      if (wants(t, p)) {
        Tensor& dp = gbuf(t, p);
        for (std::size_t r = 0; r < dy.rows(); ++r) {
          const double* src = dy.data() + r * total + off;
          double* dst = dp.data() + r * c;
          for (std::size_t k = 0; k < c; ++k) dst[k] += src[k];
        }
      }
      off += c;
    }
  });
}

Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  const std::size_t c = x.cols();
  require(begin < end && end <= c, "slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                       ") invalid for " + dims(x));
  const std::size_t n = x.rows();
  const std::size_t w = end - begin;
  const Tensor& in = x.value();
  Tensor out = matrix_like(n, w);
  for (std::size_t r = 0; r < n; ++r) std::copy_n(in.data() + r * c + begin, w, out.data() + r * w);
  return x.tape->push(std::move(out), {x}, [x, begin, w, c](Tape& t, std::size_t self) {
    const Tensor& dy = gself(t, self);
    Tensor& dx = gbuf(t, x);
    for (std::size_t r = 0; r < dy.rows(); ++r) {
      for (std::size_t k = 0; k < w; ++k) dx[r * c + begin + k] += dy[r * w + k];
    }
  });
}

Var row_norm(Var x) {
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  const Tensor& in = x.value();
  Tensor out = matrix_like(n, 1);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) s += in[r * c + k] * in[r * c + k];
    out[r] = std::sqrt(s);
  }
  return x.tape->push(std::move(out), {x}, [x, c](Tape& t, std::size_t self) {
    const Tensor& norm = t.value(self);
    const Tensor& dy = gself(t, self);
    const Tensor& in = x.value();
    Tensor& dx = gbuf(t, x);
    for (std::size_t r = 0; r < norm.rows(); ++r) {
      if (norm[r] == 0.0) continue;
      const double k = dy[r] / norm[r];
      for (std::size_t j = 0; j < c; ++j) dx[r * c + j] += k * in[r * c + j];
    }
  });
}

Var col_sum(Var x) {
  Tensor out = matrix_like(1, x.cols());
  view(out) = view(x.value()).colwise().sum();
  return x.tape->push(std::move(out), {x}, [x](Tape& t, std::size_t self) {
    const auto dY = view(gself(t, self));
    view(gbuf(t, x)).rowwise() += dY.row(0);
  });
}

Var transpose(Var x) {
  Tensor out = matrix_like(x.cols(), x.rows());
  view(out) = view(x.value()).transpose();
  return x.tape->push(std::move(out), {x}, [x](Tape& t, std::size_t self) {
    view(gbuf(t, x)) += view(gself(t, self)).transpose();
  });
}

Var row_scale(Var x, Var s) {
  require(s.rows() == x.rows() && s.cols() == 1, "row_scale: scale " + dims(s) + " for input " + dims(x));
  Tensor out = x.value();
  view(out).array().colwise() *= view(s.value()).col(0).array();
  return x.tape->push(std::move(out), {x, s}, [x, s](Tape& t, std::size_t self) {
    const auto dY = view(gself(t, self));
    if (wants(t, x)) view(gbuf(t, x)).array() += dY.array().colwise() * view(s.value()).col(0).array();
    if (wants(t, s)) {
      view(gbuf(t, s)).col(0) += (dY.array() * view(x.value()).array()).rowwise().sum().matrix();
    }
  });
}

Var reciprocal_guarded(Var s, double floor) {
  Tensor out = s.value();
  for (double& v : out.values()) v = v >= floor ? 1.0 / v : 0.0;
  return s.tape->push(std::move(out), {s}, [s](Tape& t, std::size_t self) {
    const Tensor& y = t.value(self);
    const Tensor& dy = gself(t, self);
    Tensor& ds = gbuf(t, s);
    for (std::size_t i = 0; i < y.size(); ++i) ds[i] -= dy[i] * y[i] * y[i];
  });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  return x.tape->push(Tensor::scalar(total), {x}, [x](Tape& t, std::size_t self) {
    const double g = gself(t, self)[0];
    for (double& v : gbuf(t, x).values()) v += g;
  });
}

Var mean_square(Var x) {
  const Tensor& in = x.value();
  double total = 0.0;
  for (double v : in.values()) total += v * v;
  const double n = double(std::max<std::size_t>(in.size(), 1));
  return x.tape->push(Tensor::scalar(total / n), {x}, [x, n](Tape& t, std::size_t self) {
    const double g = gself(t, self)[0] * 2.0 / n;
    const Tensor& v = x.value();
    Tensor& dx = gbuf(t, x);
    for (std::size_t i = 0; i < v.size(); ++i) dx[i] += g * v[i];
  });
}

Var verlet(Var x_cur, Var x_prev, Var accel, double dt) {
  require_same(x_cur, x_prev, "verlet");
  require_same(x_cur, accel, "verlet");
  const double dt2 = dt * dt;
  const Tensor& xc = x_cur.value();
  const Tensor& xp = x_prev.value();
  const Tensor& a = accel.value();
  Tensor out(xc.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dt2 * a[i] + 2.0 * xc[i] - xp[i];
  return x_cur.tape->push(std::move(out), {x_cur, x_prev, accel}, [x_cur, x_prev, accel, dt2](Tape& t, std::size_t self) {
    const auto dY = view(gself(t, self));
    if (wants(t, x_cur)) view(gbuf(t, x_cur)) += 2.0 * dY;
    if (wants(t, x_prev)) view(gbuf(t, x_prev)) -= dY;
    if (wants(t, accel)) view(gbuf(t, accel)) += dt2 * dY;
  });
}

}  // namespace crash::diff
