// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crash/diff/tensor.hpp"

namespace crash::diff {

// A trainable tensor with its accumulated gradient. `id` is the position in
// the owning ParameterSet and doubles as the index into a GradSink.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  std::size_t id = 0;

  Parameter() = default;
  Parameter(std::string name, Tensor value);
  void zero_grad();
};

// Per-worker gradient buffers, indexed by Parameter::id. Lets concurrent
// backward passes accumulate without touching the shared Parameter::grad.
using GradSink = std::vector<Tensor>;

// Registry of a model's parameters in declaration order. Addresses are
// stable for the lifetime of the set.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  Parameter& add(std::string name, Tensor value);
  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::size_t total_values() const noexcept;

  void zero_grad();
  GradSink make_sink() const;
  // Adds sink contents into Parameter::grad in parameter order.
  void absorb(const GradSink& sink);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<Parameter> params_;
};

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

using BackwardFn = std::function<void(Tape&, std::size_t self)>;
using SegmentFn = std::function<std::vector<Var>(Tape& sub, std::span<const Var> inputs)>;

// Reverse-mode record of executed operations. Each pushed node owns its
// forward value; gradients are allocated on first accumulation.
//
// Segments group a sub-computation behind a single node. A retained segment
// keeps its sub-tape; a checkpointed segment keeps only its outputs and
// replays the sub-computation from its saved inputs during backward. Both
// variants run the identical backward arithmetic, so their gradients agree
// bit for bit.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  Var constant(Tensor value);
  // Differentiable leaf when value.requires_grad() is set, constant otherwise.
  Var leaf(Tensor value);
  // Leaf bound to a parameter; one node per parameter per tape.
  Var param(Parameter& p);

  Var push(Tensor value, std::vector<Var> parents, BackwardFn backward);

  std::vector<Var> segment(std::span<const Var> inputs, const SegmentFn& fn, bool checkpoint);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }
  // Gradient of a node after backward; zeros if nothing reached it.
  Tensor grad(Var v) const;
  // Mutable gradient buffer, zero-initialized on first use.
  Tensor& grad_buffer(std::size_t id);

  // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one value.
  void backward(Var loss, GradSink* sink = nullptr);
  // Propagates from arbitrary seed gradients.
  void backward(std::span<const std::pair<Var, Tensor>> seeds, GradSink* sink = nullptr);

  std::size_t size() const noexcept { return nodes_.size(); }
  // Number of doubles currently held in forward values (retained segments
  // included); used to observe the memory effect of checkpointing.
  std::size_t stored_values() const;

 private:
  struct Segment;
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
    std::shared_ptr<Segment> segment;
  };

  void run_backward(std::size_t top, GradSink* sink);
  void run_segment_backward(std::size_t id, GradSink* sink);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

}  // namespace crash::diff
