// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/diff/tape.hpp"

#include <algorithm>

#include "crash/errors.hpp"

namespace crash::diff {

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  grad.fill(0.0);
}

Parameter& ParameterSet::add(std::string name, Tensor value) {
  Parameter& p = params_.emplace_back(std::move(name), std::move(value));
  p.id = params_.size() - 1;
  return p;
}

std::size_t ParameterSet::total_values() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

GradSink ParameterSet::make_sink() const {
  GradSink sink;
  sink.reserve(params_.size());
  for (const auto& p : params_) sink.emplace_back(p.value.shape());
  return sink;
}

void ParameterSet::absorb(const GradSink& sink) {
  if (sink.size() != params_.size()) throw ShapeError("gradient sink size mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = params_[i];
    if (p.grad.shape() != p.value.shape()) p.zero_grad();
    for (std::size_t k = 0; k < p.grad.size(); ++k) p.grad[k] += sink[i][k];
  }
}

const Tensor& Var::value() const { return tape->value(id); }

struct Tape::Segment {
  SegmentFn fn;
  bool checkpoint = false;
  std::vector<std::size_t> inputs;
  std::vector<std::size_t> outputs;
  std::unique_ptr<Tape> sub;
  std::vector<Var> sub_inputs;
  std::vector<Var> sub_outputs;
};

Tape::~Tape() = default;

Var Tape::constant(Tensor value) {
  value.set_requires_grad(false);
  return push(std::move(value), {}, {});
}

Var Tape::leaf(Tensor value) {
  const bool flag = value.requires_grad();
  if (!value.all_finite()) throw NumericalError("non-finite value in tape leaf");
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.needs_grad = flag;
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  if (!p.value.all_finite()) throw NumericalError("non-finite value in parameter " + p.name);
  Node& n = nodes_.emplace_back();
  n.value = p.value;
  n.needs_grad = true;
  n.param = &p;
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Tape::push(Tensor value, std::vector<Var> parents, BackwardFn backward) {
  if (!value.all_finite()) throw NumericalError("non-finite value produced by operation");
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape != this) throw ShapeError("operand recorded on a different tape");
    needs = needs || nodes_[p.id].needs_grad;
  }
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.needs_grad = needs;
  if (needs) n.backward = std::move(backward);
  return {this, nodes_.size() - 1};
}

std::vector<Var> Tape::segment(std::span<const Var> inputs, const SegmentFn& fn, bool checkpoint) {
  auto seg = std::make_shared<Segment>();
  seg->fn = fn;
  seg->checkpoint = checkpoint;
  auto sub = std::make_unique<Tape>();
  std::vector<Var> sub_inputs;
  for (const Var& in : inputs) {
    if (in.tape != this) throw ShapeError("segment input recorded on a different tape");
    seg->inputs.push_back(in.id);
    Tensor v = nodes_[in.id].value;
    v.set_requires_grad(nodes_[in.id].needs_grad);
    sub_inputs.push_back(sub->leaf(std::move(v)));
  }
  std::vector<Var> sub_outputs = fn(*sub, sub_inputs);

  Node& head = nodes_.emplace_back();
  const std::size_t head_id = nodes_.size() - 1;
  bool any_needs = false;
  for (const Var& o : sub_outputs) any_needs = any_needs || sub->needs_grad(o.id);
  head.needs_grad = any_needs;

  std::vector<Var> outputs;
  for (const Var& o : sub_outputs) {
    Node& n = nodes_.emplace_back();
    n.value = sub->value(o.id);
    n.needs_grad = sub->needs_grad(o.id);
    seg->outputs.push_back(nodes_.size() - 1);
    outputs.push_back({this, nodes_.size() - 1});
  }
  if (!checkpoint) {
    seg->sub = std::move(sub);
    seg->sub_inputs = std::move(sub_inputs);
    seg->sub_outputs = std::move(sub_outputs);
  }
  nodes_[head_id].segment = std::move(seg);
  return outputs;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.empty() && !n.value.empty()) return Tensor(n.value.shape());
  return n.grad;
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.shape() != n.value.shape() || (n.grad.empty() && !n.value.empty())) {
    n.grad = Tensor(n.value.shape());
  }
  return n.grad;
}

void Tape::backward(Var loss, GradSink* sink) {
  if (loss.tape != this) throw ShapeError("loss recorded on a different tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + shape_string(nodes_[loss.id].value.shape()));
  }
  const std::pair<Var, Tensor> seed{loss, Tensor(nodes_[loss.id].value.shape(), 1.0)};
  backward(std::span<const std::pair<Var, Tensor>>(&seed, 1), sink);
}

void Tape::backward(std::span<const std::pair<Var, Tensor>> seeds, GradSink* sink) {
  std::size_t top = 0;
  bool any = false;
  for (const auto& [var, g] : seeds) {
    if (var.tape != this) throw ShapeError("seed recorded on a different tape");
    if (g.shape() != nodes_[var.id].value.shape()) throw ShapeError("seed gradient shape mismatch");
    if (!nodes_[var.id].needs_grad) continue;
    Tensor& buf = grad_buffer(var.id);
    for (std::size_t k = 0; k < buf.size(); ++k) buf[k] += g[k];
    top = std::max(top, var.id);
    any = true;
  }
  if (any) run_backward(top, sink);
}

void Tape::run_backward(std::size_t top, GradSink* sink) {
  for (std::size_t i = top + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad) continue;
    if (n.segment) {
      run_segment_backward(i, sink);
      continue;
    }
    if (n.grad.empty()) continue;
    if (n.param) {
      Tensor* target = nullptr;
      if (sink) {
        target = &(*sink).at(n.param->id);
      } else {
        if (n.param->grad.shape() != n.param->value.shape()) n.param->zero_grad();
        target = &n.param->grad;
      }
      if (target->shape() != n.grad.shape()) throw ShapeError("gradient buffer shape mismatch for " + n.param->name);
      for (std::size_t k = 0; k < n.grad.size(); ++k) (*target)[k] += n.grad[k];
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
}

void Tape::run_segment_backward(std::size_t id, GradSink* sink) {
  Segment& seg = *nodes_[id].segment;
  bool any = false;
  for (std::size_t o : seg.outputs) any = any || !nodes_[o].grad.empty();
  if (!any) return;

  std::unique_ptr<Tape> replay;
  Tape* sub = seg.sub.get();
  std::vector<Var> sub_inputs = seg.sub_inputs;
  std::vector<Var> sub_outputs = seg.sub_outputs;
  if (seg.checkpoint) {
    replay = std::make_unique<Tape>();
    sub = replay.get();
    sub_inputs.clear();
    for (std::size_t in : seg.inputs) {
      Tensor v = nodes_[in].value;
      v.set_requires_grad(nodes_[in].needs_grad);
      sub_inputs.push_back(sub->leaf(std::move(v)));
    }
    sub_outputs = seg.fn(*sub, sub_inputs);
  }

  std::vector<std::pair<Var, Tensor>> seeds;
  for (std::size_t k = 0; k < seg.outputs.size(); ++k) {
    const Node& out = nodes_[seg.outputs[k]];
    if (out.grad.empty()) continue;
    seeds.emplace_back(sub_outputs[k], out.grad);
  }
  sub->backward(seeds, sink);

  for (std::size_t k = 0; k < seg.inputs.size(); ++k) {
    const std::size_t in = seg.inputs[k];
    if (!nodes_[in].needs_grad || !sub->has_grad(sub_inputs[k].id)) continue;
    const Tensor g = sub->grad(sub_inputs[k]);
    Tensor& buf = grad_buffer(in);
    for (std::size_t j = 0; j < buf.size(); ++j) buf[j] += g[j];
  }
}

std::size_t Tape::stored_values() const {
  std::size_t n = 0;
  for (const Node& node : nodes_) {
    n += node.value.size();
    if (node.segment && node.segment->sub) n += node.segment->sub->stored_values();
  }
  return n;
}

}  // namespace crash::diff
