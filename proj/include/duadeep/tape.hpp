// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "duadeep/tensor.hpp"

namespace duadeep {

template <typename T>
class Tape;

/// Handle to a value recorded on a tape. Cheap to copy.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor<T>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  Tape<T>& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Append-only record of operations for reverse-mode differentiation.
///
/// Node inputs always have smaller ids than the node itself, so a reverse
/// sweep over ids is a valid reverse topological order. Nodes live in a deque
/// so references handed out by value() stay valid as the tape grows.
///
/// A tape and everything recorded on it belong to one thread. Parameters are
/// attached with watch(); their gradients collect on the tape and reach the
/// parameter only in flush_leaf_grads(), which lets several tapes run in
/// parallel and be reduced in a fixed order afterwards.
template <typename T>
class Tape {
 public:
  // Receives the gradient of the node's output; accumulates into inputs via
  // Tape::grad(input_id).
  using BackwardFn = std::function<void(Tape&, std::span<const T>)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value) {
    Node& node = nodes_.emplace_back();
    node.owned = std::move(value);
    return {this, nodes_.size() - 1};
  }

  /// Attach an externally owned tensor without copying it. The tensor must
  /// outlive the tape and keep its values while the tape is in use. If it
  /// requires a gradient, flush_leaf_grads() accumulates into its grad buffer,
  /// the one mutation a watched tensor sees.
  Var<T> watch(const Tensor<T>& param) {
    Node& node = nodes_.emplace_back();
    node.external = &param;
    node.sink = param.requires_grad() ? const_cast<Tensor<T>*>(&param) : nullptr;
    node.needs_grad = param.requires_grad();
    return {this, nodes_.size() - 1};
  }

  /// Like watch(), but never differentiated.
  Var<T> watch_const(const Tensor<T>& value) {
    Node& node = nodes_.emplace_back();
    node.external = &value;
    return {this, nodes_.size() - 1};
  }

  /// Record the output of an operation. The backward rule is dropped when no
  /// input needs a gradient.
  Var<T> record(Tensor<T> value, std::vector<std::size_t> inputs, BackwardFn backward) {
    bool needs = false;
    for (const std::size_t in : inputs) {
      if (in >= nodes_.size()) fail(ErrorKind::kContract, "tape input id out of range");
      needs = needs || nodes_[in].needs_grad;
    }
    Node& node = nodes_.emplace_back();
    node.owned = std::move(value);
    node.needs_grad = needs;
    if (needs) {
      node.inputs = std::move(inputs);
      node.backward = std::move(backward);
    }
    return {this, nodes_.size() - 1};
  }

  const Tensor<T>& value(std::size_t id) const {
    const Node& node = nodes_.at(id);
    return node.external != nullptr ? *node.external : node.owned;
  }

  bool needs_grad(std::size_t id) const { return nodes_.at(id).needs_grad; }

  /// Gradient buffer of a node, allocated as zeros on first touch.
  std::span<T> grad(std::size_t id) {
    Node& node = nodes_.at(id);
    if (node.grad.empty()) node.grad.assign(value(id).size(), T{0});
    return node.grad;
  }

  std::span<const T> grad_if_any(std::size_t id) const { return nodes_.at(id).grad; }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t backward_visits() const noexcept { return visits_; }

  /// Reverse sweep from a scalar loss. May run once per tape.
  void propagate(const Var<T>& loss) {
    if (&loss.tape() != this) fail(ErrorKind::kContract, "loss was recorded on a different tape");
    if (loss.value().size() != 1) {
      fail(ErrorKind::kContract,
           "backward requires a scalar loss, got shape " + shape_string(loss.shape()));
    }
    if (propagated_) fail(ErrorKind::kContract, "tape has already been propagated");
    propagated_ = true;
    grad(loss.id())[0] = T{1};
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      Node& node = nodes_[id];
      if (!node.backward || node.grad.empty()) continue;
      ++visits_;
      node.backward(*this, std::span<const T>(node.grad));
    }
  }

  /// Add collected leaf gradients into the watched parameters' grad buffers.
  void flush_leaf_grads() {
    for (Node& node : nodes_) {
      if (node.sink == nullptr || node.grad.empty()) continue;
      std::span<T> dst = node.sink->grad();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += node.grad[i];
    }
  }

 private:
  struct Node {
    const Tensor<T>* external = nullptr;
    Tensor<T>* sink = nullptr;
    Tensor<T> owned;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    std::vector<T> grad;
    bool needs_grad = false;
  };

  std::deque<Node> nodes_;
  bool propagated_ = false;
  std::size_t visits_ = 0;
};

/// Propagate from `loss` and deposit gradients into every watched parameter
/// that requires them.
template <typename T>
void backward(const Var<T>& loss) {
  loss.tape().propagate(loss);
  loss.tape().flush_leaf_grads();
}

}  // namespace duadeep
