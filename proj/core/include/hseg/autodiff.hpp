#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "hseg/tensor.hpp"

// Reverse-mode differentiation over (C, H, W) feature maps. One Tape records
// one forward pass; ops append nodes in evaluation order and backward()
// replays them in reverse.
namespace hseg::ad {

struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;

  bool valid() const { return id != kNone; }
};

template <typename T>
class Tape {
 public:
  // Receives the node's output gradient; writes into parents' gradients.
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& out_grad)>;

  Var leaf(Tensor<T> value, bool requires_grad = true);
  Var constant(Tensor<T> value) { return leaf(std::move(value), false); }

  const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  // Gradient of the last backward() root w.r.t. v; zeros if v was not reached.
  Tensor<T> grad(Var v) const;

  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  Var record(Tensor<T> value, const std::vector<Var>& parents, BackwardFn fn);
  Tensor<T>& grad_buffer(Var v);

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Plain forward kernels, also used by the differentiable ops.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights,
                         const Tensor<T>& bias, int stride, int padding);

struct ConvGeometry {
  std::size_t in_channels, in_h, in_w;
  std::size_t out_channels, out_h, out_w;
  std::size_t kernel;
  int stride, padding;
};

ConvGeometry conv_geometry(const Shape& input, const Shape& weights, int stride,
                           int padding);

// Differentiable ops. Feature maps are rank-3 (C, H, W).
template <typename T>
Var conv2d(Tape<T>& tape, Var input, Var weights, Var bias, int stride = 1,
           int padding = -1);  // padding -1 means k/2
template <typename T>
Var relu(Tape<T>& tape, Var x);
template <typename T>
Var sigmoid(Tape<T>& tape, Var x);
template <typename T>
Var concat(Tape<T>& tape, std::span<const Var> parts);
template <typename T>
Var slice_channels(Tape<T>& tape, Var x, std::size_t begin, std::size_t end);
template <typename T>
Var maxpool2x2(Tape<T>& tape, Var x);
template <typename T>
Var upsample2x(Tape<T>& tape, Var x);
template <typename T>
Var add(Tape<T>& tape, Var a, Var b);
template <typename T>
Var scale(Tape<T>& tape, Var x, T factor);
template <typename T>
Var sum(Tape<T>& tape, Var x);

// Mean over masked pixels of the per-pixel L1 norm across channels.
// mask is (H, W) or (1, H, W) with 0/1 entries; an all-zero mask is an error.
template <typename T>
Var l1_loss(Tape<T>& tape, Var pred, Var target, const Tensor<T>& mask);

// Mean binary cross-entropy of logits against 0/1 targets of the same shape.
template <typename T>
Var bce_loss(Tape<T>& tape, Var logits, const Tensor<T>& target);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::int64_t step = 0;
};

// Bias-corrected Adam update applied in place. Empty state is initialized
// to zeros on first use.
template <typename T>
void adam_step(std::span<Tensor<T>> params, std::span<const Tensor<T>> grads,
               AdamState<T>& state, const AdamOptions& options);

}  // namespace hseg::ad
