#include "hseg/autodiff.hpp"

#include <Eigen/Core>

#include <cmath>

namespace hseg::ad {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
T sign(T v) {
  return static_cast<T>((v > T{0}) - (v < T{0}));
}

void require_rank3(const Shape& s, const char* what) {
  if (s.size() != 3) {
    throw DomainError(std::string(what) + ": expected a (C,H,W) tensor, got " +
                      shape_string(s));
  }
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw DomainError(std::string(what) + ": shape mismatch " + shape_string(a) +
                      " vs " + shape_string(b));
  }
}

bool is_pointwise_conv(const ConvGeometry& g) {
  return g.kernel == 1 && g.stride == 1 && g.padding == 0;
}

// Unfolds input patches into a (C_in*k*k) x (H_out*W_out) matrix.
template <typename T>
void im2col(const T* input, const ConvGeometry& g, T* col) {
  const std::size_t k = g.kernel;
  const std::size_t plane = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    const T* src = input + c * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* dst = col + ((c * k + ky) * k + kx) * plane;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy) * g.stride - g.padding +
                          static_cast<long>(ky);
          T* row = dst + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) {
            std::fill(row, row + g.out_w, T{0});
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(iy) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox) * g.stride - g.padding +
                            static_cast<long>(kx);
            row[ox] = (ix < 0 || ix >= static_cast<long>(g.in_w))
                          ? T{0}
                          : srow[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column gradients back into the input layout.
template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* input_grad) {
  const std::size_t k = g.kernel;
  const std::size_t plane = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    T* dst = input_grad + c * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* src = col + ((c * k + ky) * k + kx) * plane;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy) * g.stride - g.padding +
                          static_cast<long>(ky);
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
          T* drow = dst + static_cast<std::size_t>(iy) * g.in_w;
          const T* row = src + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox) * g.stride - g.padding +
                            static_cast<long>(kx);
            if (ix < 0 || ix >= static_cast<long>(g.in_w)) continue;
            drow[static_cast<std::size_t>(ix)] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

template <typename T>
Var Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, const std::vector<Var>& parents,
                    BackwardFn fn) {
#ifndef NDEBUG
  for (T v : value.data()) {
    if (!std::isfinite(static_cast<double>(v))) {
      throw DomainError("non-finite value produced in forward pass");
    }
  }
#endif
  Node node;
  node.value = std::move(value);
  for (Var p : parents) node.requires_grad |= nodes_.at(p.id).requires_grad;
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <typename T>
Tensor<T>& Tape<T>::grad_buffer(Var v) {
  Node& node = nodes_.at(v.id);
  if (!node.has_grad) {
    node.grad = Tensor<T>(node.value.shape(), T{0});
    node.has_grad = true;
  }
  return node.grad;
}

template <typename T>
Tensor<T> Tape<T>::grad(Var v) const {
  const Node& node = nodes_.at(v.id);
  if (node.has_grad) return node.grad;
  return Tensor<T>(node.value.shape(), T{0});
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (nodes_.at(loss.id).value.size() != 1) {
    throw DomainError("backward() needs a scalar loss, got shape " +
                      shape_string(nodes_[loss.id].value.shape()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor<T>();
  }
  grad_buffer(loss).fill(T{1});
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

// ---------------------------------------------------------------------------
// Convolution

ConvGeometry conv_geometry(const Shape& input, const Shape& weights, int stride,
                           int padding) {
  require_rank3(input, "conv2d input");
  if (weights.size() != 4) {
    throw DomainError("conv2d weights must be (C_out, C_in, k, k), got " +
                      shape_string(weights));
  }
  if (weights[1] != input[0]) {
    throw DomainError("conv2d: weight input channels " + std::to_string(weights[1]) +
                      " do not match input channels " + std::to_string(input[0]));
  }
  if (weights[2] != weights[3] || weights[2] % 2 == 0) {
    throw DomainError("conv2d: kernel must be square with odd size");
  }
  if (stride < 1) throw DomainError("conv2d: stride must be >= 1");
  const long k = static_cast<long>(weights[2]);
  if (padding < 0) padding = static_cast<int>(k / 2);
  const long oh = (static_cast<long>(input[1]) + 2 * padding - k) / stride + 1;
  const long ow = (static_cast<long>(input[2]) + 2 * padding - k) / stride + 1;
  if (oh <= 0 || ow <= 0) throw DomainError("conv2d: input smaller than kernel");
  return {input[0],
          input[1],
          input[2],
          weights[0],
          static_cast<std::size_t>(oh),
          static_cast<std::size_t>(ow),
          weights[2],
          stride,
          padding};
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights,
                         const Tensor<T>& bias, int stride, int padding) {
  const ConvGeometry g = conv_geometry(input.shape(), weights.shape(), stride, padding);
  if (bias.rank() != 1 || bias.extent(0) != g.out_channels) {
    throw DomainError("conv2d: bias must have C_out entries");
  }
  const std::size_t rows = g.in_channels * g.kernel * g.kernel;
  const std::size_t plane = g.out_h * g.out_w;
  Tensor<T> out(Shape{g.out_channels, g.out_h, g.out_w});
  MatMap<T> o(out.raw(), g.out_channels, plane);
  ConstMatMap<T> w(weights.raw(), g.out_channels, rows);
  if (is_pointwise_conv(g)) {
    o.noalias() = w * ConstMatMap<T>(input.raw(), rows, plane);
  } else {
    AlignedVector<T> col(rows * plane);
    im2col(input.raw(), g, col.data());
    o.noalias() = w * ConstMatMap<T>(col.data(), rows, plane);
  }
  for (std::size_t c = 0; c < g.out_channels; ++c) o.row(c).array() += bias[c];
  return out;
}

template <typename T>
Var conv2d(Tape<T>& tape, Var input, Var weights, Var bias, int stride, int padding) {
  const Tensor<T>& x = tape.value(input);
  const Tensor<T>& w = tape.value(weights);
  const ConvGeometry g = conv_geometry(x.shape(), w.shape(), stride, padding);
  Tensor<T> out = conv2d_forward(x, w, tape.value(bias), stride, g.padding);
  return tape.record(
      std::move(out), {input, weights, bias},
      [input, weights, bias, g](Tape<T>& t, const Tensor<T>& og) {
        const std::size_t rows = g.in_channels * g.kernel * g.kernel;
        const std::size_t plane = g.out_h * g.out_w;
        ConstMatMap<T> dout(og.raw(), g.out_channels, plane);
        const bool pointwise = is_pointwise_conv(g);
        AlignedVector<T> col;
        const T* col_ptr = t.value(input).raw();
        if (!pointwise) {
          col.resize(rows * plane);
          im2col(t.value(input).raw(), g, col.data());
          col_ptr = col.data();
        }
        if (t.requires_grad(weights)) {
          MatMap<T> dw(t.grad_buffer(weights).raw(), g.out_channels, rows);
          dw.noalias() += dout * ConstMatMap<T>(col_ptr, rows, plane).transpose();
        }
        if (t.requires_grad(bias)) {
          Tensor<T>& db = t.grad_buffer(bias);
          // Fixed summation order: Eigen's vectorized reductions depend on pointer alignment.
          for (std::size_t c = 0; c < g.out_channels; ++c) {
            const T* row = og.raw() + c * plane;
            T acc{0};
            for (std::size_t i = 0; i < plane; ++i) acc += row[i];
            db[c] += acc;
          }
        }
        if (t.requires_grad(input)) {
          ConstMatMap<T> w(t.value(weights).raw(), g.out_channels, rows);
          Tensor<T>& dx = t.grad_buffer(input);
          if (pointwise) {
            MatMap<T>(dx.raw(), rows, plane).noalias() += w.transpose() * dout;
          } else {
            AlignedVector<T> dcol(rows * plane);
            MatMap<T>(dcol.data(), rows, plane).noalias() = w.transpose() * dout;
            col2im(dcol.data(), g, dx.raw());
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Pointwise and structural ops

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  Tensor<T> out = tape.value(x);
  for (T& v : out.data()) v = v > T{0} ? v : T{0};
  return tape.record(std::move(out), {x}, [x](Tape<T>& t, const Tensor<T>& og) {
    const Tensor<T>& in = t.value(x);
    Tensor<T>& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < og.size(); ++i) {
      if (in[i] > T{0}) dx[i] += og[i];
    }
  });
}

template <typename T>
Var sigmoid(Tape<T>& tape, Var x) {
  Tensor<T> out = tape.value(x);
  for (T& v : out.data()) v = T{1} / (T{1} + std::exp(-v));
  const Var y{tape.size()};
  return tape.record(std::move(out), {x}, [x, y](Tape<T>& t, const Tensor<T>& og) {
    const Tensor<T>& s = t.value(y);
    Tensor<T>& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < og.size(); ++i) dx[i] += og[i] * s[i] * (T{1} - s[i]);
  });
}

template <typename T>
Var concat(Tape<T>& tape, std::span<const Var> parts) {
  if (parts.empty()) throw DomainError("concat of zero tensors");
  const Shape& first = tape.value(parts[0]).shape();
  require_rank3(first, "concat");
  std::size_t channels = 0;
  for (Var p : parts) {
    const Shape& s = tape.value(p).shape();
    require_rank3(s, "concat");
    if (s[1] != first[1] || s[2] != first[2]) {
      throw DomainError("concat: spatial extents differ: " + shape_string(s) + " vs " +
                        shape_string(first));
    }
    channels += s[0];
  }
  Tensor<T> out(Shape{channels, first[1], first[2]});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor<T>& v = tape.value(p);
    std::copy(v.data().begin(), v.data().end(), out.data().begin() + offset);
    offset += v.size();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  Var result = tape.record(std::move(out), saved, [saved](Tape<T>& t, const Tensor<T>& og) {
    std::size_t off = 0;
    for (Var p : saved) {
      const std::size_t n = t.value(p).size();
      if (t.requires_grad(p)) {
        Tensor<T>& dp = t.grad_buffer(p);
        for (std::size_t i = 0; i < n; ++i) dp[i] += og[off + i];
      }
      off += n;
    }
  });
  return result;
}

template <typename T>
Var slice_channels(Tape<T>& tape, Var x, std::size_t begin, std::size_t end) {
  const Tensor<T>& in = tape.value(x);
  require_rank3(in.shape(), "slice_channels");
  if (begin >= end || end > in.extent(0)) {
    throw DomainError("slice_channels: invalid channel range");
  }
  const std::size_t plane = in.extent(1) * in.extent(2);
  Tensor<T> out(Shape{end - begin, in.extent(1), in.extent(2)});
  std::copy(in.data().begin() + begin * plane, in.data().begin() + end * plane,
            out.data().begin());
  return tape.record(std::move(out), {x},
                     [x, begin, plane](Tape<T>& t, const Tensor<T>& og) {
                       Tensor<T>& dx = t.grad_buffer(x);
                       for (std::size_t i = 0; i < og.size(); ++i) {
                         dx[begin * plane + i] += og[i];
                       }
                     });
}

template <typename T>
Var maxpool2x2(Tape<T>& tape, Var x) {
  const Tensor<T>& in = tape.value(x);
  require_rank3(in.shape(), "maxpool2x2");
  const std::size_t c = in.extent(0), h = in.extent(1) / 2, w = in.extent(2) / 2;
  if (h == 0 || w == 0) throw DomainError("maxpool2x2: input smaller than 2x2");
  Tensor<T> out(Shape{c, h, w});
  std::vector<std::uint32_t> argmax(out.size());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t xx = 0; xx < w; ++xx) {
        std::size_t best = (ch * in.extent(1) + 2 * y) * in.extent(2) + 2 * xx;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx =
                (ch * in.extent(1) + 2 * y + dy) * in.extent(2) + 2 * xx + dx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (ch * h + y) * w + xx;
        out[o] = in[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return tape.record(std::move(out), {x},
                     [x, argmax = std::move(argmax)](Tape<T>& t, const Tensor<T>& og) {
                       Tensor<T>& dx = t.grad_buffer(x);
                       for (std::size_t i = 0; i < og.size(); ++i) dx[argmax[i]] += og[i];
                     });
}

template <typename T>
Var upsample2x(Tape<T>& tape, Var x) {
  const Tensor<T>& in = tape.value(x);
  require_rank3(in.shape(), "upsample2x");
  const std::size_t c = in.extent(0), h = in.extent(1), w = in.extent(2);
  Tensor<T> out(Shape{c, 2 * h, 2 * w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < 2 * h; ++y) {
      for (std::size_t xx = 0; xx < 2 * w; ++xx) {
        out.at(ch, y, xx) = in.at(ch, y / 2, xx / 2);
      }
    }
  }
  return tape.record(std::move(out), {x}, [x, c, h, w](Tape<T>& t, const Tensor<T>& og) {
    Tensor<T>& dx = t.grad_buffer(x);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < 2 * h; ++y) {
        for (std::size_t xx = 0; xx < 2 * w; ++xx) {
          dx.at(ch, y / 2, xx / 2) += og.at(ch, y, xx);
        }
      }
    }
  });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  require_same_shape(tape.value(a).shape(), tape.value(b).shape(), "add");
  Tensor<T> out = tape.value(a);
  const Tensor<T>& vb = tape.value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Tensor<T>& og) {
    for (Var p : {a, b}) {
      if (!t.requires_grad(p)) continue;
      Tensor<T>& dp = t.grad_buffer(p);
      for (std::size_t i = 0; i < og.size(); ++i) dp[i] += og[i];
    }
  });
}

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor) {
  Tensor<T> out = tape.value(x);
  for (T& v : out.data()) v *= factor;
  return tape.record(std::move(out), {x}, [x, factor](Tape<T>& t, const Tensor<T>& og) {
    Tensor<T>& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < og.size(); ++i) dx[i] += factor * og[i];
  });
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
  double total = 0.0;
  for (T v : tape.value(x).data()) total += v;
  return tape.record(Tensor<T>::scalar(static_cast<T>(total)), {x},
                     [x](Tape<T>& t, const Tensor<T>& og) {
                       Tensor<T>& dx = t.grad_buffer(x);
                       const T g = og[0];
                       for (T& v : dx.data()) v += g;
                     });
}

// ---------------------------------------------------------------------------
// Losses

template <typename T>
Var l1_loss(Tape<T>& tape, Var pred, Var target, const Tensor<T>& mask) {
  const Tensor<T>& p = tape.value(pred);
  const Tensor<T>& q = tape.value(target);
  require_same_shape(p.shape(), q.shape(), "l1_loss");
  require_rank3(p.shape(), "l1_loss");
  const std::size_t channels = p.extent(0);
  const std::size_t plane = p.extent(1) * p.extent(2);
  if (mask.size() != plane) {
    throw DomainError("l1_loss: mask shape " + shape_string(mask.shape()) +
                      " does not match prediction plane");
  }
  double count = 0.0;
  for (T m : mask.data()) count += m;
  if (count <= 0.0) throw DomainError("l1_loss: mask selects no pixels");

  double total = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (mask[i] != T{0}) {
        total += mask[i] * std::abs(static_cast<double>(p[c * plane + i]) -
                                    static_cast<double>(q[c * plane + i]));
      }
    }
  }
  const T inv = static_cast<T>(1.0 / count);
  return tape.record(
      Tensor<T>::scalar(static_cast<T>(total / count)), {pred, target},
      [pred, target, mask, inv, channels, plane](Tape<T>& t, const Tensor<T>& og) {
        const Tensor<T>& pv = t.value(pred);
        const Tensor<T>& tv = t.value(target);
        const T g = og[0] * inv;
        Tensor<T>* dp = t.requires_grad(pred) ? &t.grad_buffer(pred) : nullptr;
        Tensor<T>* dt = t.requires_grad(target) ? &t.grad_buffer(target) : nullptr;
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t i = 0; i < plane; ++i) {
            if (mask[i] == T{0}) continue;
            const std::size_t k = c * plane + i;
            const T d = g * mask[i] * sign(pv[k] - tv[k]);
            if (dp) (*dp)[k] += d;
            if (dt) (*dt)[k] -= d;
          }
        }
      });
}

template <typename T>
Var bce_loss(Tape<T>& tape, Var logits, const Tensor<T>& target) {
  const Tensor<T>& z = tape.value(logits);
  require_same_shape(z.shape(), target.shape(), "bce_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    total += std::max(zi, 0.0) - zi * target[i] + std::log1p(std::exp(-std::abs(zi)));
  }
  const double n = static_cast<double>(z.size());
  return tape.record(Tensor<T>::scalar(static_cast<T>(total / n)), {logits},
                     [logits, target, n](Tape<T>& t, const Tensor<T>& og) {
                       const Tensor<T>& zv = t.value(logits);
                       Tensor<T>& dz = t.grad_buffer(logits);
                       const T g = static_cast<T>(og[0] / n);
                       for (std::size_t i = 0; i < zv.size(); ++i) {
                         const T s = T{1} / (T{1} + std::exp(-zv[i]));
                         dz[i] += g * (s - target[i]);
                       }
                     });
}

// ---------------------------------------------------------------------------
// Adam

template <typename T>
void adam_step(std::span<Tensor<T>> params, std::span<const Tensor<T>> grads,
               AdamState<T>& state, const AdamOptions& options) {
  if (params.size() != grads.size()) {
    throw DomainError("adam_step: parameter and gradient counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i].shape(), grads[i].shape(), "adam_step");
  }
  if (state.m.empty() && state.v.empty()) {
    for (const Tensor<T>& p : params) {
      state.m.emplace_back(p.shape(), T{0});
      state.v.emplace_back(p.shape(), T{0});
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DomainError("adam_step: optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i].shape(), state.m[i].shape(), "adam_step state");
  }

  ++state.step;
  const double b1 = options.beta1, b2 = options.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = params[i];
    const Tensor<T>& g = grads[i];
    Tensor<T>& m = state.m[i];
    Tensor<T>& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k];
      const double mk = b1 * m[k] + (1.0 - b1) * gk;
      const double vk = b2 * v[k] + (1.0 - b2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double mhat = mk / bc1;
      const double vhat = vk / bc2;
      p[k] = static_cast<T>(p[k] - options.learning_rate * mhat /
                                       (std::sqrt(vhat) + options.eps));
    }
  }
}

#define HSEG_INSTANTIATE_AD(T)                                                      \
  template class Tape<T>;                                                           \
  template Tensor<T> conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&,          \
                                       const Tensor<T>&, int, int);                 \
  template Var conv2d<T>(Tape<T>&, Var, Var, Var, int, int);                        \
  template Var relu<T>(Tape<T>&, Var);                                              \
  template Var sigmoid<T>(Tape<T>&, Var);                                           \
  template Var concat<T>(Tape<T>&, std::span<const Var>);                           \
  template Var slice_channels<T>(Tape<T>&, Var, std::size_t, std::size_t);          \
  template Var maxpool2x2<T>(Tape<T>&, Var);                                        \
  template Var upsample2x<T>(Tape<T>&, Var);                                        \
  template Var add<T>(Tape<T>&, Var, Var);                                          \
  template Var scale<T>(Tape<T>&, Var, T);                                          \
  template Var sum<T>(Tape<T>&, Var);                                               \
  template Var l1_loss<T>(Tape<T>&, Var, Var, const Tensor<T>&);                    \
  template Var bce_loss<T>(Tape<T>&, Var, const Tensor<T>&);                        \
  template void adam_step<T>(std::span<Tensor<T>>, std::span<const Tensor<T>>,     \
                             AdamState<T>&, const AdamOptions&);

HSEG_INSTANTIATE_AD(float)
HSEG_INSTANTIATE_AD(double)

#undef HSEG_INSTANTIATE_AD

}  // namespace hseg::ad
