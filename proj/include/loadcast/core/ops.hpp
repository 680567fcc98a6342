#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "loadcast/core/autodiff.hpp"
#include "loadcast/core/gemm.hpp"
#include "loadcast/core/tensor.hpp"

// Differentiable primitives. Each op computes its value eagerly and, when an
// input requires grad, records a closure that maps the output gradient onto
// the inputs. Composite layers are built from these.

namespace loadcast {

namespace detail {

inline void accumulate(Node& node, const Tensor& delta) {
  auto& g = node.grad_buffer();
  auto dst = g.data();
  auto src = delta.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

inline Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

// [outer, dim, inner] view of a shape around `axis`.
struct AxisView {
  std::size_t outer = 1;
  std::size_t dim = 1;
  std::size_t inner = 1;
};

inline AxisView axis_view(const Shape& s, std::size_t axis) {
  if (axis >= s.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + to_string(s));
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.dim = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

inline Shape strip_leading_ones(const Shape& s) {
  std::size_t i = 0;
  while (i + 1 < s.size() && s[i] == 1) ++i;
  return Shape(s.begin() + static_cast<std::ptrdiff_t>(i), s.end());
}

// Leading-dimension broadcast: the smaller operand must equal a trailing block
// of the larger one once its leading unit extents are dropped. It is then
// repeated `outer` times.
struct BroadcastPlan {
  Shape out;
  std::size_t outer = 1;  // repetitions of the small operand
  int small = 0;          // 0: none, 1: a is small, 2: b is small
};

inline bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

inline BroadcastPlan broadcast_plan(const Shape& a, const Shape& b, std::string_view op) {
  BroadcastPlan plan;
  if (a == b) {
    plan.out = a;
    return plan;
  }
  const Shape sa = strip_leading_ones(a);
  const Shape sb = strip_leading_ones(b);
  if (sa == sb) {
    plan.out = a.size() >= b.size() ? a : b;
    return plan;
  }
  if (numel(a) < numel(b) && is_suffix(sa, b)) {
    plan.out = b;
    plan.small = 1;
    plan.outer = numel(b) / numel(a);
    return plan;
  }
  if (numel(b) < numel(a) && is_suffix(sb, a)) {
    plan.out = a;
    plan.small = 2;
    plan.outer = numel(a) / numel(b);
    return plan;
  }
  throw ShapeError(std::string(op) + ": shapes " + to_string(a) + " and " + to_string(b) +
                   " are not broadcast-compatible");
}

// Sum `full` (size outer*inner) down to the inner block.
inline Tensor reduce_outer(const Tensor& full, const Shape& small_shape, std::size_t outer) {
  Tensor out(small_shape, 0.0);
  const std::size_t inner = out.size();
  for (std::size_t o = 0; o < outer; ++o) {
    const double* src = full.raw() + o * inner;
    for (std::size_t i = 0; i < inner; ++i) out[i] += src[i];
  }
  return out;
}

// Elementwise binary op with broadcasting. `da(x, y, g)` / `db(x, y, g)` give
// the per-element contribution to each input gradient.
template <typename F, typename DA, typename DB>
Variable binary(std::string_view kind, const Variable& a, const Variable& b, F f, DA da, DB db) {
  const BroadcastPlan plan = broadcast_plan(a.shape(), b.shape(), kind);
  const std::size_t n = numel(plan.out);
  const std::size_t outer = plan.outer, inner = n / outer;
  const bool a_small = plan.small == 1, b_small = plan.small == 2;
  Tensor out(plan.out);
  const double* x = a.value().raw();
  const double* y = b.value().raw();
  for (std::size_t o = 0; o < outer; ++o) {
    const double* xo = a_small ? x : x + o * inner;
    const double* yo = b_small ? y : y + o * inner;
    double* z = out.raw() + o * inner;
    for (std::size_t i = 0; i < inner; ++i) z[i] = f(xo[i], yo[i]);
  }

  return Variable::make_result(kind, std::move(out), {a, b}, [=](Node& self) {
    Node& na = input(self, 0);
    Node& nb = input(self, 1);
    const double* g = self.grad.raw();
    const double* x = na.value.raw();
    const double* y = nb.value.raw();
    // The broadcast operand's contributions are summed over repetitions
    // first, then added to its gradient.
    auto flow = [&](Node& target, bool small, auto d) {
      Tensor summed;
      double* dst = target.grad_buffer().raw();
      if (small) {
        summed = Tensor(target.value.shape(), 0.0);
        dst = summed.raw();
      }
      for (std::size_t o = 0; o < outer; ++o) {
        const double* xo = a_small ? x : x + o * inner;
        const double* yo = b_small ? y : y + o * inner;
        const double* go = g + o * inner;
        double* to = small ? dst : dst + o * inner;
        for (std::size_t i = 0; i < inner; ++i) to[i] += d(xo[i], yo[i], go[i]);
      }
      if (small) accumulate(target, summed);
    };
    if (na.requires_grad) flow(na, a_small, da);
    if (nb.requires_grad) flow(nb, b_small, db);
  });
}

// Elementwise unary op; `d(x, y, g)` receives input, output and upstream grad.
template <typename F, typename D>
Variable unary(std::string_view kind, const Variable& a, F f, D d) {
  Tensor out(a.shape());
  const double* x = a.value().raw();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  Tensor saved = out;
  return Variable::make_result(kind, std::move(out), {a}, [d, saved = std::move(saved)](Node& self) {
    Node& na = input(self, 0);
    Tensor delta(na.value.shape());
    const double* x = na.value.raw();
    const double* g = self.grad.raw();
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = d(x[i], saved[i], g[i]);
    accumulate(na, delta);
  });
}

}  // namespace detail

inline Variable add(const Variable& a, const Variable& b) {
  return detail::binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double, double g) { return g; },
      [](double, double, double g) { return g; });
}

inline Variable sub(const Variable& a, const Variable& b) {
  return detail::binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double, double g) { return g; },
      [](double, double, double g) { return -g; });
}

inline Variable mul(const Variable& a, const Variable& b) {
  return detail::binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y, double g) { return g * y; },
      [](double x, double, double g) { return g * x; });
}

inline Variable scale(const Variable& a, double s) {
  return detail::unary(
      "scale", a, [s](double x) { return s * x; }, [s](double, double, double g) { return s * g; });
}

inline Variable identity(const Variable& a) {
  return detail::unary(
      "identity", a, [](double x) { return x; }, [](double, double, double g) { return g; });
}

inline Variable relu(const Variable& a) {
  return detail::unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double, double g) { return x > 0.0 ? g : 0.0; });
}

inline double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double tanh_scalar(double x) {
  const double e = std::expm1(-2.0 * std::fabs(x));
  return std::copysign(-e / (e + 2.0), x);
}

inline Variable sigmoid(const Variable& a) {
  return detail::unary(
      "sigmoid", a, [](double x) { return sigmoid_scalar(x); },
      [](double, double y, double g) { return g * y * (1.0 - y); });
}

inline Variable tanh(const Variable& a) {
  return detail::unary(
      "tanh", a, [](double x) { return tanh_scalar(x); },
      [](double, double y, double g) { return g * (1.0 - y * y); });
}

/// 2-D matrix product [M x K] * [K x N].
inline Variable matmul(const Variable& a, const Variable& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + to_string(a.shape()) + " and " + to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  kernels::gemm(m, n, k, a.value().raw(), k, b.value().raw(), n, out.raw(), n);
  return Variable::make_result("matmul", std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    auto& na = detail::input(self, 0);
    auto& nb = detail::input(self, 1);
    if (na.requires_grad) {
      kernels::gemm_nt(m, k, n, self.grad.raw(), nb.value.raw(), na.grad_buffer().raw(), true);
    }
    if (nb.requires_grad) {
      kernels::gemm_tn(k, n, m, na.value.raw(), self.grad.raw(), nb.grad_buffer().raw(), true);
    }
  });
}

/// Softmax over the last axis.
inline Variable softmax(const Variable& a) {
  const std::size_t cols = a.shape().back();
  const std::size_t rows = a.size() / cols;
  Tensor out(a.shape());
  const double* x = a.value().raw();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    double* yr = out.raw() + r * cols;
    const double mx = *std::max_element(xr, xr + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += (yr[c] = std::exp(xr[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= total;
  }
  Tensor saved = out;
  return Variable::make_result("softmax", std::move(out), {a},
                               [rows, cols, saved = std::move(saved)](detail::Node& self) {
                                 Tensor delta(saved.shape());
                                 for (std::size_t r = 0; r < rows; ++r) {
                                   const double* y = saved.raw() + r * cols;
                                   const double* g = self.grad.raw() + r * cols;
                                   double dot = 0.0;
                                   for (std::size_t c = 0; c < cols; ++c) dot += g[c] * y[c];
                                   for (std::size_t c = 0; c < cols; ++c) delta[r * cols + c] = y[c] * (g[c] - dot);
                                 }
                                 detail::accumulate(detail::input(self, 0), delta);
                               });
}

inline Variable sum(const Variable& a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return Variable::make_result("sum", Tensor::scalar(total), {a}, [](detail::Node& self) {
    auto& na = detail::input(self, 0);
    detail::accumulate(na, Tensor(na.value.shape(), self.grad[0]));
  });
}

inline Variable mean(const Variable& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

/// Mean over one axis; the axis is removed from the result.
inline Variable mean_axis(const Variable& a, std::size_t axis) {
  const auto v = detail::axis_view(a.shape(), axis);
  Shape shape = a.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (shape.empty()) shape = {1};
  Tensor out(shape, 0.0);
  const double* x = a.value().raw();
  const double inv = 1.0 / static_cast<double>(v.dim);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t d = 0; d < v.dim; ++d) {
      for (std::size_t i = 0; i < v.inner; ++i) out[o * v.inner + i] += x[(o * v.dim + d) * v.inner + i];
    }
  }
  for (auto& y : out.data()) y *= inv;
  return Variable::make_result("mean_axis", std::move(out), {a}, [v, inv](detail::Node& self) {
    auto& na = detail::input(self, 0);
    Tensor delta(na.value.shape());
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t d = 0; d < v.dim; ++d) {
        for (std::size_t i = 0; i < v.inner; ++i) delta[(o * v.dim + d) * v.inner + i] = self.grad[o * v.inner + i] * inv;
      }
    }
    detail::accumulate(na, delta);
  });
}

inline Variable reshape(const Variable& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return Variable::make_result("reshape", std::move(out), {a}, [](detail::Node& self) {
    auto& na = detail::input(self, 0);
    detail::accumulate(na, self.grad.reshaped(na.value.shape()));
  });
}

/// Concatenates along `axis`; all other extents must agree.
inline Variable concat(const std::vector<Variable>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& ref = parts.front().shape();
  Shape out_shape = ref;
  out_shape.at(axis) = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != ref.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != ref[i]) {
        throw ShapeError("concat: " + to_string(s) + " vs " + to_string(ref) + " on axis " + std::to_string(axis));
      }
    }
    out_shape[axis] += s[axis];
  }
  const auto ov = detail::axis_view(out_shape, axis);
  Tensor out(out_shape);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const auto pv = detail::axis_view(p.shape(), axis);
    const std::size_t chunk = pv.dim * pv.inner;
    for (std::size_t o = 0; o < ov.outer; ++o) {
      std::copy_n(p.value().raw() + o * chunk, chunk, out.raw() + (o * ov.dim + offset) * ov.inner);
    }
    offset += pv.dim;
  }
  return Variable::make_result("concat", std::move(out), parts, [axis, ov, offsets](detail::Node& self) {
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      auto& nk = detail::input(self, k);
      if (!nk.requires_grad) continue;
      const auto pv = detail::axis_view(nk.value.shape(), axis);
      const std::size_t chunk = pv.dim * pv.inner;
      Tensor delta(nk.value.shape());
      for (std::size_t o = 0; o < ov.outer; ++o) {
        std::copy_n(self.grad.raw() + (o * ov.dim + offsets[k]) * ov.inner, chunk, delta.raw() + o * chunk);
      }
      detail::accumulate(nk, delta);
    }
  });
}

/// Half-open range [begin, end) along `axis`.
inline Variable slice(const Variable& a, std::size_t axis, std::size_t begin, std::size_t end) {
  const auto v = detail::axis_view(a.shape(), axis);
  if (begin >= end || end > v.dim) {
    throw ShapeError("slice [" + std::to_string(begin) + "," + std::to_string(end) + ") out of range for " +
                     to_string(a.shape()));
  }
  Shape shape = a.shape();
  shape[axis] = end - begin;
  const std::size_t chunk = (end - begin) * v.inner;
  Tensor out(shape);
  for (std::size_t o = 0; o < v.outer; ++o) {
    std::copy_n(a.value().raw() + (o * v.dim + begin) * v.inner, chunk, out.raw() + o * chunk);
  }
  return Variable::make_result("slice", std::move(out), {a}, [v, begin, chunk](detail::Node& self) {
    auto& na = detail::input(self, 0);
    double* g = na.grad_buffer().raw();
    for (std::size_t o = 0; o < v.outer; ++o) {
      const double* src = self.grad.raw() + o * chunk;
      double* dst = g + (o * v.dim + begin) * v.inner;
      for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
    }
  });
}

/// Picks one index along `axis` and drops that axis.
inline Variable select(const Variable& a, std::size_t axis, std::size_t index) {
  Shape shape = a.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (shape.empty()) shape = {1};
  return reshape(slice(a, axis, index, index + 1), std::move(shape));
}

/// Stacks equally shaped tensors along a new axis.
inline Variable stack(const std::vector<Variable>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("stack of zero tensors");
  std::vector<Variable> expanded;
  expanded.reserve(parts.size());
  for (const auto& p : parts) {
    if (p.shape() != parts.front().shape()) throw ShapeError("stack: shapes differ");
    Shape s = p.shape();
    s.insert(s.begin() + static_cast<std::ptrdiff_t>(axis), 1);
    expanded.push_back(reshape(p, std::move(s)));
  }
  return concat(expanded, axis);
}

/// Swaps the last two axes: [..., a, b] -> [..., b, a].
inline Variable transpose_last2(const Variable& a) {
  const Shape& s = a.shape();
  if (s.size() < 2) throw ShapeError("transpose_last2 needs rank >= 2");
  const std::size_t rows = s[s.size() - 2], cols = s.back();
  const std::size_t batch = a.size() / (rows * cols);
  Shape shape = s;
  std::swap(shape[shape.size() - 1], shape[shape.size() - 2]);
  Tensor out(shape);
  for (std::size_t b = 0; b < batch; ++b) {
    kernels::transpose(rows, cols, a.value().raw() + b * rows * cols, out.raw() + b * rows * cols);
  }
  return Variable::make_result("transpose", std::move(out), {a}, [rows, cols, batch](detail::Node& self) {
    auto& na = detail::input(self, 0);
    Tensor delta(na.value.shape());
    for (std::size_t b = 0; b < batch; ++b) {
      kernels::transpose(cols, rows, self.grad.raw() + b * rows * cols, delta.raw() + b * rows * cols);
    }
    detail::accumulate(na, delta);
  });
}

/// (1/N) * sum (pred - target)^2 over all elements.
inline Variable mse_loss(const Variable& pred, const Variable& target) {
  if (pred.size() == 0) throw ShapeError("mse_loss on empty input");
  if (pred.size() != target.size()) {
    throw ShapeError("mse_loss: " + to_string(pred.shape()) + " vs " + to_string(target.shape()));
  }
  const std::size_t n = pred.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.value()[i] - target.value()[i];
    total += d * d;
  }
  return Variable::make_result("mse", Tensor::scalar(total / static_cast<double>(n)), {pred, target},
                               [n](detail::Node& self) {
                                 auto& np = detail::input(self, 0);
                                 auto& nt = detail::input(self, 1);
                                 const double k = 2.0 * self.grad[0] / static_cast<double>(n);
                                 Tensor dp(np.value.shape()), dt(nt.value.shape());
                                 for (std::size_t i = 0; i < n; ++i) {
                                   const double d = k * (np.value[i] - nt.value[i]);
                                   dp[i] = d;
                                   dt[i] = -d;
                                 }
                                 if (np.requires_grad) detail::accumulate(np, dp);
                                 if (nt.requires_grad) detail::accumulate(nt, dt);
                               });
}

enum class Padding { kSame, kValid };

/// Cross-correlation. x: [B x C_in x L] or [C_in x L]; weight: [C_out x C_in x K];
/// bias: [C_out]. Same padding puts (K-1)/2 zeros on the left.
inline Variable conv1d(const Variable& x, const Variable& weight, const Variable& bias, Padding padding) {
  const bool batched = x.shape().size() == 3;
  if (!batched && x.shape().size() != 2) throw ShapeError("conv1d: input must be [B,C,L] or [C,L]");
  if (weight.shape().size() != 3) throw ShapeError("conv1d: weight must be [C_out,C_in,K]");
  const std::size_t batch = batched ? x.dim(0) : 1;
  const std::size_t cin = x.shape()[batched ? 1 : 0];
  const std::size_t len = x.shape().back();
  const std::size_t cout = weight.dim(0), kw = weight.dim(2);
  if (weight.dim(1) != cin) {
    throw ShapeError("conv1d: input has " + std::to_string(cin) + " channels, kernel expects " +
                     std::to_string(weight.dim(1)));
  }
  if (bias.size() != cout) throw ShapeError("conv1d: bias length must equal C_out");
  if (padding == Padding::kValid && len < kw) {
    throw ShapeError("conv1d: length " + std::to_string(len) + " shorter than kernel " + std::to_string(kw));
  }
  const std::size_t pad = padding == Padding::kSame ? (kw - 1) / 2 : 0;
  const std::size_t lout = padding == Padding::kSame ? len : len - kw + 1;
  const std::size_t rows = cin * kw;       // im2col rows
  const std::size_t cols = batch * lout;   // im2col columns

  // cols[(c,k), (b,t)] = x[b, c, t + k - pad]
  Tensor im2col({rows, cols}, 0.0);
  const double* xv = x.value().raw();
  for (std::size_t c = 0; c < cin; ++c) {
    for (std::size_t k = 0; k < kw; ++k) {
      double* dst = im2col.raw() + (c * kw + k) * cols;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* src = xv + (b * cin + c) * len;
        for (std::size_t t = 0; t < lout; ++t) {
          const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(pad);
          if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(len)) dst[b * lout + t] = src[pos];
        }
      }
    }
  }
  Tensor flat({cout, cols});
  kernels::gemm(cout, cols, rows, weight.value().raw(), rows, im2col.raw(), cols, flat.raw(), cols);
  Shape out_shape = batched ? Shape{batch, cout, lout} : Shape{cout, lout};
  Tensor out(out_shape);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < cout; ++o) {
      const double bo = bias.value()[o];
      const double* src = flat.raw() + o * cols + b * lout;
      double* dst = out.raw() + (b * cout + o) * lout;
      for (std::size_t t = 0; t < lout; ++t) dst[t] = src[t] + bo;
    }
  }
  return Variable::make_result(
      "conv1d", std::move(out), {x, weight, bias},
      [=, im2col = std::move(im2col)](detail::Node& self) {
        Tensor g_flat({cout, cols});
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t o = 0; o < cout; ++o) {
            std::copy_n(self.grad.raw() + (b * cout + o) * lout, lout, g_flat.raw() + o * cols + b * lout);
          }
        }
        auto& nx = detail::input(self, 0);
        auto& nw = detail::input(self, 1);
        auto& nb = detail::input(self, 2);
        if (nw.requires_grad) {
          kernels::gemm_nt(cout, rows, cols, g_flat.raw(), im2col.raw(), nw.grad_buffer().raw(), true);
        }
        if (nb.requires_grad) {
          double* gb = nb.grad_buffer().raw();
          for (std::size_t o = 0; o < cout; ++o) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) acc += g_flat[o * cols + j];
            gb[o] += acc;
          }
        }
        if (nx.requires_grad) {
          Tensor g_cols({rows, cols});
          kernels::gemm_tn(rows, cols, cout, nw.value.raw(), g_flat.raw(), g_cols.raw());
          double* gx = nx.grad_buffer().raw();
          for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t k = 0; k < kw; ++k) {
              const double* src = g_cols.raw() + (c * kw + k) * cols;
              for (std::size_t b = 0; b < batch; ++b) {
                double* dst = gx + (b * cin + c) * len;
                for (std::size_t t = 0; t < lout; ++t) {
                  const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(pad);
                  if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(len)) dst[pos] += src[b * lout + t];
                }
              }
            }
          }
        }
      });
}

/// Windowed max over the last axis of [B x C x L] or [C x L]. The gradient
/// goes to the first maximal element of each window.
inline Variable maxpool1d(const Variable& x, std::size_t size = 2, std::size_t stride = 2) {
  if (x.shape().size() < 2) throw ShapeError("maxpool1d: input must be [B,C,L] or [C,L]");
  if (size == 0 || stride == 0) throw ShapeError("maxpool1d: size and stride must be positive");
  const std::size_t len = x.shape().back();
  if (len < size) {
    throw ShapeError("maxpool1d: length " + std::to_string(len) + " shorter than pool size " + std::to_string(size));
  }
  const std::size_t lout = (len - size) / stride + 1;
  const std::size_t rows = x.size() / len;
  Shape shape = x.shape();
  shape.back() = lout;
  Tensor out(shape);
  std::vector<std::size_t> argmax(rows * lout);
  const double* xv = x.value().raw();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < lout; ++t) {
      std::size_t best = r * len + t * stride;
      for (std::size_t k = 1; k < size; ++k) {
        const std::size_t idx = r * len + t * stride + k;
        if (xv[idx] > xv[best]) best = idx;
      }
      out[r * lout + t] = xv[best];
      argmax[r * lout + t] = best;
    }
  }
  return Variable::make_result("maxpool1d", std::move(out), {x}, [argmax = std::move(argmax)](detail::Node& self) {
    double* gx = detail::input(self, 0).grad_buffer().raw();
    for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += self.grad[i];
  });
}

/// Context vectors sum_m weights[b,m] * features[b,m,:] for features [B x M x F]
/// and weights [B x M].
inline Variable weighted_sum(const Variable& features, const Variable& weights) {
  if (features.shape().size() != 3 || weights.shape().size() != 2 || features.dim(0) != weights.dim(0) ||
      features.dim(1) != weights.dim(1)) {
    throw ShapeError("weighted_sum: features " + to_string(features.shape()) + " vs weights " +
                     to_string(weights.shape()));
  }
  const std::size_t batch = features.dim(0), m = features.dim(1), f = features.dim(2);
  Tensor out({batch, f}, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < m; ++i) {
      const double w = weights.value().at(b, i);
      for (std::size_t j = 0; j < f; ++j) out.at(b, j) += w * features.value().at(b, i, j);
    }
  }
  return Variable::make_result("weighted_sum", std::move(out), {features, weights},
                               [batch, m, f](detail::Node& self) {
                                 auto& nf = detail::input(self, 0);
                                 auto& nw = detail::input(self, 1);
                                 if (nf.requires_grad) {
                                   Tensor delta(nf.value.shape());
                                   for (std::size_t b = 0; b < batch; ++b)
                                     for (std::size_t i = 0; i < m; ++i)
                                       for (std::size_t j = 0; j < f; ++j)
                                         delta.at(b, i, j) = nw.value.at(b, i) * self.grad.at(b, j);
                                   detail::accumulate(nf, delta);
                                 }
                                 if (nw.requires_grad) {
                                   Tensor delta(nw.value.shape(), 0.0);
                                   for (std::size_t b = 0; b < batch; ++b)
                                     for (std::size_t i = 0; i < m; ++i)
                                       for (std::size_t j = 0; j < f; ++j)
                                         delta.at(b, i) += nf.value.at(b, i, j) * self.grad.at(b, j);
                                   detail::accumulate(nw, delta);
                                 }
                               });
}

/// Running statistics owned by a batch-norm layer.
struct BatchNormStats {
  Tensor running_mean;
  Tensor running_var;
};

/// Batch normalization over axis 0 of [B x F]. Training mode normalizes by
/// the biased batch variance and folds the batch statistics into `stats`
/// (running variance uses the unbiased estimate); evaluation mode uses
/// `stats` only.
inline Variable batch_norm(const Variable& x, const Variable& gamma, const Variable& beta, BatchNormStats& stats,
                           bool training, double eps = 1e-5, double momentum = 0.1) {
  if (x.shape().size() != 2) throw ShapeError("batch_norm: input must be [B,F]");
  const std::size_t batch = x.dim(0), feat = x.dim(1);
  if (gamma.size() != feat || beta.size() != feat || stats.running_mean.size() != feat ||
      stats.running_var.size() != feat) {
    throw ShapeError("batch_norm: parameter length does not match " + std::to_string(feat) + " features");
  }
  if (training && batch < 2) throw ShapeError("batch_norm: training mode needs batch >= 2");
  const Tensor& xv = x.value();
  Tensor mu({feat}, 0.0), inv_std({feat});
  if (training) {
    Tensor var({feat}, 0.0);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < feat; ++j) mu[j] += xv.at(b, j);
    for (std::size_t j = 0; j < feat; ++j) mu[j] /= static_cast<double>(batch);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < feat; ++j) {
        const double d = xv.at(b, j) - mu[j];
        var[j] += d * d;
      }
    for (std::size_t j = 0; j < feat; ++j) {
      const double biased = var[j] / static_cast<double>(batch);
      inv_std[j] = 1.0 / std::sqrt(biased + eps);
      const double unbiased = var[j] / static_cast<double>(batch - 1);
      stats.running_mean[j] = (1.0 - momentum) * stats.running_mean[j] + momentum * mu[j];
      stats.running_var[j] = (1.0 - momentum) * stats.running_var[j] + momentum * unbiased;
    }
  } else {
    for (std::size_t j = 0; j < feat; ++j) {
      mu[j] = stats.running_mean[j];
      inv_std[j] = 1.0 / std::sqrt(stats.running_var[j] + eps);
    }
  }
  Tensor xhat({batch, feat}), out({batch, feat});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t j = 0; j < feat; ++j) {
      xhat.at(b, j) = (xv.at(b, j) - mu[j]) * inv_std[j];
      out.at(b, j) = gamma.value()[j] * xhat.at(b, j) + beta.value()[j];
    }
  return Variable::make_result(
      "batch_norm", std::move(out), {x, gamma, beta},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node& self) {
        auto& nx = detail::input(self, 0);
        auto& ng = detail::input(self, 1);
        auto& nbeta = detail::input(self, 2);
        Tensor sum_g({feat}, 0.0), sum_gx({feat}, 0.0);
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t j = 0; j < feat; ++j) {
            sum_g[j] += self.grad.at(b, j);
            sum_gx[j] += self.grad.at(b, j) * xhat.at(b, j);
          }
        if (ng.requires_grad) detail::accumulate(ng, sum_gx);
        if (nbeta.requires_grad) detail::accumulate(nbeta, sum_g);
        if (nx.requires_grad) {
          Tensor delta({batch, feat});
          const double n = static_cast<double>(batch);
          for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t j = 0; j < feat; ++j) {
              const double gj = ng.value[j] * inv_std[j];
              delta.at(b, j) = training
                                   ? gj / n * (n * self.grad.at(b, j) - sum_g[j] - xhat.at(b, j) * sum_gx[j])
                                   : gj * self.grad.at(b, j);
            }
          detail::accumulate(nx, delta);
        }
      });
}

}  // namespace loadcast
