#pragma once

#include <cstddef>
#include <vector>

#include "loadcast/core/ops.hpp"

// Whole-sequence GRU and LSTM recurrences as single graph nodes. The input
// projection x W + b is computed outside; these run the hidden-to-hidden part
// from a zero initial state and backpropagate through time internally.
// Per-element arithmetic matches RecurrentCell::step.

namespace loadcast::layers {

namespace detail {

struct SeqDims {
  std::size_t batch, steps, hidden, gates;
  std::size_t width() const { return gates * hidden; }
};

inline SeqDims seq_dims(const Variable& xw, const Variable& u, std::size_t gates, const char* op) {
  const Shape& s = xw.shape();
  if (s.size() != 3 || s[2] % gates != 0) {
    throw ShapeError(std::string(op) + ": expected projected input [B x T x " + std::to_string(gates) +
                     "H], got " + to_string(s));
  }
  const std::size_t h = s[2] / gates;
  const std::size_t u_cols = gates == 3 ? 2 * h : 4 * h;
  if (u.shape() != Shape{h, u_cols}) {
    throw ShapeError(std::string(op) + ": recurrent weight " + to_string(u.shape()) + " does not match hidden " +
                     std::to_string(h));
  }
  return {s[0], s[1], h, gates};
}

inline std::size_t time_at(std::size_t i, std::size_t steps, bool reverse) { return reverse ? steps - 1 - i : i; }

// y[B x n] (+)= x[B x k] * w^T where w is [n x k]; wt is the cached transpose.
inline void mul_transposed(std::size_t rows, std::size_t n, std::size_t k, const double* x, const double* wt,
                           double* y) {
  kernels::gemm(rows, n, k, x, k, wt, n, y, n, true);
}

}  // namespace detail

/// GRU recurrence over projected inputs xw [B x T x 3H] with u [H x 2H]
/// (update, reset) and u_cand [H x H]. Returns hidden states [B x T x H]
/// indexed by time; `reverse` runs from the last step to the first.
inline Variable gru_sequence(const Variable& xw, const Variable& u, const Variable& u_cand, bool reverse) {
  const detail::SeqDims d = detail::seq_dims(xw, u, 3, "gru_sequence");
  const std::size_t B = d.batch, T = d.steps, H = d.hidden, W = d.width();
  if (u_cand.shape() != Shape{H, H}) throw ShapeError("gru_sequence: candidate weight must be [H x H]");
  const std::size_t bh = B * H;
  // Step-major saved activations, row i of each block belongs to step i.
  std::vector<double> prev(T * bh), zs(T * bh), rs(T * bh), cs(T * bh), rh(T * bh);
  std::vector<double> a(B * 2 * H), cp(bh), h(bh, 0.0);
  Tensor out({B, T, H});
  const double* x = xw.value().raw();
  for (std::size_t i = 0; i < T; ++i) {
    const std::size_t t = detail::time_at(i, T, reverse);
    double* hp = prev.data() + i * bh;
    std::copy(h.begin(), h.end(), hp);
    kernels::gemm(B, 2 * H, H, hp, H, u.value().raw(), 2 * H, a.data(), 2 * H);
    double* z = zs.data() + i * bh;
    double* r = rs.data() + i * bh;
    double* q = rh.data() + i * bh;
    for (std::size_t b = 0; b < B; ++b) {
      const double* xr = x + (b * T + t) * W;
      for (std::size_t j = 0; j < H; ++j) {
        z[b * H + j] = sigmoid_scalar(xr[j] + a[b * 2 * H + j]);
        r[b * H + j] = sigmoid_scalar(xr[H + j] + a[b * 2 * H + H + j]);
        q[b * H + j] = r[b * H + j] * hp[b * H + j];
      }
    }
    kernels::gemm(B, H, H, q, H, u_cand.value().raw(), H, cp.data(), H);
    double* c = cs.data() + i * bh;
    for (std::size_t b = 0; b < B; ++b) {
      const double* xr = x + (b * T + t) * W + 2 * H;
      double* o = out.raw() + (b * T + t) * H;
      for (std::size_t j = 0; j < H; ++j) {
        const std::size_t e = b * H + j;
        c[e] = tanh_scalar(xr[j] + cp[e]);
        h[e] = hp[e] + z[e] * (c[e] - hp[e]);
        o[j] = h[e];
      }
    }
  }
  return Variable::make_result(
      "gru_sequence", std::move(out), {xw, u, u_cand},
      [=, prev = std::move(prev), zs = std::move(zs), rs = std::move(rs), cs = std::move(cs),
       rh = std::move(rh)](loadcast::detail::Node& self) {
        auto& nx = loadcast::detail::input(self, 0);
        auto& nu = loadcast::detail::input(self, 1);
        auto& nc = loadcast::detail::input(self, 2);
        std::vector<double> ut(2 * H * H), uct(H * H);
        kernels::transpose(H, 2 * H, nu.value.raw(), ut.data());
        kernels::transpose(H, H, nc.value.raw(), uct.data());
        std::vector<double> dzr(T * B * 2 * H), dcp(T * bh), dh(bh, 0.0), drh(bh);
        const double* g = self.grad.raw();
        for (std::size_t i = T; i-- > 0;) {
          const std::size_t t = detail::time_at(i, T, reverse);
          const double* hp = prev.data() + i * bh;
          const double* z = zs.data() + i * bh;
          const double* r = rs.data() + i * bh;
          const double* c = cs.data() + i * bh;
          double* dc = dcp.data() + i * bh;
          double* dg = dzr.data() + i * B * 2 * H;
          for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t j = 0; j < H; ++j) {
              const std::size_t e = b * H + j;
              const double gh = g[(b * T + t) * H + j] + dh[e];
              dg[b * 2 * H + j] = gh * (c[e] - hp[e]) * z[e] * (1.0 - z[e]);
              dc[e] = gh * z[e] * (1.0 - c[e] * c[e]);
              dh[e] = gh * (1.0 - z[e]);
            }
          }
          std::fill(drh.begin(), drh.end(), 0.0);
          detail::mul_transposed(B, H, H, dc, uct.data(), drh.data());
          for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t j = 0; j < H; ++j) {
              const std::size_t e = b * H + j;
              dg[b * 2 * H + H + j] = drh[e] * hp[e] * r[e] * (1.0 - r[e]);
              dh[e] += drh[e] * r[e];
            }
          }
          detail::mul_transposed(B, H, 2 * H, dg, ut.data(), dh.data());
        }
        if (nx.requires_grad) {
          double* dx = nx.grad_buffer().raw();
          for (std::size_t i = 0; i < T; ++i) {
            const std::size_t t = detail::time_at(i, T, reverse);
            for (std::size_t b = 0; b < B; ++b) {
              double* row = dx + (b * T + t) * W;
              const double* gz = dzr.data() + (i * B + b) * 2 * H;
              const double* gc = dcp.data() + (i * B + b) * H;
              for (std::size_t j = 0; j < 2 * H; ++j) row[j] += gz[j];
              for (std::size_t j = 0; j < H; ++j) row[2 * H + j] += gc[j];
            }
          }
        }
        if (nu.requires_grad) kernels::gemm_tn(H, 2 * H, T * B, prev.data(), dzr.data(), nu.grad_buffer().raw(), true);
        if (nc.requires_grad) kernels::gemm_tn(H, H, T * B, rh.data(), dcp.data(), nc.grad_buffer().raw(), true);
      });
}

/// LSTM recurrence over projected inputs xw [B x T x 4H] (input, forget,
/// cell, output) with u [H x 4H]. Returns hidden states [B x T x H].
inline Variable lstm_sequence(const Variable& xw, const Variable& u, bool reverse) {
  const detail::SeqDims d = detail::seq_dims(xw, u, 4, "lstm_sequence");
  const std::size_t B = d.batch, T = d.steps, H = d.hidden, W = d.width();
  const std::size_t bh = B * H;
  // gates: step-major [T x B x 4H] activated values; cells: c after each
  // step; squashed: tanh of those cells.
  std::vector<double> prev(T * bh), gates(T * B * W), cells(T * bh), squashed(T * bh);
  std::vector<double> h(bh, 0.0), c(bh, 0.0);
  Tensor out({B, T, H});
  const double* x = xw.value().raw();
  for (std::size_t i = 0; i < T; ++i) {
    const std::size_t t = detail::time_at(i, T, reverse);
    std::copy(h.begin(), h.end(), prev.data() + i * bh);
    double* gt = gates.data() + i * B * W;
    kernels::gemm(B, W, H, prev.data() + i * bh, H, u.value().raw(), W, gt, W);
    double* ct = cells.data() + i * bh;
    for (std::size_t b = 0; b < B; ++b) {
      const double* xr = x + (b * T + t) * W;
      double* p = gt + b * W;
      double* o = out.raw() + (b * T + t) * H;
      for (std::size_t j = 0; j < H; ++j) {
        const double ig = sigmoid_scalar(xr[j] + p[j]);
        const double fg = sigmoid_scalar(xr[H + j] + p[H + j]);
        const double gg = tanh_scalar(xr[2 * H + j] + p[2 * H + j]);
        const double og = sigmoid_scalar(xr[3 * H + j] + p[3 * H + j]);
        p[j] = ig;
        p[H + j] = fg;
        p[2 * H + j] = gg;
        p[3 * H + j] = og;
        const std::size_t e = b * H + j;
        c[e] = fg * c[e] + ig * gg;
        ct[e] = c[e];
        const double tc = tanh_scalar(c[e]);
        squashed[i * bh + e] = tc;
        h[e] = og * tc;
        o[j] = h[e];
      }
    }
  }
  return Variable::make_result(
      "lstm_sequence", std::move(out), {xw, u},
      [=, prev = std::move(prev), gates = std::move(gates), cells = std::move(cells),
       squashed = std::move(squashed)](loadcast::detail::Node& self) {
        auto& nx = loadcast::detail::input(self, 0);
        auto& nu = loadcast::detail::input(self, 1);
        std::vector<double> ut(W * H);
        kernels::transpose(H, W, nu.value.raw(), ut.data());
        std::vector<double> dpre(T * B * W), dh(bh, 0.0), dc(bh, 0.0);
        const double* g = self.grad.raw();
        for (std::size_t i = T; i-- > 0;) {
          const std::size_t t = detail::time_at(i, T, reverse);
          const double* gt = gates.data() + i * B * W;
          const double* cprev = i > 0 ? cells.data() + (i - 1) * bh : nullptr;
          double* dp = dpre.data() + i * B * W;
          for (std::size_t b = 0; b < B; ++b) {
            const double* p = gt + b * W;
            double* q = dp + b * W;
            for (std::size_t j = 0; j < H; ++j) {
              const std::size_t e = b * H + j;
              const double ig = p[j], fg = p[H + j], gg = p[2 * H + j], og = p[3 * H + j];
              const double tc = squashed[i * bh + e];
              const double gh = g[(b * T + t) * H + j] + dh[e];
              const double gc = dc[e] + gh * og * (1.0 - tc * tc);
              const double cp = cprev ? cprev[e] : 0.0;
              q[j] = gc * gg * ig * (1.0 - ig);
              q[H + j] = gc * cp * fg * (1.0 - fg);
              q[2 * H + j] = gc * ig * (1.0 - gg * gg);
              q[3 * H + j] = gh * tc * og * (1.0 - og);
              dc[e] = gc * fg;
            }
          }
          std::fill(dh.begin(), dh.end(), 0.0);
          detail::mul_transposed(B, H, W, dp, ut.data(), dh.data());
        }
        if (nx.requires_grad) {
          double* dx = nx.grad_buffer().raw();
          for (std::size_t i = 0; i < T; ++i) {
            const std::size_t t = detail::time_at(i, T, reverse);
            for (std::size_t b = 0; b < B; ++b) {
              double* row = dx + (b * T + t) * W;
              const double* q = dpre.data() + (i * B + b) * W;
              for (std::size_t j = 0; j < W; ++j) row[j] += q[j];
            }
          }
        }
        if (nu.requires_grad) kernels::gemm_tn(H, W, T * B, prev.data(), dpre.data(), nu.grad_buffer().raw(), true);
      });
}

}  // namespace loadcast::layers
