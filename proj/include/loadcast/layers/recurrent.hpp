#pragma once

#include <string>
#include <vector>

#include "loadcast/core/ops.hpp"
#include "loadcast/layers/params.hpp"
#include "loadcast/layers/sequence_ops.hpp"

namespace loadcast::layers {

enum class CellKind { kGru, kLstm };

inline const char* cell_name(CellKind k) { return k == CellKind::kGru ? "gru" : "lstm"; }

struct CellState {
  Variable h;  // [B x H]
  Variable c;  // [B x H], LSTM only
};

/// GRU or LSTM cell with fused gate matrices.
///
/// GRU columns are ordered (update, reset, candidate):
///   z = sig(x Wz + h Uz + bz), r = sig(x Wr + h Ur + br)
///   h~ = tanh(x Wh + (r * h) Uh + bh), h' = (1 - z) * h + z * h~
/// LSTM columns are ordered (input, forget, cell, output).
struct RecurrentCell {
  CellKind kind = CellKind::kGru;
  std::size_t input = 0;
  std::size_t hidden = 0;
  Variable w;       // [D x G*H]
  Variable u;       // GRU: [H x 2H] (update, reset); LSTM: [H x 4H]
  Variable u_cand;  // GRU only: [H x H]
  Variable b;       // [G*H]

  RecurrentCell() = default;
  RecurrentCell(CellKind k, std::size_t in, std::size_t hid, Rng& rng) : kind(k), input(in), hidden(hid) {
    const std::size_t g = gates();
    w = glorot({in, g * hid}, in, g * hid, rng);
    if (k == CellKind::kGru) {
      u = glorot({hid, 2 * hid}, hid, 2 * hid, rng);
      u_cand = glorot({hid, hid}, hid, hid, rng);
    } else {
      u = glorot({hid, 4 * hid}, hid, 4 * hid, rng);
    }
    b = zeros({g * hid});
  }

  std::size_t gates() const { return kind == CellKind::kGru ? 3 : 4; }

  CellState initial_state(std::size_t batch) const {
    CellState s{Variable(Tensor({batch, hidden}, 0.0)), {}};
    if (kind == CellKind::kLstm) s.c = Variable(Tensor({batch, hidden}, 0.0));
    return s;
  }

  /// Input projection x W + b for x [N x D].
  Variable project(const Variable& x) const {
    if (x.shape().size() != 2 || x.dim(1) != input) {
      throw ShapeError("recurrent cell: expected [N x " + std::to_string(input) + "], got " + to_string(x.shape()));
    }
    return add(matmul(x, w), b);
  }

  /// One step given the projected input xw [B x G*H].
  CellState step(const Variable& xw, const CellState& s) const {
    const std::size_t h = hidden;
    if (s.h.shape().size() != 2 || s.h.dim(1) != h || s.h.dim(0) != xw.dim(0)) {
      throw ShapeError("recurrent cell: state " + to_string(s.h.shape()) + " does not match hidden " +
                       std::to_string(h));
    }
    if (kind == CellKind::kGru) {
      Variable zr = sigmoid(add(slice(xw, 1, 0, 2 * h), matmul(s.h, u)));
      Variable z = slice(zr, 1, 0, h);
      Variable r = slice(zr, 1, h, 2 * h);
      Variable cand = tanh(add(slice(xw, 1, 2 * h, 3 * h), matmul(mul(r, s.h), u_cand)));
      return {add(s.h, mul(z, sub(cand, s.h))), {}};
    }
    Variable pre = add(xw, matmul(s.h, u));
    Variable i = sigmoid(slice(pre, 1, 0, h));
    Variable f = sigmoid(slice(pre, 1, h, 2 * h));
    Variable g = tanh(slice(pre, 1, 2 * h, 3 * h));
    Variable o = sigmoid(slice(pre, 1, 3 * h, 4 * h));
    Variable c = add(mul(f, s.c), mul(i, g));
    return {mul(o, tanh(c)), c};
  }

  /// Single step on raw input [B x D] or [D].
  CellState operator()(const Variable& x, const CellState& s) const {
    if (x.shape().size() == 1) {
      CellState batched{reshape(s.h, {1, hidden}), s.c.defined() ? reshape(s.c, {1, hidden}) : Variable()};
      CellState out = step(project(reshape(x, {1, input})), batched);
      return {reshape(out.h, {hidden}), out.c.defined() ? reshape(out.c, {hidden}) : Variable()};
    }
    return step(project(x), s);
  }

  void collect(ParamList& list, const std::string& prefix) const {
    list.add(join_name(prefix, "w"), w);
    list.add(join_name(prefix, "u"), u);
    if (kind == CellKind::kGru) list.add(join_name(prefix, "u_cand"), u_cand);
    list.add(join_name(prefix, "b"), b);
  }

  static std::size_t param_count(CellKind k, std::size_t in, std::size_t hid) {
    const std::size_t g = k == CellKind::kGru ? 3 : 4;
    return g * (in * hid + hid * hid + hid);
  }
};

struct RecurrentOutput {
  Variable sequence;  // [B x T x dirs*H]
  Variable final;     // [B x dirs*H]: last forward state ++ first-step backward state
};

/// One (optionally bidirectional) recurrent layer over [B x T x D].
struct RecurrentLayer {
  RecurrentCell fwd;
  RecurrentCell bwd;
  bool bidirectional = false;

  RecurrentLayer() = default;
  RecurrentLayer(CellKind k, std::size_t in, std::size_t hid, bool bidir, Rng& rng)
      : fwd(k, in, hid, rng), bidirectional(bidir) {
    if (bidir) bwd = RecurrentCell(k, in, hid, rng);
  }

  std::size_t output_size() const { return (bidirectional ? 2 : 1) * fwd.hidden; }

  RecurrentOutput operator()(const Variable& x) const {
    const Shape& s = x.shape();
    if (s.size() != 3) throw ShapeError("recurrent layer: expected [B x T x D], got " + to_string(s));
    if (s[1] == 0) throw ShapeError("recurrent layer: empty sequence");
    const std::size_t last = s[1] - 1;
    Variable fwd_seq = run(fwd, x, false);
    if (!bidirectional) return {fwd_seq, select(fwd_seq, 1, last)};
    Variable bwd_seq = run(bwd, x, true);
    return {concat({fwd_seq, bwd_seq}, 2), concat({select(fwd_seq, 1, last), select(bwd_seq, 1, 0)}, 1)};
  }

  void collect(ParamList& list, const std::string& prefix) const {
    fwd.collect(list, join_name(prefix, "fwd"));
    if (bidirectional) bwd.collect(list, join_name(prefix, "bwd"));
  }

  static std::size_t param_count(CellKind k, std::size_t in, std::size_t hid, bool bidir) {
    return (bidir ? 2 : 1) * RecurrentCell::param_count(k, in, hid);
  }

 private:
  // Hidden states [B x T x H] indexed by time (reverse pass still indexed by t).
  static Variable run(const RecurrentCell& cell, const Variable& x, bool reverse) {
    const std::size_t batch = x.dim(0), steps = x.dim(1), in = x.dim(2);
    Variable xw = reshape(cell.project(reshape(x, {batch * steps, in})), {batch, steps, cell.gates() * cell.hidden});
    if (cell.kind == CellKind::kGru) return gru_sequence(xw, cell.u, cell.u_cand, reverse);
    return lstm_sequence(xw, cell.u, reverse);
  }
};

/// Stacked recurrent layers; layer k consumes the full output sequence of
/// layer k - 1.
struct RecurrentStack {
  std::vector<RecurrentLayer> layers;

  RecurrentStack() = default;
  RecurrentStack(CellKind k, std::size_t in, std::size_t hid, std::size_t depth, bool bidir, Rng& rng) {
    if (depth == 0) throw ShapeError("recurrent stack needs at least one layer");
    for (std::size_t i = 0; i < depth; ++i) {
      layers.emplace_back(k, in, hid, bidir, rng);
      in = layers.back().output_size();
    }
  }

  std::size_t output_size() const { return layers.back().output_size(); }

  RecurrentOutput operator()(const Variable& x) const {
    RecurrentOutput out = layers.front()(x);
    for (std::size_t i = 1; i < layers.size(); ++i) out = layers[i](out.sequence);
    return out;
  }

  void collect(ParamList& list, const std::string& prefix) const {
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(list, join_name(prefix, std::to_string(i)));
  }

  static std::size_t param_count(CellKind k, std::size_t in, std::size_t hid, std::size_t depth, bool bidir) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < depth; ++i) {
      n += RecurrentLayer::param_count(k, in, hid, bidir);
      in = (bidir ? 2 : 1) * hid;
    }
    return n;
  }
};

}  // namespace loadcast::layers
