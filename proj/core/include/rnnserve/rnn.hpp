// Reference recurrent-cell semantics: plain LSTM/GRU cell math in IEEE
// double (or float for parity experiments), a per-element row pipeline that
// computes one output element at a time from row dot products, sequence
// evaluation, and MVM work accounting.
//
// LSTM gate order is (i, j, f, o):
//   i = sigmoid(W_hi h + W_xi x + b_i)      input gate
//   j = tanh   (W_hj h + W_xj x + b_j)      cell candidate
//   f = sigmoid(W_hf h + W_xf x + b_f)      forget gate
//   o = sigmoid(W_ho h + W_xo x + b_o)      output gate
//   c' = f * c + i * j
//   y  = h' = o * tanh(c')
//
// GRU gate order is (z, r, n), standard update/reset/candidate form with the
// reset gate applied to the previous hidden state before the recurrent
// matrix product and the new state blended as (1-z)*n + z*h:
//   z = sigmoid(W_hz h + W_xz x + b_z)      update gate
//   r = sigmoid(W_hr h + W_xr x + b_r)      reset gate
//   n = tanh   (W_hn (r*h) + W_xn x + b_n)  candidate
//   h' = (1 - z) * n + z * h
//
// All dot products accumulate left to right over the concatenated operand
// [h | x] of length R = H + D, so the per-element pipeline and the full-cell
// step are bit-identical in the same precision.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rnnserve {

enum class CellKind { lstm, gru };

inline const char* cell_kind_name(CellKind k) {
  return k == CellKind::lstm ? "lstm" : "gru";
}

inline int gates_for(CellKind k) { return k == CellKind::lstm ? 4 : 3; }

// Problem dimensions. R and G are always derived, never stored.
struct CellDims {
  CellKind kind = CellKind::lstm;
  int h = 0;  // hidden size
  int d = 0;  // input size
  int t = 0;  // sequence length

  int r() const { return h + d; }
  int g() const { return gates_for(kind); }

  void validate() const {
    if (h < 1 || d < 1 || t < 1)
      throw std::invalid_argument("cell dims must be positive: h=" +
                                  std::to_string(h) + " d=" + std::to_string(d) +
                                  " t=" + std::to_string(t));
  }

  static CellDims lstm(int h, int d, int t) { return {CellKind::lstm, h, d, t}; }
  static CellDims gru(int h, int d, int t) { return {CellKind::gru, h, d, t}; }
};

template <typename Real>
struct MatrixT {
  int rows = 0;
  int cols = 0;
  std::vector<Real> data;  // row-major

  MatrixT() = default;
  MatrixT(int r, int c) : rows(r), cols(c), data(size_t(r) * size_t(c), Real(0)) {}

  Real& at(int r, int c) { return data[size_t(r) * cols + c]; }
  Real at(int r, int c) const { return data[size_t(r) * cols + c]; }
  const Real* row(int r) const { return data.data() + size_t(r) * cols; }
};

using Matrix = MatrixT<double>;

// Per-gate weights for one cell. w_h[g] is H x H, w_x[g] is H x D, b[g] has
// H entries. The concatenated H x R view [w_h | w_x] is what the row
// pipeline consumes; concat_row materializes one row of it.
template <typename Real, int G>
struct CellWeightsT {
  CellDims dims;
  std::array<MatrixT<Real>, G> w_h;
  std::array<MatrixT<Real>, G> w_x;
  std::array<std::vector<Real>, G> b;

  void validate() const {
    dims.validate();
    if (dims.g() != G) throw std::invalid_argument("gate count does not match cell kind");
    for (int g = 0; g < G; ++g) {
      if (w_h[g].rows != dims.h || w_h[g].cols != dims.h)
        throw std::invalid_argument("w_h gate " + std::to_string(g) + " must be HxH");
      if (w_x[g].rows != dims.h || w_x[g].cols != dims.d)
        throw std::invalid_argument("w_x gate " + std::to_string(g) + " must be HxD");
      if (int(b[g].size()) != dims.h)
        throw std::invalid_argument("bias gate " + std::to_string(g) + " must have H entries");
    }
  }

  // Row `row` of the concatenated H x R matrix [w_h | w_x] for gate g.
  std::vector<Real> concat_row(int g, int row) const {
    std::vector<Real> out(size_t(dims.r()));
    const Real* ph = w_h[g].row(row);
    const Real* px = w_x[g].row(row);
    for (int k = 0; k < dims.h; ++k) out[k] = ph[k];
    for (int k = 0; k < dims.d; ++k) out[dims.h + k] = px[k];
    return out;
  }
};

template <typename Real>
using LstmWeightsT = CellWeightsT<Real, 4>;
template <typename Real>
using GruWeightsT = CellWeightsT<Real, 3>;

using LstmWeights = LstmWeightsT<double>;
using GruWeights = GruWeightsT<double>;

// LSTM gate indices in storage order.
enum : int { kGateI = 0, kGateJ = 1, kGateF = 2, kGateO = 3 };
// GRU gate indices in storage order.
enum : int { kGateZ = 0, kGateR = 1, kGateN = 2 };

template <typename Real>
struct CellStateT {
  std::vector<Real> h;
  std::vector<Real> c;  // empty for GRU
};

using CellState = CellStateT<double>;

// Gate activations for one LSTM step; i, f, o lie in (0,1) and j in (-1,1).
template <typename Real>
struct GateActivationsT {
  std::vector<Real> i, j, f, o;
};

using GateActivations = GateActivationsT<double>;

namespace detail {

template <typename Real>
inline Real sigmoid(Real v) {
  return Real(1) / (Real(1) + std::exp(-v));
}

// Dot product of gate row `row` with the concatenated operand [h | x] plus
// bias, accumulated strictly left to right. Every cell-evaluation path goes
// through this helper so decompositions stay bit-identical.
template <typename Real, int G>
inline Real gate_row_preact(const CellWeightsT<Real, G>& w, int g, int row,
                            const std::vector<Real>& h, const std::vector<Real>& x) {
  const Real* ph = w.w_h[g].row(row);
  const Real* px = w.w_x[g].row(row);
  Real acc = 0;
  for (size_t k = 0; k < h.size(); ++k) acc += ph[k] * h[k];
  for (size_t k = 0; k < x.size(); ++k) acc += px[k] * x[k];
  return acc + w.b[g][row];
}

template <typename Real>
inline void check_step_args(const CellDims& dims, const std::vector<Real>& x,
                            const std::vector<Real>& h) {
  if (int(x.size()) != dims.d) throw std::invalid_argument("input x must have D entries");
  if (int(h.size()) != dims.h) throw std::invalid_argument("state h must have H entries");
}

}  // namespace detail

// One LSTM output element: the four row dot products for `row` followed by
// the element-wise chain. Needs the full previous h (each dot spans R) but
// only this row's previous cell element.
template <typename Real>
inline void lstm_element(const LstmWeightsT<Real>& w, const std::vector<Real>& x,
                         const std::vector<Real>& h_prev, Real c_prev, int row,
                         Real& c_out, Real& h_out) {
  using detail::gate_row_preact;
  const Real i = detail::sigmoid(gate_row_preact(w, kGateI, row, h_prev, x));
  const Real j = std::tanh(gate_row_preact(w, kGateJ, row, h_prev, x));
  const Real f = detail::sigmoid(gate_row_preact(w, kGateF, row, h_prev, x));
  const Real o = detail::sigmoid(gate_row_preact(w, kGateO, row, h_prev, x));
  const Real c = f * c_prev + i * j;
  c_out = c;
  h_out = o * std::tanh(c);
}

template <typename Real>
inline GateActivationsT<Real> lstm_gate_activations(const LstmWeightsT<Real>& w,
                                                    const std::vector<Real>& x,
                                                    const CellStateT<Real>& s) {
  detail::check_step_args(w.dims, x, s.h);
  const int H = w.dims.h;
  GateActivationsT<Real> a;
  a.i.resize(H); a.j.resize(H); a.f.resize(H); a.o.resize(H);
  for (int row = 0; row < H; ++row) {
    a.i[row] = detail::sigmoid(detail::gate_row_preact(w, kGateI, row, s.h, x));
    a.j[row] = std::tanh(detail::gate_row_preact(w, kGateJ, row, s.h, x));
    a.f[row] = detail::sigmoid(detail::gate_row_preact(w, kGateF, row, s.h, x));
    a.o[row] = detail::sigmoid(detail::gate_row_preact(w, kGateO, row, s.h, x));
  }
  return a;
}

// Full-cell step, evaluated gate-major: all four gate vectors first, then
// the element-wise chain over whole vectors. Because each output element
// depends only on its own four row dot products (all accumulated by
// gate_row_preact in the same order), this is bit-identical to assembling
// the outputs one row at a time with lstm_element.
template <typename Real>
inline CellStateT<Real> lstm_cell_step(const LstmWeightsT<Real>& w,
                                       const std::vector<Real>& x,
                                       const CellStateT<Real>& s) {
  detail::check_step_args(w.dims, x, s.h);
  if (int(s.c.size()) != w.dims.h)
    throw std::invalid_argument("state c must have H entries");
  const int H = w.dims.h;
  const GateActivationsT<Real> a = lstm_gate_activations(w, x, s);
  CellStateT<Real> out;
  out.h.resize(H);
  out.c.resize(H);
  for (int row = 0; row < H; ++row)
    out.c[row] = a.f[row] * s.c[row] + a.i[row] * a.j[row];
  for (int row = 0; row < H; ++row)
    out.h[row] = a.o[row] * std::tanh(out.c[row]);
  return out;
}

// One GRU output element, mirroring lstm_element.
template <typename Real>
inline Real gru_element(const GruWeightsT<Real>& w, const std::vector<Real>& x,
                        const std::vector<Real>& h_prev,
                        const std::vector<Real>& r_gated_h, int row) {
  using detail::gate_row_preact;
  const Real z = detail::sigmoid(gate_row_preact(w, kGateZ, row, h_prev, x));
  const Real n = std::tanh(gate_row_preact(w, kGateN, row, r_gated_h, x));
  return (Real(1) - z) * n + z * h_prev[row];
}

template <typename Real>
inline CellStateT<Real> gru_cell_step(const GruWeightsT<Real>& w,
                                      const std::vector<Real>& x,
                                      const CellStateT<Real>& s) {
  detail::check_step_args(w.dims, x, s.h);
  const int H = w.dims.h;
  // The reset gate must be complete for all rows before the candidate's
  // recurrent product, so it is evaluated as a full pass first.
  std::vector<Real> rh(H);
  for (int row = 0; row < H; ++row) {
    const Real r = detail::sigmoid(detail::gate_row_preact(w, kGateR, row, s.h, x));
    rh[row] = r * s.h[row];
  }
  CellStateT<Real> out;
  out.h.resize(H);
  for (int row = 0; row < H; ++row) out.h[row] = gru_element(w, x, s.h, rh, row);
  return out;
}

// Runs a whole sequence; returns the T x H outputs (h after each step).
template <typename Real>
inline std::vector<std::vector<Real>> run_sequence(const LstmWeightsT<Real>& w,
                                                   const std::vector<std::vector<Real>>& inputs,
                                                   CellStateT<Real> s) {
  if (inputs.empty()) throw std::invalid_argument("input sequence is empty");
  std::vector<std::vector<Real>> outputs;
  outputs.reserve(inputs.size());
  for (const auto& x : inputs) {
    s = lstm_cell_step(w, x, s);
    outputs.push_back(s.h);
  }
  return outputs;
}

template <typename Real>
inline std::vector<std::vector<Real>> run_sequence(const GruWeightsT<Real>& w,
                                                   const std::vector<std::vector<Real>>& inputs,
                                                   CellStateT<Real> s) {
  if (inputs.empty()) throw std::invalid_argument("input sequence is empty");
  std::vector<std::vector<Real>> outputs;
  outputs.reserve(inputs.size());
  for (const auto& x : inputs) {
    s = gru_cell_step(w, x, s);
    outputs.push_back(s.h);
  }
  return outputs;
}

template <typename Real, int G>
inline CellStateT<Real> zero_state(const CellWeightsT<Real, G>& w) {
  CellStateT<Real> s;
  s.h.assign(size_t(w.dims.h), Real(0));
  if (w.dims.kind == CellKind::lstm) s.c.assign(size_t(w.dims.h), Real(0));
  return s;
}

// MVM work for a whole sequence, counting one multiply and one add per MAC.
// Element-wise operations are excluded by convention.
inline std::uint64_t flop_count(const CellDims& dims) {
  dims.validate();
  return 2ull * std::uint64_t(dims.g()) * std::uint64_t(dims.h) *
         std::uint64_t(dims.r()) * std::uint64_t(dims.t);
}

// Deterministic 64-bit mix generator (splitmix64); identical streams on every
// platform, unlike <random> distributions.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double next_unit() { return double(next() >> 11) * 0x1.0p-53; }  // [0,1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }
};

// Seeded random instances. Weights are uniform in [-1/sqrt(R), 1/sqrt(R)] so
// gate pre-activations stay in a numerically tame range.
LstmWeights make_random_lstm(const CellDims& dims, std::uint64_t seed);
GruWeights make_random_gru(const CellDims& dims, std::uint64_t seed);
std::vector<std::vector<double>> make_random_inputs(const CellDims& dims, std::uint64_t seed);

LstmWeightsT<float> to_f32(const LstmWeights& w);
GruWeightsT<float> to_f32(const GruWeights& w);

// JSON (de)serialization of weight instances. Schema documented in README.
std::string lstm_to_json(const LstmWeights& w);
std::string gru_to_json(const GruWeights& w);
LstmWeights lstm_from_json(const std::string& text);
GruWeights gru_from_json(const std::string& text);

}  // namespace rnnserve
