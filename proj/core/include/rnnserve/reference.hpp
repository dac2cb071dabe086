// Independent straight-line reimplementations of the cell math and the
// mixed-precision datapath, used only to cross-check the primary
// implementations (by the test suite and by the `golden` CLI command).
//
// Everything here is deliberately written as its own code path:
//  - cell steps accumulate W_h*h and W_x*x as separate sums (the primary
//    path accumulates over the concatenated operand),
//  - half-precision rounding goes through frexp/rint arithmetic (the primary
//    path manipulates IEEE bit patterns),
//  - 8-bit quantization scans all 256 encodings for the nearest value.
// Keep it that way; folding these into the main implementations would
// silently turn every cross-check into a tautology.

#pragma once

#include <cstdint>
#include <vector>

namespace rnnserve::reference {

// ---- cell math ------------------------------------------------------------

struct LstmStepResult {
  std::vector<double> h;
  std::vector<double> c;
};

// One LSTM step from raw row-major gate matrices, gate order (i, j, f, o).
// w_h[g] is H x H, w_x[g] is H x D, b[g] has H entries.
LstmStepResult lstm_step(const std::vector<std::vector<double>>& w_h,
                         const std::vector<std::vector<double>>& w_x,
                         const std::vector<std::vector<double>>& b, int h_dim,
                         int d_dim, const std::vector<double>& x,
                         const std::vector<double>& h_prev,
                         const std::vector<double>& c_prev);

// One GRU step, gate order (z, r, n); candidate uses W_hn (r*h) and the new
// state is (1-z)*n + z*h.
std::vector<double> gru_step(const std::vector<std::vector<double>>& w_h,
                             const std::vector<std::vector<double>>& w_x,
                             const std::vector<std::vector<double>>& b, int h_dim,
                             int d_dim, const std::vector<double>& x,
                             const std::vector<double>& h_prev);

// ---- low-precision arithmetic ----------------------------------------------

// Exact value of an 8-bit 1-4-3 encoding (bias 7, no infinities).
double f8_value(std::uint8_t bits);

// Nearest 1-4-3 encoding of x (ties to even mantissa, overflow saturates),
// found by scanning all 256 encodings.
std::uint8_t f8_nearest(double x);

// x correctly rounded to IEEE binary16, computed with frexp/rint arithmetic
// in the value domain (returns the rounded value, +-inf on overflow).
double round_f16(double x);

// Stage-faithful scalar mixed-precision dot product over 1-4-3 encodings:
// exact products rounded to binary16, first adjacent-pair reduction in
// binary16, remaining adjacent-pair reductions and the cross-group
// accumulation in binary32. n must be a multiple of 4*lanes.
float mixed_dot(const std::vector<std::uint8_t>& a,
                const std::vector<std::uint8_t>& b, int lanes);

// Scalar shared-exponent block quantizer: returns the decoded values of v
// under a single 5-bit shared exponent (bias 15) and m-bit magnitudes,
// round-to-nearest-even, matching the primary block codec's convention.
std::vector<double> block_quantize_values(const std::vector<double>& v, int m);

}  // namespace rnnserve::reference
