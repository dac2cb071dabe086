#include "rnnserve/reference.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace rnnserve::reference {

namespace {

double dot(const std::vector<double>& w_row_begin, size_t offset,
           const std::vector<double>& v) {
  double s = 0.0;
  for (size_t k = 0; k < v.size(); ++k) s += w_row_begin[offset + k] * v[k];
  return s;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

LstmStepResult lstm_step(const std::vector<std::vector<double>>& w_h,
                         const std::vector<std::vector<double>>& w_x,
                         const std::vector<std::vector<double>>& b, int h_dim,
                         int d_dim, const std::vector<double>& x,
                         const std::vector<double>& h_prev,
                         const std::vector<double>& c_prev) {
  if (w_h.size() != 4 || w_x.size() != 4 || b.size() != 4)
    throw std::invalid_argument("lstm reference expects 4 gates");
  LstmStepResult out;
  out.h.resize(size_t(h_dim));
  out.c.resize(size_t(h_dim));
  for (int row = 0; row < h_dim; ++row) {
    double pre[4];
    for (int g = 0; g < 4; ++g) {
      // Recurrent and input contributions summed separately, then combined.
      const double sh = dot(w_h[size_t(g)], size_t(row) * size_t(h_dim), h_prev);
      const double sx = dot(w_x[size_t(g)], size_t(row) * size_t(d_dim), x);
      pre[g] = sh + sx + b[size_t(g)][size_t(row)];
    }
    const double i = sigmoid(pre[0]);
    const double j = std::tanh(pre[1]);
    const double f = sigmoid(pre[2]);
    const double o = sigmoid(pre[3]);
    const double c = f * c_prev[size_t(row)] + i * j;
    out.c[size_t(row)] = c;
    out.h[size_t(row)] = o * std::tanh(c);
  }
  return out;
}

std::vector<double> gru_step(const std::vector<std::vector<double>>& w_h,
                             const std::vector<std::vector<double>>& w_x,
                             const std::vector<std::vector<double>>& b, int h_dim,
                             int d_dim, const std::vector<double>& x,
                             const std::vector<double>& h_prev) {
  if (w_h.size() != 3 || w_x.size() != 3 || b.size() != 3)
    throw std::invalid_argument("gru reference expects 3 gates");
  const size_t n_rows = size_t(h_dim);
  std::vector<double> z(n_rows), rh(n_rows), out(n_rows);
  for (int row = 0; row < h_dim; ++row) {
    const size_t hoff = size_t(row) * size_t(h_dim);
    const size_t doff = size_t(row) * size_t(d_dim);
    z[size_t(row)] = sigmoid(dot(w_h[0], hoff, h_prev) + dot(w_x[0], doff, x) +
                             b[0][size_t(row)]);
    const double r = sigmoid(dot(w_h[1], hoff, h_prev) + dot(w_x[1], doff, x) +
                             b[1][size_t(row)]);
    rh[size_t(row)] = r * h_prev[size_t(row)];
  }
  for (int row = 0; row < h_dim; ++row) {
    const size_t hoff = size_t(row) * size_t(h_dim);
    const size_t doff = size_t(row) * size_t(d_dim);
    const double n = std::tanh(dot(w_h[2], hoff, rh) + dot(w_x[2], doff, x) +
                               b[2][size_t(row)]);
    out[size_t(row)] =
        (1.0 - z[size_t(row)]) * n + z[size_t(row)] * h_prev[size_t(row)];
  }
  return out;
}

double f8_value(std::uint8_t bits) {
  const int sign = (bits >> 7) & 1;
  const int exp = (bits >> 3) & 0xF;
  const int man = bits & 0x7;
  double mag;
  if (exp == 0)
    mag = std::ldexp(double(man) / 8.0, 1 - 7);  // subnormal
  else
    mag = std::ldexp(1.0 + double(man) / 8.0, exp - 7);
  return sign ? -mag : mag;
}

std::uint8_t f8_nearest(double x) {
  if (std::isnan(x)) throw std::domain_error("cannot encode NaN as 8-bit float");
  std::uint8_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int bits = 0; bits < 256; ++bits) {
    const double v = f8_value(std::uint8_t(bits));
    const double dist = std::fabs(x - v);
    bool better = false;
    if (dist < best_dist) {
      better = true;
    } else if (dist == best_dist) {
      // Ties go to the even mantissa, then to the non-negative encoding.
      const bool cand_even = (bits & 1) == 0;
      const bool best_even = (best & 1) == 0;
      if (cand_even != best_even)
        better = cand_even;
      else
        better = (bits >> 7) < (best >> 7);
    }
    if (better) {
      best = std::uint8_t(bits);
      best_dist = dist;
    }
  }
  return best;
}

double round_f16(double x) {
  // Binary16 results carry one canonical (positive quiet) NaN, so the sign
  // of an incoming NaN is not preserved.
  if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(x) || x == 0.0) return x;
  const double ax = std::fabs(x);
  // 65520 is the round-to-nearest-even overflow threshold for binary16.
  if (ax >= 65520.0) return std::copysign(std::numeric_limits<double>::infinity(), x);
  int e = 0;
  std::frexp(ax, &e);  // ax = f * 2^e with f in [0.5, 1)
  const int unbiased = e - 1;
  const double q = std::ldexp(1.0, std::max(unbiased, -14) - 10);
  // x/q is exact (q is a power of two); rint honors the default
  // round-to-nearest-even environment.
  double r = std::rint(x / q) * q;
  if (std::fabs(r) > 65504.0)
    r = std::copysign(std::numeric_limits<double>::infinity(), x);
  return r;
}

float mixed_dot(const std::vector<std::uint8_t>& a,
                const std::vector<std::uint8_t>& b, int lanes) {
  if (lanes < 1 || (lanes & (lanes - 1)) != 0)
    throw std::invalid_argument("lanes must be a positive power of two");
  if (a.size() != b.size()) throw std::invalid_argument("length mismatch");
  const size_t group = size_t(4) * size_t(lanes);
  if (a.empty() || a.size() % group != 0)
    throw std::invalid_argument("length must be a positive multiple of 4*lanes");

  float acc = 0.0f;
  for (size_t base = 0; base < a.size(); base += group) {
    // Stage 1: exact 8-bit products, each rounded to binary16.
    std::vector<double> p(group);
    for (size_t i = 0; i < group; ++i)
      p[i] = round_f16(f8_value(a[base + i]) * f8_value(b[base + i]));
    // Stage 2: first adjacent-pair reduction in binary16.
    std::vector<double> s(group / 2);
    for (size_t i = 0; i < s.size(); ++i) s[i] = round_f16(p[2 * i] + p[2 * i + 1]);
    // Remaining adjacent-pair reductions in binary32.
    std::vector<float> f(s.size());
    for (size_t i = 0; i < s.size(); ++i) f[i] = float(s[i]);
    while (f.size() > 1) {
      std::vector<float> g(f.size() / 2);
      for (size_t i = 0; i < g.size(); ++i) g[i] = f[2 * i] + f[2 * i + 1];
      f.swap(g);
    }
    acc += f[0];
  }
  return acc;
}

std::vector<double> block_quantize_values(const std::vector<double>& v, int m) {
  if (m < 2 || m > 5) throw std::invalid_argument("mantissa bits must lie in [2,5]");
  std::vector<double> out(v.size(), 0.0);
  double mx = 0.0;
  for (double x : v) mx = std::max(mx, std::fabs(x));
  if (mx == 0.0) return out;

  int e = 0;
  std::frexp(mx, &e);
  int code = std::min(std::max((e - 1) + 15, 0), 31);
  const int qmax = (1 << m) - 1;
  for (;;) {
    const double scale = std::ldexp(1.0, (code - 15) - m + 1);
    bool bumped = false;
    for (size_t i = 0; i < v.size(); ++i) {
      double q = std::rint(v[i] / scale);
      if (std::fabs(q) > double(qmax)) {
        if (code < 31) {
          ++code;  // the block maximum rounded up across a binade
          bumped = true;
          break;
        }
        q = std::copysign(double(qmax), q);  // exponent range exhausted
      }
      out[i] = q * scale;
    }
    if (!bumped) break;
  }
  return out;
}

}  // namespace rnnserve::reference
