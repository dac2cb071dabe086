#include "rnnserve/lowprec.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rnnserve {

namespace {

// Shared integer-path rounding helpers. All rounding below works directly on
// the IEEE double bit pattern: round-to-nearest-even is implemented with
// guard and sticky bits, never through intermediate float casts (a
// double->float->target chain would double-round).

struct DoubleParts {
  bool sign;
  int exp;            // unbiased; valid when normal
  std::uint64_t sig;  // 53-bit significand including the implicit bit
  bool zero;
  bool nan;
  bool inf;
  bool subnormal;     // magnitude below 2^-1022
};

DoubleParts split_double(double x) {
  const std::uint64_t b = std::bit_cast<std::uint64_t>(x);
  DoubleParts p{};
  p.sign = (b >> 63) != 0;
  const int de = int((b >> 52) & 0x7FF);
  const std::uint64_t dm = b & ((1ull << 52) - 1);
  p.nan = de == 0x7FF && dm != 0;
  p.inf = de == 0x7FF && dm == 0;
  p.zero = de == 0 && dm == 0;
  p.subnormal = de == 0 && dm != 0;
  p.exp = de - 1023;
  p.sig = (1ull << 52) | dm;
  return p;
}

// Rounds |x| = sig * 2^(exp-52) to an integer multiple of 2^grid_exp with
// ties to even. The caller guarantees the result fits well within 64 bits.
std::uint64_t round_magnitude_to_grid(const DoubleParts& p, int grid_exp) {
  if (p.zero || p.subnormal) return 0;  // far below any grid used here
  const int shift = grid_exp - (p.exp - 52);
  if (shift <= 0) {
    // Callers clamp anything beyond their mantissa range, so a saturated
    // sentinel is enough once the left shift would leave 64 bits.
    if (-shift > 10) return 1ull << 62;
    return p.sig << std::uint64_t(-shift);
  }
  if (shift > 54) return 0;
  const std::uint64_t keep = p.sig >> shift;
  const std::uint64_t round = (p.sig >> (shift - 1)) & 1;
  const bool sticky = (p.sig & ((1ull << (shift - 1)) - 1)) != 0;
  if (round && (sticky || (keep & 1))) return keep + 1;
  return keep;
}

// Generic minifloat assembly: eb exponent bits, mb mantissa bits, given
// bias. When has_inf is set, overflow produces the infinity encoding,
// otherwise it saturates to the largest finite value (all exponent and
// mantissa bits set).
std::uint32_t round_to_minifloat(double x, int eb, int mb, int bias, bool has_inf) {
  const DoubleParts p = split_double(x);
  const std::uint32_t sign_bit = std::uint32_t(p.sign) << (eb + mb);
  const int max_field = (1 << eb) - 1;
  const int top_normal_field = has_inf ? max_field - 1 : max_field;

  // Inputs at or beyond the binade above the largest representable one
  // overflow outright (values inside the top binade still round normally).
  if (p.inf || (!p.nan && !p.zero && !p.subnormal && p.exp > top_normal_field - bias)) {
    if (has_inf) return sign_bit | std::uint32_t(max_field << mb);
    return sign_bit | std::uint32_t((top_normal_field << mb) | ((1 << mb) - 1));
  }
  if (p.zero || p.subnormal) return sign_bit;

  const int emin = 1 - bias;  // exponent of the smallest normal binade
  // Grid step: 2^(e-mb) inside the binade of x, clamped at the subnormal
  // step 2^(emin-mb).
  const int grid = std::max(p.exp, emin) - mb;
  std::uint64_t mag = round_magnitude_to_grid(p, grid);
  int exp = std::max(p.exp, emin);
  // Rounding may have carried into the next binade.
  while (mag >= (2ull << mb)) {
    mag >>= 1;
    ++exp;
  }

  if (mag < (1ull << mb)) {
    // Subnormal (or zero) result; exponent field 0.
    return sign_bit | std::uint32_t(mag);
  }
  const int field = exp + bias;
  if (field > top_normal_field) {
    if (has_inf) return sign_bit | std::uint32_t(max_field << mb);
    return sign_bit | std::uint32_t((top_normal_field << mb) | ((1 << mb) - 1));
  }
  return sign_bit | std::uint32_t(field << mb) | std::uint32_t(mag & ((1ull << mb) - 1));
}

double minifloat_value(std::uint32_t bits, int eb, int mb, int bias, bool has_inf) {
  const bool sign = ((bits >> (eb + mb)) & 1) != 0;
  const int field = int((bits >> mb) & ((1u << eb) - 1));
  const int man = int(bits & ((1u << mb) - 1));
  double mag;
  if (has_inf && field == (1 << eb) - 1) {
    mag = man == 0 ? std::numeric_limits<double>::infinity()
                   : std::numeric_limits<double>::quiet_NaN();
  } else if (field == 0) {
    mag = std::ldexp(double(man), (1 - bias) - mb);
  } else {
    mag = std::ldexp(double((1 << mb) | man), (field - bias) - mb);
  }
  return sign ? -mag : mag;
}

}  // namespace

// ---- Float8 -----------------------------------------------------------------

double Float8::value() const { return minifloat_value(bits, 4, 3, 7, false); }

Float8 quantize_f8(double x) {
  if (std::isnan(x)) throw std::domain_error("cannot quantize NaN to Float8");
  return Float8{std::uint8_t(round_to_minifloat(x, 4, 3, 7, false))};
}

// ---- Float16 ----------------------------------------------------------------

double Float16::value() const { return minifloat_value(bits, 5, 10, 15, true); }

Float16 Float16::from_double(double x) {
  if (std::isnan(x)) return Float16{0x7E00};  // canonical quiet NaN
  return Float16{std::uint16_t(round_to_minifloat(x, 5, 10, 15, true))};
}

Float16 f16_add(Float16 a, Float16 b) {
  // Two binary16 values sum exactly in double, so rounding once afterwards
  // yields the correctly rounded binary16 sum.
  return Float16::from_double(a.value() + b.value());
}

// ---- PackedWord ---------------------------------------------------------------

const char* pack_kind_name(PackKind k) {
  switch (k) {
    case PackKind::four_f8: return "four_f8";
    case PackKind::two_f16: return "two_f16";
    case PackKind::one_f32: return "one_f32";
  }
  return "?";
}

namespace {
[[noreturn]] void pack_kind_error(PackKind want, PackKind got) {
  throw std::invalid_argument(std::string("packed word holds ") +
                              pack_kind_name(got) + ", expected " +
                              pack_kind_name(want));
}
}  // namespace

PackedWord PackedWord::pack(const std::array<Float8, 4>& lanes) {
  std::uint32_t payload = 0;
  for (int i = 0; i < 4; ++i) payload |= std::uint32_t(lanes[size_t(i)].bits) << (8 * i);
  return {payload, PackKind::four_f8};
}

PackedWord PackedWord::pack(const std::array<Float16, 2>& lanes) {
  std::uint32_t payload = std::uint32_t(lanes[0].bits) |
                          (std::uint32_t(lanes[1].bits) << 16);
  return {payload, PackKind::two_f16};
}

PackedWord PackedWord::pack(float v) {
  return {std::bit_cast<std::uint32_t>(v), PackKind::one_f32};
}

std::array<Float8, 4> PackedWord::lanes_f8() const {
  if (kind != PackKind::four_f8) pack_kind_error(PackKind::four_f8, kind);
  std::array<Float8, 4> out;
  for (int i = 0; i < 4; ++i) out[size_t(i)].bits = std::uint8_t(payload >> (8 * i));
  return out;
}

std::array<Float16, 2> PackedWord::lanes_f16() const {
  if (kind != PackKind::two_f16) pack_kind_error(PackKind::two_f16, kind);
  return {Float16{std::uint16_t(payload)}, Float16{std::uint16_t(payload >> 16)}};
}

float PackedWord::as_f32() const {
  if (kind != PackKind::one_f32) pack_kind_error(PackKind::one_f32, kind);
  return std::bit_cast<float>(payload);
}

// ---- BlockedVector ------------------------------------------------------------

double BlockedVector::element_value(int i) const {
  const Element& e = elements.at(size_t(i));
  const double mag =
      std::ldexp(double(e.mantissa), (int(shared_exponent) - 15) - mantissa_bits + 1);
  return e.sign ? -mag : mag;
}

std::vector<double> BlockedVector::values() const {
  std::vector<double> out(elements.size());
  for (int i = 0; i < block_length(); ++i) out[size_t(i)] = element_value(i);
  return out;
}

BlockedVector block_quantize(const std::vector<double>& v, int block_length,
                             int mantissa_bits) {
  if (mantissa_bits < 2 || mantissa_bits > 5)
    throw std::invalid_argument("mantissa bits must lie in [2,5]");
  if (block_length < 1 || int(v.size()) != block_length)
    throw std::invalid_argument(
        "block_quantize handles one block; v must have exactly block_length "
        "entries (chunk longer vectors with quantize_blocks)");
  for (double x : v)
    if (std::isnan(x)) throw std::domain_error("cannot block-quantize NaN");

  BlockedVector out;
  out.mantissa_bits = mantissa_bits;
  out.elements.assign(v.size(), {});

  double mx = 0.0;
  for (double x : v) mx = std::max(mx, std::fabs(x));
  if (mx == 0.0) {
    out.shared_exponent = 0;  // all-zero block: minimum exponent by convention
    return out;
  }

  const DoubleParts mp = split_double(mx);
  int code = mp.subnormal ? 0 : std::min(std::max(mp.exp + 15, 0), 31);
  const std::uint64_t qmax = (1ull << mantissa_bits) - 1;
  for (;;) {
    const int grid = (code - 15) - mantissa_bits + 1;
    bool bumped = false;
    for (size_t i = 0; i < v.size(); ++i) {
      const DoubleParts p = split_double(v[i]);
      std::uint64_t q = round_magnitude_to_grid(p, grid);
      if (q > qmax) {
        if (code < 31) {
          // Only the block maximum can round up across its binade; widen the
          // shared exponent once and redo the block.
          ++code;
          bumped = true;
          break;
        }
        q = qmax;  // exponent range exhausted: clamp
      }
      out.elements[i].sign = p.sign && q != 0 ? 1 : 0;
      out.elements[i].mantissa = std::uint8_t(q);
    }
    if (!bumped) break;
  }
  out.shared_exponent = std::uint8_t(code);
  return out;
}

std::vector<BlockedVector> quantize_blocks(const std::vector<double>& v,
                                           int block_length, int mantissa_bits) {
  if (block_length < 1) throw std::invalid_argument("block_length must be positive");
  if (v.empty()) throw std::invalid_argument("cannot block-quantize an empty vector");
  std::vector<BlockedVector> out;
  for (size_t base = 0; base < v.size(); base += size_t(block_length)) {
    const size_t end = std::min(v.size(), base + size_t(block_length));
    std::vector<double> chunk(v.begin() + long(base), v.begin() + long(end));
    out.push_back(block_quantize(chunk, int(chunk.size()), mantissa_bits));
  }
  return out;
}

// ---- mixed_dot ----------------------------------------------------------------

float mixed_dot(const std::vector<Float8>& a, const std::vector<Float8>& b,
                int lanes) {
  if (lanes < 1 || (lanes & (lanes - 1)) != 0)
    throw std::invalid_argument("lanes must be a positive power of two");
  if (a.size() != b.size())
    throw std::invalid_argument("mixed_dot operands must have equal length");
  const size_t group = size_t(4) * size_t(lanes);
  if (a.empty() || a.size() % group != 0)
    throw std::invalid_argument("mixed_dot length must be a positive multiple of " +
                                std::to_string(group) + " (4*lanes)");

  float acc = 0.0f;
  std::vector<Float16> p(group);
  std::vector<float> f(group / 2), g;
  for (size_t base = 0; base < a.size(); base += group) {
    // Stage 1: exact products (the 7-bit significands multiply exactly in
    // double) rounded once to binary16.
    for (size_t i = 0; i < group; ++i)
      p[i] = Float16::from_double(a[base + i].value() * b[base + i].value());
    // Stage 2: first reduction level in binary16, adjacent pairs.
    f.resize(group / 2);
    for (size_t i = 0; i < f.size(); ++i)
      f[i] = float(f16_add(p[2 * i], p[2 * i + 1]).value());
    // Remaining levels in binary32, adjacent pairs, lowest index first.
    while (f.size() > 1) {
      g.resize(f.size() / 2);
      for (size_t i = 0; i < g.size(); ++i) g[i] = f[2 * i] + f[2 * i + 1];
      f.swap(g);
    }
    acc += f[0];
  }
  return acc;
}

}  // namespace rnnserve
