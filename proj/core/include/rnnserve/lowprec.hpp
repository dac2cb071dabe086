// Bit-accurate model of the low-precision datapath: an 8-bit 1-4-3 float,
// software IEEE binary16, 32-bit packed lane words, a shared-exponent block
// format, and the staged mixed-precision dot product.
//
// Float8 layout (MSB first): 1 sign bit, 4 exponent bits (bias 7), 3
// mantissa bits. Exponent field 0 encodes subnormals; there are no
// infinities, so exponent field 15 is an ordinary normal binade and the
// largest finite magnitude is (1 + 7/8) * 2^8 = 480. Quantization rounds to
// nearest (ties to even mantissa), overflow saturates to +-480, subnormals
// are kept (no flush), both zero encodings decode to +-0.0, and NaN input is
// a domain error.
//
// Float16 is IEEE binary16 (1-5-10, bias 15) with subnormals, infinities and
// NaN; conversions round to nearest-even.
//
// PackedWord carries a 32-bit payload in one of three shapes; lane order is
// little-endian by lane index (lane 0 in the least significant bits):
//   four_f8: 4 Float8 lanes of 8 bits,
//   two_f16: 2 Float16 lanes of 16 bits,
//   one_f32: 1 IEEE binary32 value.
//
// BlockedVector stores one block: a 5-bit shared exponent code (bias 15,
// chosen from the block's largest magnitude so that element never loses
// exponent information) plus sign and an m-bit magnitude per element,
// m in [2,5]. Element value = +-mantissa * 2^(code - 15 - m + 1). An
// all-zero block takes the minimum exponent code 0.
//
// mixed_dot(a, b, lanes) models the fused 8-bit map-reduce pipeline:
//   1. per element, the exact product of the two Float8 values is rounded
//      to binary16;
//   2. the first reduction level adds adjacent pairs in binary16;
//   3. every remaining reduction level and the cross-group accumulation run
//      in binary32.
// Pairing is always adjacent elements, lowest index first, so the result is
// bit-reproducible. n must be a positive multiple of 4*lanes (the packed
// MACs issued per cycle).

#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace rnnserve {

struct Float8 {
  std::uint8_t bits = 0;

  double value() const;  // exact decode

  static Float8 from_bits(std::uint8_t b) { return Float8{b}; }

  bool operator==(const Float8&) const = default;
};

// Round-to-nearest-even quantization onto the 1-4-3 grid (see layout above).
Float8 quantize_f8(double x);

struct Float16 {
  std::uint16_t bits = 0;

  double value() const;  // exact decode (inf/NaN map to double inf/NaN)

  static Float16 from_double(double x);  // IEEE round-to-nearest-even
  static Float16 from_bits(std::uint16_t b) { return Float16{b}; }

  bool operator==(const Float16&) const = default;
};

// Correctly rounded binary16 sum (the exact sum fits a double).
Float16 f16_add(Float16 a, Float16 b);

enum class PackKind { four_f8, two_f16, one_f32 };

const char* pack_kind_name(PackKind k);

struct PackedWord {
  std::uint32_t payload = 0;
  PackKind kind = PackKind::four_f8;

  static PackedWord pack(const std::array<Float8, 4>& lanes);
  static PackedWord pack(const std::array<Float16, 2>& lanes);
  static PackedWord pack(float v);

  std::array<Float8, 4> lanes_f8() const;    // requires kind == four_f8
  std::array<Float16, 2> lanes_f16() const;  // requires kind == two_f16
  float as_f32() const;                      // requires kind == one_f32
};

struct BlockedVector {
  int mantissa_bits = 2;            // m in [2,5]
  std::uint8_t shared_exponent = 0; // 5-bit code, bias 15

  struct Element {
    std::uint8_t sign = 0;      // 1 bit
    std::uint8_t mantissa = 0;  // m-bit magnitude
  };
  std::vector<Element> elements;

  int block_length() const { return int(elements.size()); }
  double element_value(int i) const;
  std::vector<double> values() const;
};

// Quantizes exactly one block; block_length must equal v.size() and only
// documents the intended block shape. Use quantize_blocks to chunk longer
// vectors.
BlockedVector block_quantize(const std::vector<double>& v, int block_length,
                             int mantissa_bits);

std::vector<BlockedVector> quantize_blocks(const std::vector<double>& v,
                                           int block_length, int mantissa_bits);

// Staged mixed-precision dot product (semantics in the header comment).
float mixed_dot(const std::vector<Float8>& a, const std::vector<Float8>& b,
                int lanes);

}  // namespace rnnserve
