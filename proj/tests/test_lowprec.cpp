#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "rnnserve/lowprec.hpp"
#include "rnnserve/reference.hpp"
#include "rnnserve/rnn.hpp"

using namespace rnnserve;

namespace {

float as_float_bits(std::uint32_t u) {
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

std::uint32_t float_bits(float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  return u;
}

}  // namespace

TEST_SUITE("lowprec") {

TEST_CASE("float8 decode: frozen encodings") {
  CHECK(Float8::from_bits(0x00).value() == 0.0);
  CHECK(Float8::from_bits(0x01).value() == 0.001953125);  // smallest subnormal
  CHECK(Float8::from_bits(0x07).value() == 0.013671875);  // largest subnormal
  CHECK(Float8::from_bits(0x08).value() == 0.015625);     // smallest normal
  CHECK(Float8::from_bits(0x38).value() == 1.0);
  CHECK(Float8::from_bits(0x30).value() == 0.5);
  CHECK(Float8::from_bits(0x7F).value() == 480.0);  // largest finite, no infinities
  CHECK(Float8::from_bits(0xFF).value() == -480.0);
  CHECK(Float8::from_bits(0xBC).value() == -1.5);
  CHECK(Float8::from_bits(0x80).value() == 0.0);
  CHECK(std::signbit(Float8::from_bits(0x80).value()));
  // Every encoding is finite.
  for (int b = 0; b < 256; ++b)
    CHECK(std::isfinite(Float8::from_bits(std::uint8_t(b)).value()));
}

TEST_CASE("float8 decode agrees with the value table file") {
  std::ifstream in(std::string(RNNSERVE_DATA_DIR) + "/float8_values_v1.csv");
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "bits,value");
  int rows = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    const int bits = std::stoi(line.substr(0, comma));
    const double v = std::strtod(line.c_str() + comma + 1, nullptr);
    const double got = Float8::from_bits(std::uint8_t(bits)).value();
    CHECK(got == v);
    CHECK(std::signbit(got) == std::signbit(v));
    ++rows;
  }
  CHECK(rows == 256);
}

TEST_CASE("float8 quantization is nearest-value with even-mantissa ties") {
  // Saturating overflow: no infinities in the format.
  CHECK(quantize_f8(481.0).bits == 0x7F);
  CHECK(quantize_f8(496.0).bits == 0x7F);
  CHECK(quantize_f8(1000.0).bits == 0x7F);
  CHECK(quantize_f8(1e300).bits == 0x7F);
  CHECK(quantize_f8(-1000.0).bits == 0xFF);
  // Ties to even mantissa.
  CHECK(quantize_f8(1.0625).bits == 0x38);  // halfway 1.0 / 1.125 -> 1.0
  CHECK(quantize_f8(1.1875).bits == 0x3A);  // halfway 1.125 / 1.25 -> 1.25
  // Signed zero and underflow.
  CHECK(quantize_f8(0.0).bits == 0x00);
  CHECK(quantize_f8(-0.0).bits == 0x80);
  CHECK(quantize_f8(1e-12).bits == 0x00);
  CHECK(quantize_f8(-1e-12).bits == 0x80);
  CHECK(quantize_f8(0.0009765625).bits == 0x00);  // exactly half the min subnormal
  // Exact values survive.
  for (int b = 0; b < 256; ++b) {
    const double v = Float8::from_bits(std::uint8_t(b)).value();
    if (v == 0.0) continue;  // both zeros decode to 0.0
    CHECK(quantize_f8(v).bits == std::uint8_t(b));
  }
  CHECK_THROWS_AS(quantize_f8(std::numeric_limits<double>::quiet_NaN()),
                  std::domain_error);
}

TEST_CASE("float8 quantization matches the exhaustive-scan oracle") {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 20000; ++trial) {
    double x;
    switch (trial % 4) {
      case 0: x = rng.uniform(-600.0, 600.0); break;
      case 1: x = rng.uniform(-2.0, 2.0); break;
      case 2: x = rng.uniform(-0.02, 0.02); break;  // subnormal territory
      default: x = std::ldexp(rng.uniform(-1.0, 1.0), int(rng.next() % 22) - 11);
    }
    const std::uint8_t got = quantize_f8(x).bits;
    const std::uint8_t want = reference::f8_nearest(x);
    // Same represented value; on exact ties both sides keep an even mantissa.
    const double gv = reference::f8_value(got);
    const double wv = reference::f8_value(want);
    CHECK(std::fabs(x - gv) == std::fabs(x - wv));
    if (gv != wv) CHECK((got & 1) == 0);
  }
}

TEST_CASE("float16 conversion: frozen encodings") {
  CHECK(Float16::from_double(1.0).bits == 0x3C00);
  CHECK(Float16::from_double(-2.0).bits == 0xC000);
  CHECK(Float16::from_double(0.5).bits == 0x3800);
  CHECK(Float16::from_double(65504.0).bits == 0x7BFF);  // largest finite
  CHECK(Float16::from_double(65520.0).bits == 0x7C00);  // rounds to +inf
  CHECK(Float16::from_double(1e9).bits == 0x7C00);
  CHECK(Float16::from_double(-1e9).bits == 0xFC00);
  CHECK(Float16::from_double(6.103515625e-05).bits == 0x0400);  // smallest normal
  CHECK(Float16::from_double(5.960464477539063e-08).bits == 0x0001);  // min subnormal
  CHECK(Float16::from_double(-0.0).bits == 0x8000);
  CHECK(Float16::from_double(std::numeric_limits<double>::infinity()).bits == 0x7C00);
  // Canonical quiet NaN.
  CHECK(Float16::from_double(std::numeric_limits<double>::quiet_NaN()).bits == 0x7E00);
  // Round-to-nearest-even ties.
  CHECK(Float16::from_double(1.0 + 1.0 / 2048.0).bits == 0x3C00);
  CHECK(Float16::from_double(1.0 + 3.0 / 2048.0).bits == 0x3C02);
  // Value round trip.
  CHECK(Float16::from_bits(0x3C00).value() == 1.0);
  CHECK(Float16::from_bits(0x0001).value() == 5.960464477539063e-08);
  CHECK(std::isinf(Float16::from_bits(0x7C00).value()));
  CHECK(std::isnan(Float16::from_bits(0x7E00).value()));
}

TEST_CASE("float16 conversion matches the frexp-route oracle") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 50000; ++trial) {
    double x;
    switch (trial % 3) {
      case 0: x = rng.uniform(-70000.0, 70000.0); break;
      case 1: x = rng.uniform(-2.0, 2.0); break;
      default: x = std::ldexp(rng.uniform(-1.0, 1.0), int(rng.next() % 40) - 30);
    }
    const double got = Float16::from_double(x).value();
    const double want = reference::round_f16(x);
    if (std::isinf(want)) {
      CHECK(std::isinf(got));
      CHECK(std::signbit(got) == std::signbit(want));
    } else {
      CHECK(got == want);
      CHECK(std::signbit(got) == std::signbit(want));
    }
  }
}

TEST_CASE("f16 add rounds once through binary16") {
  const Float16 a = Float16::from_double(1.0);
  const Float16 b = Float16::from_double(1.0 / 2048.0);  // below half ULP at 1.0
  CHECK(f16_add(a, b).bits == 0x3C00);  // absorbed
  const Float16 c = Float16::from_double(2048.0);
  const Float16 one = Float16::from_double(1.0);
  CHECK(f16_add(c, one).value() == 2048.0);  // ULP at 2048 is 2
  // Opposite infinities produce the canonical NaN.
  const Float16 pinf = Float16::from_double(1e9);
  const Float16 ninf = Float16::from_double(-1e9);
  CHECK(f16_add(pinf, ninf).bits == 0x7E00);
}

TEST_CASE("packed words keep lane order with lane 0 in the low bits") {
  const std::array<Float8, 4> lanes{quantize_f8(1.0), quantize_f8(-2.0),
                                    quantize_f8(0.25), quantize_f8(480.0)};
  const PackedWord w = PackedWord::pack(lanes);
  CHECK(w.kind == PackKind::four_f8);
  CHECK(w.payload == 0x7F28C038u);
  const auto back = w.lanes_f8();
  for (int i = 0; i < 4; ++i) CHECK(back[size_t(i)].bits == lanes[size_t(i)].bits);

  const PackedWord w2 = PackedWord::pack(
      std::array<Float16, 2>{Float16::from_double(1.0), Float16::from_double(-2.0)});
  CHECK(w2.kind == PackKind::two_f16);
  CHECK(w2.payload == 0xC0003C00u);
  CHECK(w2.lanes_f16()[0].bits == 0x3C00);
  CHECK(w2.lanes_f16()[1].bits == 0xC000);

  const PackedWord w1 = PackedWord::pack(1.5f);
  CHECK(w1.kind == PackKind::one_f32);
  CHECK(w1.payload == 0x3FC00000u);
  CHECK(w1.as_f32() == 1.5f);

  CHECK_THROWS_AS(w.lanes_f16(), std::invalid_argument);
  CHECK_THROWS_AS(w.as_f32(), std::invalid_argument);
  CHECK_THROWS_AS(w1.lanes_f8(), std::invalid_argument);
  CHECK(std::string(pack_kind_name(PackKind::four_f8)) == "four_f8");
}

TEST_CASE("blocked vectors share one five-bit exponent") {
  const BlockedVector bv = block_quantize({0.75, -2.5, 3.25, 0.125}, 4, 3);
  CHECK(bv.shared_exponent == 16);
  CHECK(bv.mantissa_bits == 3);
  REQUIRE(bv.block_length() == 4);
  CHECK(bv.elements[0].sign == 0);
  CHECK(bv.elements[0].mantissa == 2);
  CHECK(bv.element_value(0) == 1.0);  // 0.75 ties up to 1.0 (even mantissa)
  CHECK(bv.elements[1].sign == 1);
  CHECK(bv.element_value(1) == -2.5);
  CHECK(bv.element_value(2) == 3.0);  // 3.25 ties down to 3.0 (even mantissa)
  CHECK(bv.element_value(3) == 0.0);
  const auto vals = bv.values();
  CHECK(vals == std::vector<double>{1.0, -2.5, 3.0, 0.0});
}

TEST_CASE("blocked quantization edge rules") {
  // All-zero block encodes exponent code 0.
  const BlockedVector z = block_quantize({0.0, 0.0, 0.0}, 3, 4);
  CHECK(z.shared_exponent == 0);
  for (int i = 0; i < 3; ++i) CHECK(z.element_value(i) == 0.0);
  // The exponent bumps once when the block maximum rounds across a binade.
  const BlockedVector b = block_quantize({3.9, 0.0}, 2, 2);
  CHECK(b.shared_exponent == 17);
  CHECK(b.element_value(0) == 4.0);
  // Mantissa width limits.
  CHECK_THROWS_AS(block_quantize({1.0}, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(block_quantize({1.0}, 1, 6), std::invalid_argument);
  CHECK_THROWS_AS(block_quantize({1.0, 2.0}, 3, 4), std::invalid_argument);
  CHECK_THROWS_AS(block_quantize({std::numeric_limits<double>::quiet_NaN()}, 1, 4),
                  std::domain_error);
  // Negative zero input normalizes to a positive-signed zero element.
  const BlockedVector nz = block_quantize({-0.0, 1.0}, 2, 3);
  CHECK(nz.elements[0].sign == 0);
  CHECK(nz.elements[0].mantissa == 0);
}

TEST_CASE("blocked quantization matches the arithmetic-route oracle") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> v;
    const int n = 1 + int(rng.next() % 24);
    for (int i = 0; i < n; ++i)
      v.push_back(std::ldexp(rng.uniform(-1.0, 1.0), int(rng.next() % 30) - 15));
    for (int m = 2; m <= 5; ++m) {
      const BlockedVector bv = block_quantize(v, n, m);
      const auto want = reference::block_quantize_values(v, m);
      for (int i = 0; i < n; ++i) CHECK(bv.element_value(i) == want[size_t(i)]);
    }
  }
}

TEST_CASE("quantize_blocks chunks a long vector") {
  SplitMix64 rng(5);
  std::vector<double> v;
  for (int i = 0; i < 37; ++i) v.push_back(rng.uniform(-2.0, 2.0));
  const auto blocks = quantize_blocks(v, 16, 4);
  REQUIRE(blocks.size() == 3);
  CHECK(blocks[0].block_length() == 16);
  CHECK(blocks[1].block_length() == 16);
  CHECK(blocks[2].block_length() == 5);  // trailing partial block
  // Each block agrees with quantizing it alone.
  const std::vector<double> tail(v.begin() + 32, v.end());
  const BlockedVector lone = block_quantize(tail, 5, 4);
  CHECK(blocks[2].values() == lone.values());
}

TEST_CASE("mixed dot: frozen value and staged-oracle agreement") {
  std::vector<Float8> a, b;
  std::vector<std::uint8_t> ab, bb;
  for (int i = 0; i < 64; ++i) {
    const auto x = std::uint8_t((i * 37 + 11) & 0xFF);
    const auto y = std::uint8_t((i * 73 + 5) & 0xFF);
    a.push_back(Float8::from_bits(x));
    b.push_back(Float8::from_bits(y));
    ab.push_back(x);
    bb.push_back(y);
  }
  const float frozen = as_float_bits(0xC6EFCBD4u);  // -30693.9140625
  CHECK(mixed_dot(a, b, 16) == frozen);
  CHECK(reference::mixed_dot(ab, bb, 16) == frozen);
  CHECK(mixed_dot(a, b, 4) == frozen);  // same value at this length, also frozen

  SplitMix64 rng(7);
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<Float8> ra, rb;
    std::vector<std::uint8_t> rab, rbb;
    const int groups = 1 + int(rng.next() % 3);
    for (int i = 0; i < 64 * groups; ++i) {
      const auto x = std::uint8_t(rng.next() & 0xFF);
      const auto y = std::uint8_t(rng.next() & 0xFF);
      ra.push_back(Float8::from_bits(x));
      rb.push_back(Float8::from_bits(y));
      rab.push_back(x);
      rbb.push_back(y);
    }
    const float got = mixed_dot(ra, rb, 16);
    const float want = reference::mixed_dot(rab, rbb, 16);
    CHECK(float_bits(got) == float_bits(want));
  }
}

TEST_CASE("mixed dot input contracts") {
  std::vector<Float8> v(64, quantize_f8(1.0));
  CHECK_THROWS_AS(mixed_dot(v, std::vector<Float8>(63, quantize_f8(1.0)), 16),
                  std::invalid_argument);
  CHECK_THROWS_AS(mixed_dot({}, {}, 16), std::invalid_argument);
  CHECK_THROWS_AS(mixed_dot(std::vector<Float8>(60, quantize_f8(1.0)),
                            std::vector<Float8>(60, quantize_f8(1.0)), 16),
                  std::invalid_argument);
  CHECK_THROWS_AS(mixed_dot(v, v, 3), std::invalid_argument);
  CHECK_THROWS_AS(mixed_dot(v, v, 0), std::invalid_argument);
  // The error names the required multiple.
  try {
    mixed_dot(std::vector<Float8>(60, quantize_f8(1.0)),
              std::vector<Float8>(60, quantize_f8(1.0)), 16);
    CHECK(false);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("64") != std::string::npos);
  }
}

TEST_CASE("mixed dot saturating products overflow to infinity coherently") {
  // 480*480 overflows binary16 to +inf in every lane; the reduction stays +inf.
  std::vector<Float8> big(64, Float8::from_bits(0x7F));
  const float v = mixed_dot(big, big, 16);
  CHECK(std::isinf(v));
  CHECK(v > 0);
  // Mixing +inf and -inf products yields NaN identically in both routes.
  std::vector<Float8> alt = big;
  for (size_t i = 0; i < alt.size(); i += 2) alt[i] = Float8::from_bits(0xFF);
  const float nan_impl = mixed_dot(alt, big, 16);
  std::vector<std::uint8_t> altb(64, 0x7F), bigb(64, 0x7F);
  for (size_t i = 0; i < altb.size(); i += 2) altb[i] = 0xFF;
  const float nan_ref = reference::mixed_dot(altb, bigb, 16);
  CHECK(std::isnan(nan_impl));
  CHECK(float_bits(nan_impl) == float_bits(nan_ref));
}

TEST_CASE("mixed dot equals the plain dot when nothing rounds") {
  // Small integers: every product and partial sum is exact in binary16
  // until the f32 stages, so the staged pipeline equals the exact dot.
  std::vector<Float8> a, b;
  double exact = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double av = double((i % 5) - 2);       // -2..2
    const double bv = double((i % 3) - 1);       // -1..1
    a.push_back(quantize_f8(av));
    b.push_back(quantize_f8(bv));
    exact += av * bv;
  }
  CHECK(mixed_dot(a, b, 16) == float(exact));
}

}  // TEST_SUITE
