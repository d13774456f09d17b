// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

#include "core/half.hpp"
#include "core/hash.hpp"
#include "core/math.hpp"

using namespace dppt;

TEST_CASE("half conversion preserves exactly representable values") {
  for (float f : {0.f, 1.f, -1.f, 0.5f, 2.f, 1024.f, -0.25f, 65504.f}) {
    CHECK(halfToFloat(floatToHalf(f)) == f);
  }
}

TEST_CASE("half conversion preserves signed zero") {
  CHECK(floatToHalf(0.f) == 0x0000);
  CHECK(floatToHalf(-0.f) == 0x8000);
  CHECK(std::bit_cast<uint32_t>(halfToFloat(0x8000)) == 0x80000000u);
}

TEST_CASE("half conversion flushes subnormals to signed zero") {
  CHECK(floatToHalf(1e-8f) == 0x0000);
  CHECK(floatToHalf(-1e-8f) == 0x8000);
  CHECK(floatToHalf(5.9e-5f) == 0x0000);  // below smallest f16 normal
}

TEST_CASE("half conversion saturates and handles non-finite") {
  CHECK(floatToHalf(1e6f) == 0x7c00);
  CHECK(floatToHalf(-1e6f) == 0xfc00);
  CHECK(halfToFloat(floatToHalf(kInf)) == kInf);
  CHECK(std::isnan(halfToFloat(floatToHalf(std::nanf("")))));
}

TEST_CASE("half rounding is round-to-nearest-even") {
  // 1 + 1/2048 is exactly between 1.0 and the next f16 (1 + 1/1024): ties to even (1.0).
  CHECK(floatToHalf(1.f + 1.f / 2048.f) == floatToHalf(1.f));
  // 1 + 3/2048 ties between 1+1/1024 and 1+2/1024: rounds to even mantissa (1+2/1024).
  CHECK(floatToHalf(1.f + 3.f / 2048.f) == floatToHalf(1.f + 2.f / 1024.f));
}

TEST_CASE("quantizeHalf is idempotent") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> d(-100.f, 100.f);
  for (int i = 0; i < 1000; ++i) {
    float q = quantizeHalf(d(rng));
    CHECK(quantizeHalf(q) == q);
  }
}

TEST_CASE("rng streams are deterministic and stream-separated") {
  CHECK(rngFloat(1, 2, 3, RngStream::Bsdf, 0) == rngFloat(1, 2, 3, RngStream::Bsdf, 0));
  CHECK(rngFloat(1, 2, 3, RngStream::Bsdf, 0) != rngFloat(1, 2, 3, RngStream::Bsdf, 1));
  CHECK(rngFloat(1, 2, 3, RngStream::Bsdf, 0) != rngFloat(1, 2, 3, RngStream::LightPoint, 0));
  CHECK(rngFloat(1, 2, 3, RngStream::Bsdf, 0) != rngFloat(1, 2, 4, RngStream::Bsdf, 0));
}

TEST_CASE("rng floats land in [0,1) and look uniform") {
  double sum = 0;
  for (uint32_t i = 0; i < 10000; ++i) {
    float f = rngFloat(42, i, 0, RngStream::CameraJitter, 0);
    CHECK(f >= 0.f);
    CHECK(f < 1.f);
    sum += f;
  }
  CHECK(sum / 10000 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("nthSetBit walks set bits in order") {
  uint64_t m = (1ull << 3) | (1ull << 17) | (1ull << 63);
  CHECK(nthSetBit(m, 0) == 3);
  CHECK(nthSetBit(m, 1) == 17);
  CHECK(nthSetBit(m, 2) == 63);
  CHECK(popcount64(m) == 3);
}

TEST_CASE("pickSeed depends on all of its inputs") {
  CHECK(pickSeed(1, 2, 3) == pickSeed(1, 2, 3));
  CHECK(pickSeed(1, 2, 3) != pickSeed(2, 2, 3));
  CHECK(pickSeed(1, 2, 3) != pickSeed(1, 3, 3));
  CHECK(pickSeed(1, 2, 3) != pickSeed(1, 2, 4));
}

TEST_CASE("aabb intersection and slab test agree") {
  Aabb b;
  b.extend({0, 0, 0});
  b.extend({1, 2, 3});
  Vec3 org{-1, 1, 1};
  Vec3 dir{1, 0, 0};
  Vec3 inv{1.f / dir.x, 1.f / dir.y, 1.f / dir.z};
  float tn, tf;
  REQUIRE(intersectBox(b, org, inv, 0.f, kInf, tn, tf));
  CHECK(tn == doctest::Approx(1.f));
  CHECK(tf == doctest::Approx(2.f));
  // Miss above the box.
  org.y = 5;
  CHECK_FALSE(intersectBox(b, org, inv, 0.f, kInf, tn, tf));
}

TEST_CASE("slab test handles rays lying in a box face") {
  // Zero direction components make invDir infinite; an origin exactly on a
  // face must still register as inside that slab, for either zero sign.
  Aabb b;
  b.extend({0, 0, 0});
  b.extend({2, 2, 2});
  float tn, tf;
  for (float zero : {0.f, -0.f}) {
    Vec3 org{2, 1, -1};
    Vec3 dir{zero, zero, 1};
    Vec3 inv{1.f / dir.x, 1.f / dir.y, 1.f / dir.z};
    REQUIRE(intersectBox(b, org, inv, 0.f, kInf, tn, tf));
    CHECK(tn == doctest::Approx(1.f));
    CHECK(tf == doctest::Approx(3.f));
    // Parallel but outside the slab: a clean miss.
    org.x = 2.5f;
    CHECK_FALSE(intersectBox(b, org, inv, 0.f, kInf, tn, tf));
  }
}

TEST_CASE("affine inverse round-trips points") {
  Affine3 a = Affine3::translate({1, -2, 3}) * Affine3::rotateY(0.7f) * Affine3::scale(2.5f);
  Affine3 inv = inverse(a);
  std::mt19937 rng(11);
  std::uniform_real_distribution<float> d(-10.f, 10.f);
  for (int i = 0; i < 100; ++i) {
    Vec3 p{d(rng), d(rng), d(rng)};
    Vec3 q = inv.applyPoint(a.applyPoint(p));
    CHECK(length(q - p) < 1e-4f);
  }
}

TEST_CASE("buildBasis returns an orthonormal frame") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> d(-1.f, 1.f);
  for (int i = 0; i < 200; ++i) {
    Vec3 n = normalize({d(rng), d(rng), d(rng) + 1.01f});
    Vec3 t, b;
    buildBasis(n, t, b);
    CHECK(std::abs(dot(t, n)) < 1e-5f);
    CHECK(std::abs(dot(b, n)) < 1e-5f);
    CHECK(std::abs(dot(t, b)) < 1e-5f);
    CHECK(length(t) == doctest::Approx(1.f).epsilon(1e-4));
    CHECK(length(b) == doctest::Approx(1.f).epsilon(1e-4));
  }
}
