// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>

#include "core/math.hpp"

namespace dppt {

// f32 -> f16, round-to-nearest-even. Signed zeros are preserved; values that
// would become f16 subnormals are flushed to signed zero so that encoded
// bytes are identical across platforms.
inline uint16_t floatToHalf(float f) {
  uint32_t x = std::bit_cast<uint32_t>(f);
  uint16_t sign = uint16_t((x >> 16) & 0x8000u);
  uint32_t em = x & 0x7fffffffu;
  if (em >= 0x7f800000u) {  // inf / nan
    uint16_t mant = em > 0x7f800000u ? 0x0200 : 0x0000;
    return uint16_t(sign | 0x7c00u | mant);
  }
  if (em >= 0x47800000u) return uint16_t(sign | 0x7c00u);  // overflow -> inf
  if (em < 0x38800000u) return sign;                       // flush subnormal to zero
  uint32_t mant = em & 0x7fffffu;
  uint32_t exp = (em >> 23) - 127 + 15;
  uint32_t h = (exp << 10) | (mant >> 13);
  uint32_t rem = mant & 0x1fffu;
  if (rem > 0x1000u || (rem == 0x1000u && (h & 1u))) ++h;  // RNE; carry may hit inf
  return uint16_t(sign | h);
}

inline float halfToFloat(uint16_t h) {
  uint32_t sign = uint32_t(h & 0x8000u) << 16;
  uint32_t em = h & 0x7fffu;
  if (em == 0) return std::bit_cast<float>(sign);
  uint32_t exp = em >> 10;
  uint32_t mant = em & 0x3ffu;
  if (exp == 0) return std::bit_cast<float>(sign);  // subnormals never encoded
  if (exp == 31) return std::bit_cast<float>(sign | 0x7f800000u | (mant << 13));
  return std::bit_cast<float>(sign | ((exp - 15 + 127) << 23) | (mant << 13));
}

inline float quantizeHalf(float f) { return halfToFloat(floatToHalf(f)); }

inline Vec3 quantizeHalf(const Vec3& v) {
  return {quantizeHalf(v.x), quantizeHalf(v.y), quantizeHalf(v.z)};
}

}  // namespace dppt
