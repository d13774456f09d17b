// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>

namespace dppt {

// murmur3 finalizer
inline uint32_t fmix32(uint32_t h) {
  h ^= h >> 16;
  h *= 0x85ebca6bu;
  h ^= h >> 13;
  h *= 0xc2b2ae35u;
  h ^= h >> 16;
  return h;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t hashCombine(uint64_t a, uint64_t b) {
  return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

// Seed used when pseudo-randomly picking one rank out of an owner mask. Must
// be computable by any rank from the ray alone, so it only depends on the
// pixel, the bounce, and how many ranks the ray has visited so far.
inline uint32_t pickSeed(uint32_t pixelId, uint32_t bounce, uint32_t visitedCount) {
  uint32_t h = fmix32(pixelId ^ 0x2545f491u);
  h = fmix32(h ^ (bounce * 0x9e3779b9u));
  h = fmix32(h ^ (visitedCount * 0x85ebca6bu));
  return h;
}

inline int popcount64(uint64_t m) { return std::popcount(m); }

// n-th set bit of a mask (n < popcount). Returns the bit index.
inline int nthSetBit(uint64_t mask, int n) {
  for (int i = 0; i < 64; ++i) {
    if (mask & (1ull << i)) {
      if (n == 0) return i;
      --n;
    }
  }
  return -1;
}

// Counter-based sample generator: the value drawn for a given
// (frameSeed, pixel, bounce, stream, index) key never depends on which rank
// evaluates it, which keeps distributed renders comparable to the
// single-node reference.
enum class RngStream : uint32_t {
  CameraJitter = 0,
  Bsdf = 1,
  LightReservoir = 2,
  LightPoint = 3,
  Roulette = 4,
};

inline uint64_t rngBits(uint64_t frameSeed, uint32_t pixelId, uint32_t bounce, RngStream stream,
                        uint32_t index) {
  uint64_t k = frameSeed;
  k = hashCombine(k, pixelId);
  k = hashCombine(k, (uint64_t(bounce) << 32) | uint32_t(stream));
  k = hashCombine(k, index);
  return k;
}

inline float rngFloat(uint64_t frameSeed, uint32_t pixelId, uint32_t bounce, RngStream stream,
                      uint32_t index) {
  return float(rngBits(frameSeed, pixelId, bounce, stream, index) >> 40) * 0x1p-24f;
}

}  // namespace dppt
