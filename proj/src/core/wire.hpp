// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/math.hpp"
#include "core/proxy.hpp"

namespace dppt {

// How a forwarded ray carries its visited-ranks information.
//   Bitmask8  : 8-bit visited mask on the wire, tMax culling enabled.
//   Bitmask64 : 64-bit visited mask, tMax culling enabled.
//   Replay    : only the origin rank travels; receivers re-run the forwarding
//               walk to reconstruct the visited set. Requires tMax culling to
//               be off so the walk depends on ray geometry alone.
enum class MaskMode { Bitmask8, Bitmask64, Replay };

MaskMode maskModeFromName(const std::string& name);
std::string maskModeName(MaskMode m);

struct WireConfig {
  MaskMode maskMode = MaskMode::Bitmask8;
  int rankCount = 1;

  bool tmaxCulling() const { return maskMode != MaskMode::Replay; }

  // Width of the visited and hitOwners fields on the wire.
  size_t maskBytes() const {
    if (maskMode == MaskMode::Bitmask64) return 8;
    if (maskMode == MaskMode::Bitmask8 || rankCount <= 8) return 1;
    return 8;
  }

  // 12 (origin) + 6 (dir) + 6 (throughput) + 4 (tMax) + 4 (pixelAndFlags)
  // + 2x mask field, padded to a multiple of 4.
  size_t recordSize() const {
    size_t raw = 32 + 2 * maskBytes();
    return (raw + 3) & ~size_t(3);
  }
};

// Flag bits inside pixelAndFlags.
constexpr uint32_t kPixelMask = 0x0fffffffu;
constexpr uint32_t kFlagShadow = 1u << 28;
constexpr uint32_t kFlagInMedium = 1u << 29;
// Traversal finished; the ray only travels to a hit owner for shading.
constexpr uint32_t kFlagShadeBound = 1u << 30;

// Shadow rays use this tMax sentinel once an occluder was found.
constexpr float kOccludedSentinel = -1.0f;

// In-memory form of a forwarded path. Direction and throughput are kept
// f16-quantized from the moment a ray is spawned so that serialization is
// lossless and results do not depend on how often a ray crossed the wire.
struct PathState {
  Vec3 origin{0, 0, 0};
  Vec3 dir{0, 0, 1};
  Vec3 throughput{1, 1, 1};
  float tMax = kInf;
  uint32_t pixelAndFlags = 0;
  RankMask visited = 0;
  RankMask hitOwners = 0;
  uint8_t originRank = 0;  // rank that spawned the ray; wire field in replay mode

  uint32_t pixel() const { return pixelAndFlags & kPixelMask; }
  bool isShadow() const { return pixelAndFlags & kFlagShadow; }
  bool isShadeBound() const { return pixelAndFlags & kFlagShadeBound; }
  bool occluded() const { return tMax == kOccludedSentinel; }

  bool operator==(const PathState&) const = default;
};

// Serialized little-endian layout (record size per WireConfig):
//   [0]  origin      3 x f32
//   [12] direction   3 x f16
//   [18] throughput  3 x f16
//   [24] tMax        f32
//   [28] pixelAndFlags u32
//   [32] visited (or originRank in replay mode), maskBytes wide
//   [..] hitOwners, maskBytes wide
//   [..] zero padding to a multiple of 4
void encodeRecord(const PathState& p, const WireConfig& cfg, uint8_t* out);
PathState decodeRecord(const uint8_t* data, const WireConfig& cfg);

std::vector<uint8_t> encodeRecords(const std::vector<PathState>& paths, const WireConfig& cfg);
std::vector<PathState> decodeRecords(const uint8_t* data, size_t size, const WireConfig& cfg);

}  // namespace dppt
