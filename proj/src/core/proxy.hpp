// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "core/accel.hpp"
#include "core/math.hpp"

namespace dppt {

// Bit i set <=> rank i. Stored as 64 bits in memory; the configured mask
// width (8 or 64) only matters at serialization boundaries.
using RankMask = uint64_t;

struct Proxy {
  Aabb bounds;
  RankMask owners = 0;  // non-empty; boxes may overlap arbitrarily
};

struct ProxySet {
  std::vector<Proxy> proxies;

  std::vector<uint8_t> encode() const;  // count-prefixed {lo,hi,owners} records
  static ProxySet decode(const uint8_t* data, size_t size);
  uint64_t digest() const;
};

// BVH over proxy boxes supporting filtered nearest-entry queries. Built with
// the same deterministic builder on every rank.
class ProxyBvh {
 public:
  static ProxyBvh build(const ProxySet& set);

  const ProxySet& set() const { return *set_; }

  // Closest eligible proxy for the ray: intersected in (tMin, tMax] (tMax
  // ignored when tmaxCulling is false), owners disjoint from `visited`.
  // Ties on entry distance go to the lower proxy index. Returns the proxy
  // index, or nullopt when the distributed traversal is complete.
  std::optional<uint32_t> closestEligible(const Ray& ray, RankMask visited,
                                          bool tmaxCulling) const;

 private:
  const ProxySet* set_ = nullptr;
  std::vector<TriBvh::Node> nodes_;
  std::vector<uint32_t> order_;
};

// Picks the n-th set bit of `owners` with n = seed mod popcount(owners).
int pickOwnerRank(RankMask owners, uint32_t seed);

// The forwarding operator: the rank the ray must be sent to next, or nullopt
// when no un-visited proxy is intersected.
std::optional<int> selectNextRank(const Ray& ray, RankMask visited, const ProxyBvh& bvh,
                                  bool tmaxCulling, uint32_t seed);

// Re-computes a ray's visited set from its origin rank by re-running the
// forwarding operator until it reaches selfRank. Requires tMax culling to be
// disabled engine-wide so the decision depends on ray geometry alone.
// `bounce` feeds the deterministic owner pick. Throws ProtocolError if the
// walk does not reach selfRank within rankCount hops.
RankMask replayVisited(const Ray& ray, int originRank, int selfRank, const ProxyBvh& bvh,
                       uint32_t pixelId, uint32_t bounce, int rankCount);

}  // namespace dppt
