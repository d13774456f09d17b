// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "core/metrics.hpp"
#include "core/partition.hpp"
#include "core/proxy.hpp"
#include "core/scene.hpp"
#include "core/transport.hpp"
#include "core/wire.hpp"

namespace dppt {

struct RenderConfig {
  int width = 128;
  int height = 128;
  int spp = 1;
  int maxBounce = 4;
  uint64_t seed = 0;
  MaskMode maskMode = MaskMode::Bitmask8;
  float rouletteQ = 0.1f;  // rejection-sampling throughput threshold
  Camera camera;
};

// Test instrumentation: called once per (ray, rank) trace visit inside the
// distributed traversal, before the rank merges itself into the visited set.
// Shade-bound deliveries do not count as visits.
struct DebugHooks {
  std::function<void(uint32_t sample, uint32_t epoch, int rank, const PathState& path)> onVisit;
};

// Runs one rank's share of a full frame: scene-digest handshake, per-sample
// wavefront loop (proxy-guided primary generation, distributed traversal,
// shading), direct-send compositing, and a stats gather. Returns the full
// accumulation buffer (radiance sums over spp) on rank 0, empty elsewhere;
// `stats` is likewise only populated on rank 0.
std::vector<Vec3> renderRankFrame(RankGroup& group, const Scene& scene,
                                  const PartitionPlan& plan, const ProxySet& proxySet,
                                  const RenderConfig& cfg, FrameStats& stats,
                                  const DebugHooks* hooks = nullptr);

// Deterministic camera ray for a pixel (direction f16-quantized).
Ray cameraRay(const Camera& camera, int width, int height, uint32_t pixel, uint64_t frameSeed);

// Convenience driver: runs plan.rankCount logical ranks on threads over the
// in-process backend and returns rank 0's assembled accumulation buffer.
// Exceptions from any rank are re-thrown on the calling thread.
std::vector<Vec3> renderInProc(const Scene& scene, const PartitionPlan& plan,
                               const ProxySet& proxySet, const RenderConfig& cfg,
                               FrameStats& stats, const DebugHooks* hooks = nullptr);

}  // namespace dppt
