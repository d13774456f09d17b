// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/reference.hpp"

#include "core/partition.hpp"

namespace dppt {

std::vector<Vec3> renderReference(const Scene& scene, const RenderConfig& cfg) {
  PartitionPlan plan = partition(scene, 1, Strategy::ObjectNaive);
  ProxySet proxySet = buildProxySet(scene, plan, defaultProxyMode(plan.strategy));
  FrameStats stats;
  return renderInProc(scene, plan, proxySet, cfg, stats);
}

std::optional<int> forwardOracle(const Ray& ray, RankMask visited, const ProxySet& proxies,
                                 bool tmaxCulling, uint32_t seed) {
  Vec3 invDir{1.f / ray.dir.x, 1.f / ray.dir.y, 1.f / ray.dir.z};
  float cullLimit = tmaxCulling ? ray.tMax : kInf;
  float bestEntry = kInf;
  int best = -1;
  for (size_t i = 0; i < proxies.proxies.size(); ++i) {
    const Proxy& p = proxies.proxies[i];
    if (p.owners & visited) continue;
    float tn, tf;
    if (!intersectBox(p.bounds, ray.origin, invDir, ray.tMin, cullLimit, tn, tf)) continue;
    float entry = std::max(tn, ray.tMin);
    if (entry < bestEntry) {  // strict: ties keep the lower proxy index
      bestEntry = entry;
      best = int(i);
    }
  }
  if (best < 0) return std::nullopt;
  return pickOwnerRank(proxies.proxies[size_t(best)].owners, seed);
}

}  // namespace dppt
