// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/accel.hpp"
#include "core/proxy.hpp"
#include "core/scene.hpp"

namespace dppt {

enum class Strategy {
  SpatialSimple,
  SpatialSah,
  ObjectNaive,
  ObjectProxies,
  BvhStyle,
  Best,
};

Strategy strategyFromName(const std::string& name);
std::string strategyName(Strategy s);
const std::vector<Strategy>& allStrategies();

// Per-item byte weights for the hardware-agnostic memory estimate.
struct MemoryModel {
  double bytesPerTriangle = 24;
  double bytesPerVertex = 24;
  double bytesPerMesh = 128;
  double bytesPerInstance = 64;
};

struct PartitionOptions {
  MemoryModel model;
  double replicationCap = 0.05;  // fraction of items `best` may duplicate
  int braidMaxBoxes = 64;
};

// The unit of partitioning. Object items carry whole objects (all their
// instances); single-instance objects are broken into per-mesh items for the
// spatial / hybrid modes, and `best` further braids large meshes into
// triangle-subset fragments.
struct PartItem {
  enum class Kind { Object, Instance, MeshPart, Fragment };
  Kind kind = Kind::Instance;
  uint32_t object = 0;
  uint32_t instance = 0;            // unused for Kind::Object
  uint32_t mesh = 0;                // MeshPart / Fragment
  std::vector<uint32_t> triangles;  // Fragment only (mesh-level ids)
  Aabb box;                         // world bounds
};

struct PartitionPlan {
  int rankCount = 1;
  Strategy strategy = Strategy::ObjectNaive;
  PartitionOptions options;
  std::vector<PartItem> items;
  std::vector<RankMask> itemOwners;  // one mask per item, non-zero
  std::vector<Aabb> domains;         // spatial modes only: one per rank
  double replicationFraction = 0.0;

  uint64_t digest() const;
};

// Bytes needed to hold the union of the given items: unique meshes weighted
// by triangle/vertex counts plus flat per-mesh and per-instance costs. A mesh
// referenced by several instances in the same part is counted once.
double memoryEstimate(const Scene& scene, const std::vector<PartItem>& items,
                      const std::vector<uint32_t>& ids, const MemoryModel& model);
double wholeSceneEstimate(const Scene& scene, const MemoryModel& model);

// Blended cost of splitting `part` at plane (axis, pos): 50:50 between SAH
// and the memory estimates, both normalized to the unsplit part. Membership
// is by box-centroid sidedness; +inf for degenerate (one-sided) splits.
double splitCost(const Scene& scene, const std::vector<PartItem>& items,
                 const std::vector<uint32_t>& part, int axis, float pos,
                 const MemoryModel& model);

PartitionPlan partition(const Scene& scene, int rankCount, Strategy strategy,
                        const PartitionOptions& options = {});

// Memory estimate of the largest part for N = 1..nMax.
std::vector<std::pair<int, double>> maxPartSizeCurve(const Scene& scene, Strategy strategy,
                                                     const MemoryModel& model, int nMax);

enum class ProxyMode { DomainBoxes, ItemBoxes, OnePerInstance, Braided };
ProxyMode defaultProxyMode(Strategy s);
ProxySet buildProxySet(const Scene& scene, const PartitionPlan& plan, ProxyMode mode,
                       int braidK = 64);

// Rank-local geometry units (shared mesh BVHs via the cache).
struct GeometryCache {
  std::vector<std::shared_ptr<const TriBvh>> wholeMesh;           // per scene mesh
  std::vector<std::shared_ptr<const TriBvh>> fragment;            // per plan item
};
std::vector<GeomUnit> buildRankGeometry(const Scene& scene, const PartitionPlan& plan, int rank,
                                        GeometryCache& cache);

// CLI dumps
std::string planToJson(const Scene& scene, const PartitionPlan& plan);
std::string proxyBoxesToObj(const ProxySet& set);

}  // namespace dppt
