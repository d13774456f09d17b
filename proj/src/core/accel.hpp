// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "core/math.hpp"
#include "core/scene.hpp"

namespace dppt {

struct Ray {
  Vec3 origin;
  Vec3 dir;
  float tMin = 0.f;
  float tMax = kInf;
};

struct Hit {
  float t = kInf;
  uint32_t instanceId = 0;
  uint32_t primitiveId = 0;  // triangle id, offset across the object's meshes
  Vec3 normal;               // geometric, world space, unit length
  float baryU = 0.f, baryV = 0.f;
  int unit = -1;  // index of the GeomUnit the hit came from (local only)
};

// Deterministic tie-break for equal-t hits: lower (instanceId, primitiveId)
// wins. Required so every rank resolves the same closest hit.
inline bool hitBeats(float t, uint32_t inst, uint32_t prim, const Hit& best) {
  if (t != best.t) return t < best.t;
  if (inst != best.instanceId) return inst < best.instanceId;
  return prim < best.primitiveId;
}

// Watertight-enough triangle test: Moller-Trumbore with a fixed determinant
// epsilon. Hits are accepted in (tMin, tMax].
bool intersectTriangle(const Vec3& org, const Vec3& dir, const Vec3& a, const Vec3& b,
                       const Vec3& c, float tMin, float tMax, float& t, float& u, float& v);

// Binary BVH over a subset of one mesh's triangles (model space).
class TriBvh {
 public:
  struct Node {
    Aabb bounds;
    uint32_t leftOrFirst = 0;
    uint32_t count = 0;  // 0 = inner node
  };

  // Build over all triangles, or an explicit subset of triangle ids.
  static TriBvh build(const Mesh& mesh);
  static TriBvh build(const Mesh& mesh, std::vector<uint32_t> triangleIds);

  const Mesh& mesh() const { return *mesh_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<uint32_t>& triangleIds() const { return order_; }
  const Aabb& bounds() const { return nodes_[0].bounds; }

  // Closest hit in (tMin, tMax], model space; primitiveId is the mesh-level
  // triangle id. Returns hits with normal left unset (filled by the caller).
  bool intersect(const Ray& ray, Hit& hit) const;
  bool occluded(const Ray& ray) const;

 private:
  const Mesh* mesh_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<uint32_t> order_;
};

// Splits a mesh into at most maxBoxes disjoint triangle subsets by running
// top-down BVH partitioning, always splitting the leaf with the largest
// surface area next. Boxes are tight bounds of their subsets.
struct BraidFragment {
  Aabb bounds;
  std::vector<uint32_t> triangles;
};
std::vector<BraidFragment> braidSplit(const Mesh& mesh, int maxBoxes);

// One instanced piece of rank-local geometry: a (possibly partial) mesh BVH
// placed by an instance transform, tagged with the owner mask of the ranks
// this piece is assigned to.
struct GeomUnit {
  std::shared_ptr<const TriBvh> bvh;
  Affine3 objectToWorld;
  Affine3 worldToObject;
  Aabb worldBounds;
  uint32_t instanceId = 0;
  uint32_t primitiveOffset = 0;  // mesh-level triangle id -> object-level primitive id
  uint32_t material = 0;
  uint64_t owners = 0;
};

// Two-level structure: a BVH over GeomUnit world bounds, rays transformed
// into model space per unit.
class LocalGeometry {
 public:
  static LocalGeometry build(std::vector<GeomUnit> units);

  const std::vector<GeomUnit>& units() const { return units_; }
  bool empty() const { return units_.empty(); }

  std::optional<Hit> intersect(const Ray& ray) const;
  bool occluded(const Ray& ray) const;

  // Owner mask of the unit a hit came from.
  uint64_t hitOwners(const Hit& hit) const;
  uint32_t hitMaterial(const Hit& hit) const;

 private:
  std::vector<GeomUnit> units_;
  std::vector<TriBvh::Node> nodes_;  // leaves index units_
  std::vector<uint32_t> order_;
};

}  // namespace dppt
