// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/accel.hpp"

#include <algorithm>
#include <functional>
#include <queue>

#include "core/error.hpp"

namespace dppt {

bool intersectTriangle(const Vec3& org, const Vec3& dir, const Vec3& a, const Vec3& b,
                       const Vec3& c, float tMin, float tMax, float& t, float& u, float& v) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = cross(dir, e2);
  const float det = dot(e1, p);
  if (std::fabs(det) < 1e-7f) return false;
  const float invDet = 1.f / det;
  const Vec3 s = org - a;
  u = dot(s, p) * invDet;
  if (u < 0.f || u > 1.f) return false;
  const Vec3 q = cross(s, e1);
  v = dot(dir, q) * invDet;
  if (v < 0.f || u + v > 1.f) return false;
  t = dot(e2, q) * invDet;
  return t > tMin && t <= tMax;
}

// ---------------------------------------------------------------------------
// Shared binned-SAH splitter (16 bins, median fallback on degenerate spreads).

namespace {

constexpr int kBinCount = 16;
constexpr uint32_t kMaxLeafSize = 4;

struct PrimInfo {
  Aabb bounds;
  Vec3 centroid;
};

// Partitions ids[begin,end) in place; returns the split point, or begin/end
// unchanged semantics are avoided: always returns a proper interior point for
// ranges of size >= 2.
size_t splitRange(std::vector<uint32_t>& ids, size_t begin, size_t end,
                  const std::vector<PrimInfo>& prims, bool forceMedian = false) {
  Aabb centroidBounds;
  for (size_t i = begin; i < end; ++i) centroidBounds.extend(prims[ids[i]].centroid);

  int bestAxis = forceMedian ? -2 : -1;
  int bestBin = -1;
  float bestCost = kInf;
  for (int axis = 0; bestAxis != -2 && axis < 3; ++axis) {
    float lo = centroidBounds.lo[axis], hi = centroidBounds.hi[axis];
    if (hi - lo < 1e-12f) continue;
    float scale = float(kBinCount) / (hi - lo);
    Aabb binBounds[kBinCount];
    uint32_t binCount[kBinCount] = {};
    for (size_t i = begin; i < end; ++i) {
      const PrimInfo& p = prims[ids[i]];
      int bin = std::min(kBinCount - 1, int((p.centroid[axis] - lo) * scale));
      binBounds[bin].extend(p.bounds);
      ++binCount[bin];
    }
    Aabb rightAcc[kBinCount];
    Aabb acc;
    for (int b = kBinCount - 1; b > 0; --b) {
      acc.extend(binBounds[b]);
      rightAcc[b] = acc;
    }
    Aabb leftAcc;
    uint32_t leftN = 0;
    for (int b = 0; b < kBinCount - 1; ++b) {
      leftAcc.extend(binBounds[b]);
      leftN += binCount[b];
      uint32_t rightN = uint32_t(end - begin) - leftN;
      if (leftN == 0 || rightN == 0) continue;
      float cost = leftAcc.surfaceArea() * float(leftN) + rightAcc[b + 1].surfaceArea() * float(rightN);
      if (cost < bestCost) {
        bestCost = cost;
        bestAxis = axis;
        bestBin = b;
      }
    }
  }

  if (bestAxis >= 0) {
    float lo = centroidBounds.lo[bestAxis];
    float scale = float(kBinCount) / (centroidBounds.hi[bestAxis] - lo);
    auto side = [&](uint32_t id) {
      return std::min(kBinCount - 1, int((prims[id].centroid[bestAxis] - lo) * scale)) <= bestBin;
    };
    auto mid = std::stable_partition(ids.begin() + begin, ids.begin() + end, side);
    size_t m = size_t(mid - ids.begin());
    if (m > begin && m < end) return m;
  }
  // Median fallback: order by centroid on the widest axis, split at the middle.
  int axis = centroidBounds.empty() ? 0 : centroidBounds.longestAxis();
  size_t m = begin + (end - begin) / 2;
  std::nth_element(ids.begin() + begin, ids.begin() + m, ids.begin() + end,
                   [&](uint32_t a, uint32_t b) {
                     float ca = prims[a].centroid[axis], cb = prims[b].centroid[axis];
                     if (ca != cb) return ca < cb;
                     return a < b;
                   });
  return m;
}

Aabb rangeBounds(const std::vector<uint32_t>& ids, size_t begin, size_t end,
                 const std::vector<PrimInfo>& prims) {
  Aabb b;
  for (size_t i = begin; i < end; ++i) b.extend(prims[ids[i]].bounds);
  return b;
}

// Recursive top-down build shared by the triangle BVH and the two-level BVH.
// Past depth 32 splits fall back to index medians, bounding tree depth (and
// with it the fixed traversal stacks) even for adversarial inputs.
void buildNodes(std::vector<TriBvh::Node>& nodes, std::vector<uint32_t>& ids,
                const std::vector<PrimInfo>& prims, uint32_t nodeIdx, size_t begin, size_t end,
                int depth = 0) {
  nodes[nodeIdx].bounds = rangeBounds(ids, begin, end, prims);
  if (end - begin <= kMaxLeafSize) {
    nodes[nodeIdx].leftOrFirst = uint32_t(begin);
    nodes[nodeIdx].count = uint32_t(end - begin);
    return;
  }
  size_t mid = splitRange(ids, begin, end, prims, depth > 32);
  uint32_t left = uint32_t(nodes.size());
  nodes[nodeIdx].leftOrFirst = left;
  nodes[nodeIdx].count = 0;
  nodes.emplace_back();
  nodes.emplace_back();
  buildNodes(nodes, ids, prims, left, begin, mid, depth + 1);
  buildNodes(nodes, ids, prims, left + 1, mid, end, depth + 1);
}

std::vector<PrimInfo> trianglePrims(const Mesh& mesh, const std::vector<uint32_t>& ids) {
  std::vector<PrimInfo> prims(mesh.triangles.size());
  for (uint32_t id : ids) {
    const auto& tri = mesh.triangles[id];
    Aabb b;
    b.extend(mesh.vertices[tri[0]]);
    b.extend(mesh.vertices[tri[1]]);
    b.extend(mesh.vertices[tri[2]]);
    prims[id] = {b, b.center()};
  }
  return prims;
}

}  // namespace

// ---------------------------------------------------------------------------

TriBvh TriBvh::build(const Mesh& mesh) {
  std::vector<uint32_t> ids(mesh.triangles.size());
  for (uint32_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return build(mesh, std::move(ids));
}

TriBvh TriBvh::build(const Mesh& mesh, std::vector<uint32_t> triangleIds) {
  if (triangleIds.empty()) throw DomainError("TriBvh requires at least one triangle");
  TriBvh bvh;
  bvh.mesh_ = &mesh;
  bvh.order_ = std::move(triangleIds);
  std::vector<PrimInfo> prims = trianglePrims(mesh, bvh.order_);
  bvh.nodes_.emplace_back();
  buildNodes(bvh.nodes_, bvh.order_, prims, 0, 0, bvh.order_.size());
  return bvh;
}

bool TriBvh::intersect(const Ray& ray, Hit& hit) const {
  Vec3 invDir{1.f / ray.dir.x, 1.f / ray.dir.y, 1.f / ray.dir.z};
  hit.t = kInf;
  hit.primitiveId = UINT32_MAX;
  uint32_t stack[128];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const Node& node = nodes_[stack[--sp]];
    float tn, tf;
    float limit = std::min(ray.tMax, hit.t);
    if (!intersectBox(node.bounds, ray.origin, invDir, ray.tMin, limit, tn, tf)) continue;
    if (node.count > 0) {
      for (uint32_t i = 0; i < node.count; ++i) {
        uint32_t triId = order_[node.leftOrFirst + i];
        const auto& tri = mesh_->triangles[triId];
        float t, u, v;
        if (intersectTriangle(ray.origin, ray.dir, mesh_->vertices[tri[0]],
                              mesh_->vertices[tri[1]], mesh_->vertices[tri[2]], ray.tMin,
                              ray.tMax, t, u, v)) {
          if (t < hit.t || (t == hit.t && triId < hit.primitiveId)) {
            hit.t = t;
            hit.primitiveId = triId;
            hit.baryU = u;
            hit.baryV = v;
          }
        }
      }
    } else {
      // near child first
      uint32_t l = node.leftOrFirst, r = l + 1;
      float lt, lf, rt, rf;
      bool hl = intersectBox(nodes_[l].bounds, ray.origin, invDir, ray.tMin, limit, lt, lf);
      bool hr = intersectBox(nodes_[r].bounds, ray.origin, invDir, ray.tMin, limit, rt, rf);
      if (hl && hr) {
        if (lt <= rt) {
          stack[sp++] = r;
          stack[sp++] = l;
        } else {
          stack[sp++] = l;
          stack[sp++] = r;
        }
      } else if (hl) {
        stack[sp++] = l;
      } else if (hr) {
        stack[sp++] = r;
      }
    }
  }
  return hit.primitiveId != UINT32_MAX;
}

bool TriBvh::occluded(const Ray& ray) const {
  Vec3 invDir{1.f / ray.dir.x, 1.f / ray.dir.y, 1.f / ray.dir.z};
  uint32_t stack[128];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const Node& node = nodes_[stack[--sp]];
    float tn, tf;
    if (!intersectBox(node.bounds, ray.origin, invDir, ray.tMin, ray.tMax, tn, tf)) continue;
    if (node.count > 0) {
      for (uint32_t i = 0; i < node.count; ++i) {
        uint32_t triId = order_[node.leftOrFirst + i];
        const auto& tri = mesh_->triangles[triId];
        float t, u, v;
        if (intersectTriangle(ray.origin, ray.dir, mesh_->vertices[tri[0]],
                              mesh_->vertices[tri[1]], mesh_->vertices[tri[2]], ray.tMin,
                              ray.tMax, t, u, v))
          return true;
      }
    } else {
      stack[sp++] = node.leftOrFirst;
      stack[sp++] = node.leftOrFirst + 1;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------

std::vector<BraidFragment> braidSplit(const Mesh& mesh, int maxBoxes) {
  if (maxBoxes < 1) throw DomainError("braidSplit requires maxBoxes >= 1");
  std::vector<uint32_t> all(mesh.triangles.size());
  for (uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<PrimInfo> prims = trianglePrims(mesh, all);

  struct Leaf {
    std::vector<uint32_t> ids;
    Aabb bounds;
  };
  auto makeLeaf = [&](std::vector<uint32_t> ids) {
    Leaf l;
    l.bounds = rangeBounds(ids, 0, ids.size(), prims);
    l.ids = std::move(ids);
    return l;
  };
  std::vector<Leaf> leaves;
  leaves.push_back(makeLeaf(std::move(all)));

  while (int(leaves.size()) < maxBoxes) {
    // split the splittable leaf with the largest surface area next
    int pick = -1;
    float bestArea = -1.f;
    for (int i = 0; i < int(leaves.size()); ++i) {
      if (leaves[i].ids.size() < 2) continue;
      float area = leaves[i].bounds.surfaceArea();
      if (area > bestArea) {
        bestArea = area;
        pick = i;
      }
    }
    if (pick < 0) break;
    std::vector<uint32_t> ids = std::move(leaves[pick].ids);
    size_t mid = splitRange(ids, 0, ids.size(), prims);
    Leaf right = makeLeaf({ids.begin() + long(mid), ids.end()});
    ids.resize(mid);
    leaves[pick] = makeLeaf(std::move(ids));
    leaves.push_back(std::move(right));
  }

  std::vector<BraidFragment> out;
  out.reserve(leaves.size());
  for (Leaf& l : leaves) {
    std::sort(l.ids.begin(), l.ids.end());
    out.push_back({l.bounds, std::move(l.ids)});
  }
  return out;
}

// ---------------------------------------------------------------------------

LocalGeometry LocalGeometry::build(std::vector<GeomUnit> units) {
  LocalGeometry g;
  g.units_ = std::move(units);
  if (g.units_.empty()) return g;
  std::vector<PrimInfo> prims(g.units_.size());
  g.order_.resize(g.units_.size());
  for (uint32_t i = 0; i < g.units_.size(); ++i) {
    prims[i] = {g.units_[i].worldBounds, g.units_[i].worldBounds.center()};
    g.order_[i] = i;
  }
  g.nodes_.emplace_back();
  buildNodes(g.nodes_, g.order_, prims, 0, 0, g.order_.size());
  return g;
}

std::optional<Hit> LocalGeometry::intersect(const Ray& ray) const {
  if (units_.empty()) return std::nullopt;
  Vec3 invDir{1.f / ray.dir.x, 1.f / ray.dir.y, 1.f / ray.dir.z};
  Hit best;
  best.t = kInf;
  best.instanceId = UINT32_MAX;
  best.primitiveId = UINT32_MAX;
  int bestUnit = -1;
  uint32_t stack[128];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const TriBvh::Node& node = nodes_[stack[--sp]];
    float tn, tf;
    float limit = std::min(ray.tMax, best.t);
    if (!intersectBox(node.bounds, ray.origin, invDir, ray.tMin, limit, tn, tf)) continue;
    if (node.count > 0) {
      for (uint32_t i = 0; i < node.count; ++i) {
        const GeomUnit& u = units_[order_[node.leftOrFirst + i]];
        Ray local;
        local.origin = u.worldToObject.applyPoint(ray.origin);
        local.dir = u.worldToObject.applyVector(ray.dir);
        local.tMin = ray.tMin;
        local.tMax = std::min(ray.tMax, best.t);
        Hit cand;
        if (u.bvh->intersect(local, cand)) {
          uint32_t prim = cand.primitiveId + u.primitiveOffset;
          if (bestUnit < 0 || hitBeats(cand.t, u.instanceId, prim, best)) {
            best.t = cand.t;
            best.instanceId = u.instanceId;
            best.primitiveId = prim;
            best.baryU = cand.baryU;
            best.baryV = cand.baryV;
            bestUnit = int(order_[node.leftOrFirst + i]);
          }
        }
      }
    } else {
      uint32_t l = node.leftOrFirst, r = l + 1;
      float lt, lf, rt, rf;
      bool hl = intersectBox(nodes_[l].bounds, ray.origin, invDir, ray.tMin, limit, lt, lf);
      bool hr = intersectBox(nodes_[r].bounds, ray.origin, invDir, ray.tMin, limit, rt, rf);
      if (hl && hr) {
        if (lt <= rt) {
          stack[sp++] = r;
          stack[sp++] = l;
        } else {
          stack[sp++] = l;
          stack[sp++] = r;
        }
      } else if (hl) {
        stack[sp++] = l;
      } else if (hr) {
        stack[sp++] = r;
      }
    }
  }
  if (bestUnit < 0) return std::nullopt;
  best.unit = bestUnit;

  const GeomUnit& u = units_[size_t(bestUnit)];
  const Mesh& mesh = u.bvh->mesh();
  const auto& tri = mesh.triangles[best.primitiveId - u.primitiveOffset];
  Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
  Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
  // normals transform by the inverse-transpose; rows of worldToObject are its columns
  Vec3 nLocal = cross(e1, e2);
  const auto& wm = u.worldToObject.m;
  Vec3 nWorld{wm[0][0] * nLocal.x + wm[1][0] * nLocal.y + wm[2][0] * nLocal.z,
              wm[0][1] * nLocal.x + wm[1][1] * nLocal.y + wm[2][1] * nLocal.z,
              wm[0][2] * nLocal.x + wm[1][2] * nLocal.y + wm[2][2] * nLocal.z};
  best.normal = normalize(nWorld);
  Hit out = best;
  return out;
}

bool LocalGeometry::occluded(const Ray& ray) const {
  if (units_.empty()) return false;
  Vec3 invDir{1.f / ray.dir.x, 1.f / ray.dir.y, 1.f / ray.dir.z};
  uint32_t stack[128];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const TriBvh::Node& node = nodes_[stack[--sp]];
    float tn, tf;
    if (!intersectBox(node.bounds, ray.origin, invDir, ray.tMin, ray.tMax, tn, tf)) continue;
    if (node.count > 0) {
      for (uint32_t i = 0; i < node.count; ++i) {
        const GeomUnit& u = units_[order_[node.leftOrFirst + i]];
        Ray local;
        local.origin = u.worldToObject.applyPoint(ray.origin);
        local.dir = u.worldToObject.applyVector(ray.dir);
        local.tMin = ray.tMin;
        local.tMax = ray.tMax;
        if (u.bvh->occluded(local)) return true;
      }
    } else {
      stack[sp++] = node.leftOrFirst;
      stack[sp++] = node.leftOrFirst + 1;
    }
  }
  return false;
}

uint64_t LocalGeometry::hitOwners(const Hit& hit) const { return units_[size_t(hit.unit)].owners; }

uint32_t LocalGeometry::hitMaterial(const Hit& hit) const {
  return units_[size_t(hit.unit)].material;
}

}  // namespace dppt
