// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/partition.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/hash.hpp"

namespace dppt {

Strategy strategyFromName(const std::string& name) {
  if (name == "spatial-simple") return Strategy::SpatialSimple;
  if (name == "spatial-sah") return Strategy::SpatialSah;
  if (name == "object-naive") return Strategy::ObjectNaive;
  if (name == "object-proxies") return Strategy::ObjectProxies;
  if (name == "bvh-style") return Strategy::BvhStyle;
  if (name == "best") return Strategy::Best;
  throw DomainError("unknown partitioning strategy: " + name);
}

std::string strategyName(Strategy s) {
  switch (s) {
    case Strategy::SpatialSimple: return "spatial-simple";
    case Strategy::SpatialSah: return "spatial-sah";
    case Strategy::ObjectNaive: return "object-naive";
    case Strategy::ObjectProxies: return "object-proxies";
    case Strategy::BvhStyle: return "bvh-style";
    case Strategy::Best: return "best";
  }
  return "?";
}

const std::vector<Strategy>& allStrategies() {
  static const std::vector<Strategy> all = {Strategy::SpatialSimple, Strategy::SpatialSah,
                                            Strategy::ObjectNaive,   Strategy::ObjectProxies,
                                            Strategy::BvhStyle,      Strategy::Best};
  return all;
}

static bool isSpatial(Strategy s) {
  return s == Strategy::SpatialSimple || s == Strategy::SpatialSah;
}
static bool isObjectMode(Strategy s) {
  return s == Strategy::ObjectNaive || s == Strategy::ObjectProxies;
}

uint64_t PartitionPlan::digest() const {
  uint64_t h = 0x51ed270b74a4e52bull;
  h = hashCombine(h, uint64_t(rankCount));
  h = hashCombine(h, uint64_t(strategy));
  for (size_t i = 0; i < items.size(); ++i) {
    const PartItem& it = items[i];
    h = hashCombine(h, uint64_t(it.kind));
    h = hashCombine(h, it.object);
    h = hashCombine(h, it.instance);
    h = hashCombine(h, it.mesh);
    h = hashCombine(h, it.triangles.size());
    for (uint32_t t : it.triangles) h = hashCombine(h, t);
    h = hashCombine(h, itemOwners[i]);
  }
  for (const Aabb& d : domains) {
    h = hashCombine(h, std::bit_cast<uint32_t>(d.lo.x) ^ uint64_t(std::bit_cast<uint32_t>(d.hi.x)) << 32);
    h = hashCombine(h, std::bit_cast<uint32_t>(d.lo.y) ^ uint64_t(std::bit_cast<uint32_t>(d.hi.y)) << 32);
    h = hashCombine(h, std::bit_cast<uint32_t>(d.lo.z) ^ uint64_t(std::bit_cast<uint32_t>(d.hi.z)) << 32);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Memory estimate

namespace {

struct MeshCover {
  bool whole = false;
  std::set<uint32_t> triangles;  // meaningful only when !whole
};

struct CoverageTally {
  std::map<uint32_t, MeshCover> meshes;
  std::set<uint32_t> instances;

  void addWholeMesh(uint32_t mesh) { meshes[mesh].whole = true; }
  void addFragment(uint32_t mesh, const std::vector<uint32_t>& tris) {
    MeshCover& c = meshes[mesh];
    if (!c.whole) c.triangles.insert(tris.begin(), tris.end());
  }
};

void tallyItem(const Scene& scene, const PartItem& item, CoverageTally& tally) {
  switch (item.kind) {
    case PartItem::Kind::Object:
      for (uint32_t m : scene.objects[item.object].meshes) tally.addWholeMesh(m);
      for (uint32_t i = 0; i < scene.instances.size(); ++i)
        if (scene.instances[i].object == item.object) tally.instances.insert(i);
      break;
    case PartItem::Kind::Instance:
      for (uint32_t m : scene.objects[item.object].meshes) tally.addWholeMesh(m);
      tally.instances.insert(item.instance);
      break;
    case PartItem::Kind::MeshPart:
      tally.addWholeMesh(item.mesh);
      tally.instances.insert(item.instance);
      break;
    case PartItem::Kind::Fragment:
      tally.addFragment(item.mesh, item.triangles);
      tally.instances.insert(item.instance);
      break;
  }
}

double tallyBytes(const Scene& scene, const CoverageTally& tally, const MemoryModel& model) {
  double bytes = 0;
  for (const auto& [meshId, cover] : tally.meshes) {
    const Mesh& mesh = scene.meshes[meshId];
    size_t tris, verts;
    if (cover.whole) {
      tris = mesh.triangles.size();
      verts = mesh.vertices.size();
    } else {
      tris = cover.triangles.size();
      std::set<uint32_t> vs;
      for (uint32_t t : cover.triangles)
        for (uint32_t v : mesh.triangles[t]) vs.insert(v);
      verts = vs.size();
    }
    bytes += double(tris) * model.bytesPerTriangle + double(verts) * model.bytesPerVertex +
             model.bytesPerMesh;
  }
  bytes += double(tally.instances.size()) * model.bytesPerInstance;
  return bytes;
}

}  // namespace

double memoryEstimate(const Scene& scene, const std::vector<PartItem>& items,
                      const std::vector<uint32_t>& ids, const MemoryModel& model) {
  CoverageTally tally;
  for (uint32_t id : ids) tallyItem(scene, items[id], tally);
  return tallyBytes(scene, tally, model);
}

double wholeSceneEstimate(const Scene& scene, const MemoryModel& model) {
  CoverageTally tally;
  for (uint32_t m = 0; m < scene.meshes.size(); ++m) tally.addWholeMesh(m);
  for (uint32_t i = 0; i < scene.instances.size(); ++i) tally.instances.insert(i);
  return tallyBytes(scene, tally, model);
}

// ---------------------------------------------------------------------------
// Split cost (centroid-sided modes)

namespace {

double sahTerm(const std::vector<PartItem>& items, const std::vector<uint32_t>& left,
               const std::vector<uint32_t>& right) {
  Aabb bl, br;
  for (uint32_t id : left) bl.extend(items[id].box);
  for (uint32_t id : right) br.extend(items[id].box);
  return double(bl.surfaceArea()) * double(left.size()) +
         double(br.surfaceArea()) * double(right.size());
}

double blendedCost(const Scene& scene, const std::vector<PartItem>& items,
                   const std::vector<uint32_t>& part, const std::vector<uint32_t>& left,
                   const std::vector<uint32_t>& right, const MemoryModel& model) {
  if (left.empty() || right.empty()) return kInf;
  Aabb whole;
  for (uint32_t id : part) whole.extend(items[id].box);
  double sahWhole = double(whole.surfaceArea()) * double(part.size());
  double memWhole = memoryEstimate(scene, items, part, model);
  if (sahWhole <= 0 || memWhole <= 0) return kInf;
  double sah = sahTerm(items, left, right) / sahWhole;
  double mem = (memoryEstimate(scene, items, left, model) +
                memoryEstimate(scene, items, right, model)) /
               memWhole;
  return 0.5 * sah + 0.5 * mem;
}

}  // namespace

double splitCost(const Scene& scene, const std::vector<PartItem>& items,
                 const std::vector<uint32_t>& part, int axis, float pos,
                 const MemoryModel& model) {
  std::vector<uint32_t> left, right;
  for (uint32_t id : part)
    (items[id].box.center()[axis] < pos ? left : right).push_back(id);
  return blendedCost(scene, items, part, left, right, model);
}

// ---------------------------------------------------------------------------
// Item construction

namespace {

Aabb instanceMeshBounds(const Scene& scene, uint32_t instance, uint32_t mesh) {
  Aabb b;
  const Instance& inst = scene.instances[instance];
  for (const Vec3& v : scene.meshes[mesh].vertices) b.extend(inst.transform.applyPoint(v));
  return b;
}

Aabb fragmentWorldBounds(const Scene& scene, uint32_t instance, uint32_t mesh,
                         const std::vector<uint32_t>& tris) {
  Aabb b;
  const Instance& inst = scene.instances[instance];
  const Mesh& m = scene.meshes[mesh];
  for (uint32_t t : tris)
    for (uint32_t v : m.triangles[t]) b.extend(inst.transform.applyPoint(m.vertices[v]));
  return b;
}

bool meshQualifiesForBraiding(const Scene& scene, const Aabb& worldBox, int rankCount) {
  float sceneArea = scene.bounds.surfaceArea();
  float sceneDiag = length(scene.bounds.diagonal());
  Vec3 d = worldBox.diagonal();
  float longest = std::max({d.x, d.y, d.z});
  return worldBox.surfaceArea() > sceneArea / (4.f * float(rankCount)) ||
         longest > 0.25f * sceneDiag;
}

std::vector<PartItem> makeItems(const Scene& scene, Strategy strategy, int rankCount,
                                const PartitionOptions& options) {
  std::vector<PartItem> items;
  if (isObjectMode(strategy)) {
    for (uint32_t o = 0; o < scene.objects.size(); ++o) {
      PartItem it;
      it.kind = PartItem::Kind::Object;
      it.object = o;
      for (const Instance& inst : scene.instances)
        if (inst.object == o) it.box.extend(inst.worldBounds);
      if (!it.box.empty()) items.push_back(std::move(it));
    }
    return items;
  }
  // Spatial and hybrid modes work per instance; single-instance objects are
  // broken into their constituent meshes first.
  for (uint32_t i = 0; i < scene.instances.size(); ++i) {
    const Instance& inst = scene.instances[i];
    if (scene.instanceCount(inst.object) > 1) {
      PartItem it;
      it.kind = PartItem::Kind::Instance;
      it.object = inst.object;
      it.instance = i;
      it.box = inst.worldBounds;
      items.push_back(std::move(it));
      continue;
    }
    for (uint32_t mesh : scene.objects[inst.object].meshes) {
      Aabb box = instanceMeshBounds(scene, i, mesh);
      if (strategy == Strategy::Best && meshQualifiesForBraiding(scene, box, rankCount)) {
        for (BraidFragment& frag : braidSplit(scene.meshes[mesh], options.braidMaxBoxes)) {
          PartItem it;
          it.kind = PartItem::Kind::Fragment;
          it.object = inst.object;
          it.instance = i;
          it.mesh = mesh;
          it.box = fragmentWorldBounds(scene, i, mesh, frag.triangles);
          it.triangles = std::move(frag.triangles);
          items.push_back(std::move(it));
        }
      } else {
        PartItem it;
        it.kind = PartItem::Kind::MeshPart;
        it.object = inst.object;
        it.instance = i;
        it.mesh = mesh;
        it.box = box;
        items.push_back(std::move(it));
      }
    }
  }
  return items;
}

// ---------------------------------------------------------------------------
// Splitting loop

struct Part {
  std::vector<uint32_t> ids;
  Aabb domain;  // spatial modes only
  double mem = 0;
};

constexpr int kPlanesPerAxis = 7;

std::vector<std::pair<int, float>> candidatePlanes(const Aabb& centroidBounds) {
  std::vector<std::pair<int, float>> planes;
  for (int axis = 0; axis < 3; ++axis) {
    float lo = centroidBounds.lo[axis], hi = centroidBounds.hi[axis];
    if (hi - lo <= 0.f) continue;
    for (int i = 1; i <= kPlanesPerAxis; ++i)
      planes.emplace_back(axis, lo + (hi - lo) * float(i) / float(kPlanesPerAxis + 1));
  }
  return planes;
}

Aabb centroidBoundsOf(const std::vector<PartItem>& items, const std::vector<uint32_t>& ids) {
  Aabb cb;
  for (uint32_t id : ids) cb.extend(items[id].box.center());
  return cb;
}

Aabb itemUnion(const std::vector<PartItem>& items, const std::vector<uint32_t>& ids) {
  Aabb b;
  for (uint32_t id : ids) b.extend(items[id].box);
  return b;
}

// Spatial split: disjoint domain halves, items overlap-tested against each
// half (an item may land in both), then both domains shrunk to their content.
bool spatialSplit(const Scene& scene, const std::vector<PartItem>& items, const Part& part,
                  Strategy strategy, const MemoryModel& model, Part& outL, Part& outR) {
  auto tryPlane = [&](int axis, float pos, Part& l, Part& r) {
    if (pos <= part.domain.lo[axis] || pos >= part.domain.hi[axis]) return false;
    Aabb halfL = part.domain, halfR = part.domain;
    halfL.hi[axis] = pos;
    halfR.lo[axis] = pos;
    l = Part{};
    r = Part{};
    for (uint32_t id : part.ids) {
      if (items[id].box.overlaps(halfL)) l.ids.push_back(id);
      if (items[id].box.overlaps(halfR)) r.ids.push_back(id);
    }
    if (l.ids.empty() || r.ids.empty()) return false;
    l.domain = intersection(halfL, itemUnion(items, l.ids));
    r.domain = intersection(halfR, itemUnion(items, r.ids));
    l.mem = memoryEstimate(scene, items, l.ids, model);
    r.mem = memoryEstimate(scene, items, r.ids, model);
    return true;
  };

  if (strategy == Strategy::SpatialSah) {
    Aabb cb = centroidBoundsOf(items, part.ids);
    double bestCost = kInf;
    Part bl, br;
    bool found = false;
    double memWhole = part.mem > 0 ? part.mem : 1.0;
    double sahWhole = double(part.domain.surfaceArea()) * double(part.ids.size());
    for (auto [axis, pos] : candidatePlanes(cb)) {
      Part l, r;
      if (!tryPlane(axis, pos, l, r)) continue;
      double sah = (double(l.domain.surfaceArea()) * double(l.ids.size()) +
                    double(r.domain.surfaceArea()) * double(r.ids.size())) /
                   (sahWhole > 0 ? sahWhole : 1.0);
      double mem = (l.mem + r.mem) / memWhole;
      double cost = 0.5 * sah + 0.5 * mem;
      if (cost < bestCost) {
        bestCost = cost;
        bl = std::move(l);
        br = std::move(r);
        found = true;
      }
    }
    if (found) {
      outL = std::move(bl);
      outR = std::move(br);
      return true;
    }
    // fall through to the median plane if no candidate separated anything
  }

  int axis = part.domain.longestAxis();
  float pos = part.domain.center()[axis];
  if (tryPlane(axis, pos, outL, outR)) return true;
  // fallback: separate at the item-centroid median on the domain's long axis
  std::vector<float> cs;
  for (uint32_t id : part.ids) cs.push_back(items[id].box.center()[axis]);
  std::sort(cs.begin(), cs.end());
  float median = cs[cs.size() / 2];
  if (tryPlane(axis, median, outL, outR)) return true;
  for (int a = 0; a < 3; ++a) {
    if (tryPlane(a, part.domain.center()[a], outL, outR)) return true;
  }
  return false;
}

// Centroid-sided split used by the object and hybrid modes; `best` may
// duplicate straddling items into both children while budget lasts.
bool centroidSplit(const Scene& scene, const std::vector<PartItem>& items, const Part& part,
                   Strategy strategy, const MemoryModel& model, int& replicationBudget,
                   Part& outL, Part& outR) {
  if (part.ids.size() < 2) return false;
  Aabb cb = centroidBoundsOf(items, part.ids);

  double bestCost = kInf;
  int bestAxis = -1;
  float bestPos = 0;
  for (auto [axis, pos] : candidatePlanes(cb)) {
    double cost = splitCost(scene, items, part.ids, axis, pos, model);
    if (cost < bestCost) {
      bestCost = cost;
      bestAxis = axis;
      bestPos = pos;
    }
  }

  std::vector<uint32_t> left, right;
  if (bestAxis < 0) {
    // all centroids coincide along every axis with spread; split at the
    // index median for determinism
    std::vector<uint32_t> sorted = part.ids;
    int axis = cb.empty() ? 0 : cb.longestAxis();
    std::stable_sort(sorted.begin(), sorted.end(), [&](uint32_t a, uint32_t b) {
      float ca = items[a].box.center()[axis], cbx = items[b].box.center()[axis];
      if (ca != cbx) return ca < cbx;
      return a < b;
    });
    size_t mid = sorted.size() / 2;
    left.assign(sorted.begin(), sorted.begin() + long(mid));
    right.assign(sorted.begin() + long(mid), sorted.end());
  } else {
    for (uint32_t id : part.ids)
      (items[id].box.center()[bestAxis] < bestPos ? left : right).push_back(id);

    if (strategy == Strategy::Best && replicationBudget > 0) {
      // An item whose box straddles the chosen plane may be duplicated into
      // both children when that lowers the blended cost.
      for (uint32_t id : part.ids) {
        if (replicationBudget <= 0) break;
        const Aabb& box = items[id].box;
        if (!(box.lo[bestAxis] < bestPos && box.hi[bestAxis] > bestPos)) continue;
        bool inLeft = std::find(left.begin(), left.end(), id) != left.end();
        std::vector<uint32_t> lDup = left, rDup = right;
        if (inLeft)
          rDup.push_back(id);
        else
          lDup.push_back(id);
        std::vector<uint32_t> lOther = left, rOther = right;
        if (inLeft) {
          lOther.erase(std::find(lOther.begin(), lOther.end(), id));
          rOther.push_back(id);
        } else {
          rOther.erase(std::find(rOther.begin(), rOther.end(), id));
          lOther.push_back(id);
        }
        double costAsIs = blendedCost(scene, items, part.ids, left, right, model);
        double costOther = blendedCost(scene, items, part.ids, lOther, rOther, model);
        double costDup = blendedCost(scene, items, part.ids, lDup, rDup, model);
        if (costDup < costAsIs && costDup < costOther) {
          left = std::move(lDup);
          right = std::move(rDup);
          --replicationBudget;
        }
      }
    }
  }
  if (left.empty() || right.empty()) return false;
  outL.ids = std::move(left);
  outR.ids = std::move(right);
  outL.mem = memoryEstimate(scene, items, outL.ids, model);
  outR.mem = memoryEstimate(scene, items, outR.ids, model);
  return true;
}

}  // namespace

PartitionPlan partition(const Scene& scene, int rankCount, Strategy strategy,
                        const PartitionOptions& options) {
  if (rankCount < 1) throw DomainError("rankCount must be >= 1");
  if (rankCount > 64) throw DomainError("at most 64 ranks are supported");

  PartitionPlan plan;
  plan.rankCount = rankCount;
  plan.strategy = strategy;
  plan.options = options;
  plan.items = makeItems(scene, strategy, rankCount, options);
  if (plan.items.empty()) throw DomainError("scene yields no partitionable items");
  if (size_t(rankCount) > plan.items.size())
    throw DomainError("rank count " + std::to_string(rankCount) + " exceeds item count " +
                      std::to_string(plan.items.size()) + " after pre-splitting");

  std::vector<Part> parts;
  Part root;
  root.ids.resize(plan.items.size());
  for (uint32_t i = 0; i < plan.items.size(); ++i) root.ids[i] = i;
  root.domain = scene.bounds;
  root.mem = memoryEstimate(scene, plan.items, root.ids, options.model);
  parts.push_back(std::move(root));

  int replicationBudget =
      strategy == Strategy::Best ? int(options.replicationCap * double(plan.items.size())) : 0;

  std::vector<bool> unsplittable(1, false);
  while (int(parts.size()) < rankCount) {
    int pick = -1;
    double bestMem = -1;
    for (int i = 0; i < int(parts.size()); ++i) {
      if (unsplittable[i]) continue;
      if (parts[i].mem > bestMem) {
        bestMem = parts[i].mem;
        pick = i;
      }
    }
    if (pick < 0)
      throw DomainError("cannot split scene into " + std::to_string(rankCount) + " parts");

    Part l, r;
    bool ok = isSpatial(strategy)
                  ? spatialSplit(scene, plan.items, parts[pick], strategy, options.model, l, r)
                  : centroidSplit(scene, plan.items, parts[pick], strategy, options.model,
                                  replicationBudget, l, r);
    if (!ok) {
      unsplittable[pick] = true;
      continue;
    }
    parts[pick] = std::move(l);
    unsplittable[pick] = false;
    parts.push_back(std::move(r));
    unsplittable.push_back(false);
  }

  plan.itemOwners.assign(plan.items.size(), 0);
  for (int rank = 0; rank < int(parts.size()); ++rank) {
    for (uint32_t id : parts[rank].ids) plan.itemOwners[id] |= 1ull << rank;
    if (isSpatial(strategy)) plan.domains.push_back(parts[rank].domain);
  }
  for (RankMask m : plan.itemOwners)
    if (m == 0) throw DomainError("internal: item left unassigned by partitioner");

  size_t replicated = 0;
  for (RankMask m : plan.itemOwners)
    if (popcount64(m) > 1) ++replicated;
  plan.replicationFraction = double(replicated) / double(plan.items.size());
  return plan;
}

std::vector<std::pair<int, double>> maxPartSizeCurve(const Scene& scene, Strategy strategy,
                                                     const MemoryModel& model, int nMax) {
  if (nMax < 1) throw DomainError("nMax must be >= 1");
  PartitionOptions options;
  options.model = model;
  std::vector<std::pair<int, double>> curve;
  for (int n = 1; n <= nMax; ++n) {
    PartitionPlan plan;
    try {
      plan = partition(scene, n, strategy, options);
    } catch (const DomainError&) {
      break;  // ran out of items
    }
    double largest = 0;
    for (int rank = 0; rank < n; ++rank) {
      std::vector<uint32_t> ids;
      for (uint32_t i = 0; i < plan.items.size(); ++i)
        if (plan.itemOwners[i] & (1ull << rank)) ids.push_back(i);
      largest = std::max(largest, memoryEstimate(scene, plan.items, ids, model));
    }
    curve.emplace_back(n, largest);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Proxy sets

ProxyMode defaultProxyMode(Strategy s) {
  switch (s) {
    case Strategy::SpatialSimple:
    case Strategy::SpatialSah: return ProxyMode::DomainBoxes;
    case Strategy::ObjectNaive: return ProxyMode::ItemBoxes;
    case Strategy::ObjectProxies: return ProxyMode::Braided;
    case Strategy::BvhStyle:
    case Strategy::Best: return ProxyMode::ItemBoxes;
  }
  return ProxyMode::ItemBoxes;
}

ProxySet buildProxySet(const Scene& scene, const PartitionPlan& plan, ProxyMode mode,
                       int braidK) {
  ProxySet set;
  if (mode == ProxyMode::DomainBoxes) {
    if (plan.domains.empty())
      throw DomainError("domain-boxes proxy mode requires a spatial partition plan");
    for (int rank = 0; rank < int(plan.domains.size()); ++rank)
      set.proxies.push_back({plan.domains[size_t(rank)], 1ull << rank});
    return set;
  }

  for (uint32_t i = 0; i < plan.items.size(); ++i) {
    const PartItem& item = plan.items[i];
    RankMask owners = plan.itemOwners[i];
    if (mode == ProxyMode::ItemBoxes) {
      set.proxies.push_back({item.box, owners});
      continue;
    }
    // OnePerInstance / Braided
    switch (item.kind) {
      case PartItem::Kind::Object: {
        bool single = scene.instanceCount(item.object) == 1;
        for (uint32_t inst = 0; inst < scene.instances.size(); ++inst) {
          if (scene.instances[inst].object != item.object) continue;
          if (mode == ProxyMode::Braided && single) {
            // non-instanced object: braid each sufficiently large mesh
            for (uint32_t mesh : scene.objects[item.object].meshes) {
              Aabb worldBox = instanceMeshBounds(scene, inst, mesh);
              if (meshQualifiesForBraiding(scene, worldBox, plan.rankCount)) {
                for (const BraidFragment& frag : braidSplit(scene.meshes[mesh], braidK))
                  set.proxies.push_back(
                      {fragmentWorldBounds(scene, inst, mesh, frag.triangles), owners});
              } else {
                set.proxies.push_back({worldBox, owners});
              }
            }
          } else {
            set.proxies.push_back({scene.instances[inst].worldBounds, owners});
          }
        }
        break;
      }
      case PartItem::Kind::Instance:
        set.proxies.push_back({scene.instances[item.instance].worldBounds, owners});
        break;
      case PartItem::Kind::MeshPart: {
        if (mode == ProxyMode::Braided &&
            meshQualifiesForBraiding(scene, item.box, plan.rankCount)) {
          for (const BraidFragment& frag : braidSplit(scene.meshes[item.mesh], braidK))
            set.proxies.push_back(
                {fragmentWorldBounds(scene, item.instance, item.mesh, frag.triangles), owners});
        } else {
          set.proxies.push_back({item.box, owners});
        }
        break;
      }
      case PartItem::Kind::Fragment:
        set.proxies.push_back({item.box, owners});
        break;
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// Rank geometry

std::vector<GeomUnit> buildRankGeometry(const Scene& scene, const PartitionPlan& plan, int rank,
                                        GeometryCache& cache) {
  cache.wholeMesh.resize(scene.meshes.size());
  cache.fragment.resize(plan.items.size());
  auto wholeMeshBvh = [&](uint32_t mesh) {
    if (!cache.wholeMesh[mesh])
      cache.wholeMesh[mesh] = std::make_shared<TriBvh>(TriBvh::build(scene.meshes[mesh]));
    return cache.wholeMesh[mesh];
  };

  std::vector<GeomUnit> units;
  auto addUnit = [&](uint32_t instance, uint32_t mesh, std::shared_ptr<const TriBvh> bvh,
                     RankMask owners) {
    const Instance& inst = scene.instances[instance];
    std::vector<uint32_t> offsets = scene.meshTriangleOffsets(inst.object);
    uint32_t offset = 0;
    const auto& objMeshes = scene.objects[inst.object].meshes;
    for (size_t k = 0; k < objMeshes.size(); ++k)
      if (objMeshes[k] == mesh) offset = offsets[k];
    GeomUnit u;
    u.bvh = std::move(bvh);
    u.objectToWorld = inst.transform;
    u.worldToObject = inverse(inst.transform);
    u.worldBounds = inst.transform.applyBox(u.bvh->bounds());
    u.instanceId = instance;
    u.primitiveOffset = offset;
    u.material = scene.meshes[mesh].material;
    u.owners = owners;
    units.push_back(std::move(u));
  };

  for (uint32_t i = 0; i < plan.items.size(); ++i) {
    if (!(plan.itemOwners[i] & (1ull << rank))) continue;
    const PartItem& item = plan.items[i];
    RankMask owners = plan.itemOwners[i];
    switch (item.kind) {
      case PartItem::Kind::Object:
        for (uint32_t inst = 0; inst < scene.instances.size(); ++inst)
          if (scene.instances[inst].object == item.object)
            for (uint32_t mesh : scene.objects[item.object].meshes)
              addUnit(inst, mesh, wholeMeshBvh(mesh), owners);
        break;
      case PartItem::Kind::Instance:
        for (uint32_t mesh : scene.objects[item.object].meshes)
          addUnit(item.instance, mesh, wholeMeshBvh(mesh), owners);
        break;
      case PartItem::Kind::MeshPart:
        addUnit(item.instance, item.mesh, wholeMeshBvh(item.mesh), owners);
        break;
      case PartItem::Kind::Fragment:
        if (!cache.fragment[i])
          cache.fragment[i] = std::make_shared<TriBvh>(
              TriBvh::build(scene.meshes[item.mesh], item.triangles));
        addUnit(item.instance, item.mesh, cache.fragment[i], owners);
        break;
    }
  }
  return units;
}

// ---------------------------------------------------------------------------
// Dumps

std::string planToJson(const Scene& scene, const PartitionPlan& plan) {
  nlohmann::json j;
  j["rankCount"] = plan.rankCount;
  j["strategy"] = strategyName(plan.strategy);
  j["replicationFraction"] = plan.replicationFraction;
  nlohmann::json items = nlohmann::json::array();
  for (uint32_t i = 0; i < plan.items.size(); ++i) {
    const PartItem& it = plan.items[i];
    nlohmann::json ji;
    switch (it.kind) {
      case PartItem::Kind::Object: ji["kind"] = "object"; break;
      case PartItem::Kind::Instance: ji["kind"] = "instance"; break;
      case PartItem::Kind::MeshPart: ji["kind"] = "mesh"; break;
      case PartItem::Kind::Fragment: ji["kind"] = "fragment"; break;
    }
    ji["object"] = scene.objects[it.object].id;
    if (it.kind != PartItem::Kind::Object) ji["instance"] = it.instance;
    if (it.kind == PartItem::Kind::MeshPart || it.kind == PartItem::Kind::Fragment)
      ji["mesh"] = it.mesh;
    if (it.kind == PartItem::Kind::Fragment) ji["triangleCount"] = it.triangles.size();
    nlohmann::json ranks = nlohmann::json::array();
    for (int r = 0; r < plan.rankCount; ++r)
      if (plan.itemOwners[i] & (1ull << r)) ranks.push_back(r);
    ji["ranks"] = ranks;
    items.push_back(std::move(ji));
  }
  j["items"] = std::move(items);
  nlohmann::json replicated = nlohmann::json::array();
  for (uint32_t i = 0; i < plan.items.size(); ++i)
    if (popcount64(plan.itemOwners[i]) > 1) replicated.push_back(i);
  j["replicatedItems"] = std::move(replicated);
  return j.dump(2);
}

std::string proxyBoxesToObj(const ProxySet& set) {
  std::ostringstream out;
  out << "# proxy boxes, one group per proxy; g-name encodes the owner ranks\n";
  uint32_t v = 1;
  for (size_t i = 0; i < set.proxies.size(); ++i) {
    const Proxy& p = set.proxies[i];
    out << "g proxy_" << i << "_owners";
    for (int r = 0; r < 64; ++r)
      if (p.owners & (1ull << r)) out << "_" << r;
    out << "\n";
    const Aabb& b = p.bounds;
    for (int c = 0; c < 8; ++c)
      out << "v " << (c & 1 ? b.hi.x : b.lo.x) << " " << (c & 2 ? b.hi.y : b.lo.y) << " "
          << (c & 4 ? b.hi.z : b.lo.z) << "\n";
    static const int quads[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1},
                                    {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
    for (const auto& q : quads)
      out << "f " << v + q[0] << " " << v + q[1] << " " << v + q[2] << " " << v + q[3] << "\n";
    v += 8;
  }
  return out.str();
}

}  // namespace dppt
