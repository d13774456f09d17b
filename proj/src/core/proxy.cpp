// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/proxy.hpp"

#include <algorithm>
#include <cstring>

#include "core/error.hpp"
#include "core/hash.hpp"

namespace dppt {

std::vector<uint8_t> ProxySet::encode() const {
  std::vector<uint8_t> out;
  out.reserve(4 + proxies.size() * 32);
  uint32_t n = uint32_t(proxies.size());
  out.resize(4);
  std::memcpy(out.data(), &n, 4);
  for (const Proxy& p : proxies) {
    float f[6] = {p.bounds.lo.x, p.bounds.lo.y, p.bounds.lo.z,
                  p.bounds.hi.x, p.bounds.hi.y, p.bounds.hi.z};
    size_t at = out.size();
    out.resize(at + 24 + 8);
    std::memcpy(out.data() + at, f, 24);
    uint64_t owners = p.owners;
    std::memcpy(out.data() + at + 24, &owners, 8);
  }
  return out;
}

ProxySet ProxySet::decode(const uint8_t* data, size_t size) {
  if (size < 4) throw ProtocolError("proxy set blob truncated");
  uint32_t n;
  std::memcpy(&n, data, 4);
  if (size != 4 + size_t(n) * 32) throw ProtocolError("proxy set blob size mismatch");
  ProxySet set;
  set.proxies.resize(n);
  for (uint32_t i = 0; i < n; ++i) {
    const uint8_t* rec = data + 4 + i * 32;
    float f[6];
    std::memcpy(f, rec, 24);
    std::memcpy(&set.proxies[i].owners, rec + 24, 8);
    set.proxies[i].bounds.lo = {f[0], f[1], f[2]};
    set.proxies[i].bounds.hi = {f[3], f[4], f[5]};
  }
  return set;
}

uint64_t ProxySet::digest() const {
  std::vector<uint8_t> bytes = encode();
  uint64_t h = 0x9ae16a3b2f90404full;
  for (uint8_t b : bytes) h = hashCombine(h, b);
  return h;
}

ProxyBvh ProxyBvh::build(const ProxySet& set) {
  ProxyBvh bvh;
  bvh.set_ = &set;
  if (set.proxies.empty()) return bvh;
  for (const Proxy& p : set.proxies) {
    if (p.owners == 0) throw DomainError("proxy with empty owner mask");
    if (p.bounds.empty()) throw DomainError("proxy with empty bounds");
  }
  // Reuse the mesh BVH node layout: leaves reference proxy indices via order_.
  std::vector<uint32_t> ids(set.proxies.size());
  std::vector<Aabb> bounds(set.proxies.size());
  for (uint32_t i = 0; i < ids.size(); ++i) {
    ids[i] = i;
    bounds[i] = set.proxies[i].bounds;
  }
  // simple deterministic median build over box centers
  struct Builder {
    const std::vector<Aabb>& bounds;
    std::vector<TriBvh::Node>& nodes;
    std::vector<uint32_t>& ids;
    void run(uint32_t nodeIdx, size_t begin, size_t end) {
      Aabb nb;
      for (size_t i = begin; i < end; ++i) nb.extend(bounds[ids[i]]);
      nodes[nodeIdx].bounds = nb;
      if (end - begin <= 2) {
        nodes[nodeIdx].leftOrFirst = uint32_t(begin);
        nodes[nodeIdx].count = uint32_t(end - begin);
        return;
      }
      Aabb cb;
      for (size_t i = begin; i < end; ++i) cb.extend(bounds[ids[i]].center());
      int axis = cb.longestAxis();
      size_t mid = begin + (end - begin) / 2;
      std::nth_element(ids.begin() + begin, ids.begin() + mid, ids.begin() + end,
                       [&](uint32_t a, uint32_t b) {
                         float ca = bounds[a].center()[axis], cbx = bounds[b].center()[axis];
                         if (ca != cbx) return ca < cbx;
                         return a < b;
                       });
      uint32_t left = uint32_t(nodes.size());
      nodes[nodeIdx].leftOrFirst = left;
      nodes[nodeIdx].count = 0;
      nodes.emplace_back();
      nodes.emplace_back();
      run(left, begin, mid);
      run(left + 1, mid, end);
    }
  };
  bvh.order_ = std::move(ids);
  bvh.nodes_.emplace_back();
  Builder{bounds, bvh.nodes_, bvh.order_}.run(0, 0, bvh.order_.size());
  return bvh;
}

std::optional<uint32_t> ProxyBvh::closestEligible(const Ray& ray, RankMask visited,
                                                  bool tmaxCulling) const {
  if (!set_ || set_->proxies.empty() || nodes_.empty()) return std::nullopt;
  Vec3 invDir{1.f / ray.dir.x, 1.f / ray.dir.y, 1.f / ray.dir.z};
  float cullLimit = tmaxCulling ? ray.tMax : kInf;

  float bestEntry = kInf;
  uint32_t bestIdx = UINT32_MAX;
  uint32_t stack[128];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const TriBvh::Node& node = nodes_[stack[--sp]];
    float tn, tf;
    if (!intersectBox(node.bounds, ray.origin, invDir, ray.tMin, cullLimit, tn, tf)) continue;
    if (tn > bestEntry) continue;  // cannot contain a closer entry
    if (node.count > 0) {
      for (uint32_t i = 0; i < node.count; ++i) {
        uint32_t idx = order_[node.leftOrFirst + i];
        const Proxy& p = set_->proxies[idx];
        if (p.owners & visited) continue;
        float pn, pf;
        if (!intersectBox(p.bounds, ray.origin, invDir, ray.tMin, cullLimit, pn, pf)) continue;
        float entry = std::max(pn, ray.tMin);
        if (entry < bestEntry || (entry == bestEntry && idx < bestIdx)) {
          bestEntry = entry;
          bestIdx = idx;
        }
      }
    } else {
      stack[sp++] = node.leftOrFirst;
      stack[sp++] = node.leftOrFirst + 1;
    }
  }
  if (bestIdx == UINT32_MAX) return std::nullopt;
  return bestIdx;
}

int pickOwnerRank(RankMask owners, uint32_t seed) {
  int pc = popcount64(owners);
  return nthSetBit(owners, int(seed % uint32_t(pc)));
}

std::optional<int> selectNextRank(const Ray& ray, RankMask visited, const ProxyBvh& bvh,
                                  bool tmaxCulling, uint32_t seed) {
  std::optional<uint32_t> idx = bvh.closestEligible(ray, visited, tmaxCulling);
  if (!idx) return std::nullopt;
  return pickOwnerRank(bvh.set().proxies[*idx].owners, seed);
}

RankMask replayVisited(const Ray& ray, int originRank, int selfRank, const ProxyBvh& bvh,
                       uint32_t pixelId, uint32_t bounce, int rankCount) {
  RankMask visited = 1ull << originRank;
  if (selfRank == originRank) return visited;
  for (int hop = 0; hop < rankCount; ++hop) {
    uint32_t seed = pickSeed(pixelId, bounce, uint32_t(popcount64(visited)));
    std::optional<int> next = selectNextRank(ray, visited, bvh, /*tmaxCulling=*/false, seed);
    if (!next)
      throw ProtocolError("replay walk terminated before reaching the current rank");
    visited |= 1ull << *next;
    if (*next == selfRank) return visited;
  }
  throw ProtocolError("replay walk exceeded rank count (nondeterministic forwarding?)");
}

}  // namespace dppt
