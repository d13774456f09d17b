// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/engine.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <thread>

#include "core/error.hpp"
#include "core/half.hpp"
#include "core/hash.hpp"

namespace dppt {

namespace {

constexpr float kRetraceRelTol = 1e-4f;

struct Light {
  uint32_t instance = 0;
  uint32_t mesh = 0;
  Vec3 emission;
  Vec3 center;        // world bounds center, used for the importance weight
  float power = 0.f;  // mean emission x total world-space area
  float totalArea = 0.f;
  std::vector<Vec3> verts;                        // world space
  std::vector<std::array<uint32_t, 3>> tris;      // indices into verts
  std::vector<float> areaCdf;                     // per triangle, normalized
};

// Identical on every rank: lights are globally known, only geometry is
// partitioned.
std::vector<Light> collectLights(const Scene& scene) {
  std::vector<Light> lights;
  for (uint32_t i = 0; i < scene.instances.size(); ++i) {
    const Instance& inst = scene.instances[i];
    for (uint32_t meshId : scene.objects[inst.object].meshes) {
      const Mesh& mesh = scene.meshes[meshId];
      const MaterialDesc& mat = scene.materials[mesh.material];
      if (mat.kind != MaterialDesc::Kind::Emissive) continue;
      Light light;
      light.instance = i;
      light.mesh = meshId;
      light.emission = mat.emission;
      light.verts.reserve(mesh.vertices.size());
      Aabb box;
      for (const Vec3& v : mesh.vertices) {
        Vec3 w = inst.transform.applyPoint(v);
        light.verts.push_back(w);
        box.extend(w);
      }
      light.center = box.center();
      light.tris = mesh.triangles;
      light.areaCdf.reserve(mesh.triangles.size());
      float total = 0.f;
      for (const auto& tri : mesh.triangles) {
        Vec3 e1 = light.verts[tri[1]] - light.verts[tri[0]];
        Vec3 e2 = light.verts[tri[2]] - light.verts[tri[0]];
        total += 0.5f * length(cross(e1, e2));
        light.areaCdf.push_back(total);
      }
      if (total <= 0.f) continue;
      for (float& c : light.areaCdf) c /= total;
      light.totalArea = total;
      light.power =
          (mat.emission.x + mat.emission.y + mat.emission.z) * (1.f / 3.f) * total;
      lights.push_back(std::move(light));
    }
  }
  return lights;
}

struct RankContext {
  RankGroup& group;
  const Scene& scene;
  const RenderConfig& cfg;
  const DebugHooks* hooks;
  WireConfig wire;
  LocalGeometry geom;
  ProxyBvh proxyBvh;
  std::vector<Light> lights;
  std::vector<Vec3> accum;
  float eps = 1e-4f;
  uint32_t sample = 0;

  uint64_t raysTraced = 0;
  uint64_t droppedNonFinite = 0;
  uint64_t retraceMisses = 0;
  uint64_t shadowForwards = 0;
  std::vector<uint32_t> roundsPerWavefront;

  int self() const { return group.selfRank(); }
  int ranks() const { return group.rankCount(); }

  void accumAdd(uint32_t pixel, const Vec3& v) {
    if (!isFinite(v)) {
      ++droppedNonFinite;
      return;
    }
    accum[pixel] += v;
  }
};

std::vector<PathState> generatePrimaries(RankContext& ctx, uint64_t frameSeed) {
  std::vector<PathState> queue;
  uint32_t pixels = uint32_t(ctx.cfg.width) * uint32_t(ctx.cfg.height);
  for (uint32_t pixel = 0; pixel < pixels; ++pixel) {
    Ray ray = cameraRay(ctx.cfg.camera, ctx.cfg.width, ctx.cfg.height, pixel, frameSeed);
    std::optional<uint32_t> proxy =
        ctx.proxyBvh.closestEligible(ray, 0, ctx.wire.tmaxCulling());
    int owner;
    if (proxy) {
      RankMask owners = ctx.proxyBvh.set().proxies[*proxy].owners;
      owner = nthSetBit(owners, int(pixel % uint32_t(popcount64(owners))));
    } else {
      owner = int(pixel % uint32_t(ctx.ranks()));
    }
    if (owner != ctx.self()) continue;
    PathState p;
    p.origin = ray.origin;
    p.dir = ray.dir;
    p.throughput = {1.f, 1.f, 1.f};
    p.tMax = kInf;
    p.pixelAndFlags = pixel;
    p.visited = 0;
    p.originRank = uint8_t(ctx.self());
    queue.push_back(p);
  }
  return queue;
}

// One distributed traversal epoch: trace locally, merge self into visited,
// forward per the proxy walk, exchange, repeat until no rank has anything
// left to send.
std::vector<PathState> traverseEpoch(RankContext& ctx, uint32_t epoch,
                                     std::vector<PathState> queue) {
  int n = ctx.ranks();
  int self = ctx.self();
  std::vector<PathState> shadeQueue;
  uint32_t rounds = 0;
  while (true) {
    std::vector<std::vector<PathState>> buckets(static_cast<size_t>(n));
    for (PathState& p : queue) {
      if (p.isShadeBound()) {
        shadeQueue.push_back(p);
        continue;
      }
      if (ctx.hooks && ctx.hooks->onVisit) ctx.hooks->onVisit(ctx.sample, epoch, self, p);
      ++ctx.raysTraced;

      Ray ray{p.origin, p.dir, 0.f, p.tMax};
      if (p.isShadow()) {
        if (!p.occluded() && ctx.geom.occluded(ray)) p.tMax = kOccludedSentinel;
      } else {
        std::optional<Hit> hit = ctx.geom.intersect(ray);
        if (hit && (hit->t < p.tMax || p.hitOwners == 0)) {
          p.tMax = hit->t;
          p.hitOwners = ctx.geom.hitOwners(*hit);
        }
      }
      p.visited |= 1ull << self;
      if (p.isShadow() && p.occluded()) {
        shadeQueue.push_back(p);  // result is final, no need to travel on
        continue;
      }

      uint32_t seed = pickSeed(p.pixel(), epoch, uint32_t(popcount64(p.visited)));
      Ray fray{p.origin, p.dir, 0.f, p.tMax};
      std::optional<int> next =
          selectNextRank(fray, p.visited, ctx.proxyBvh, ctx.wire.tmaxCulling(), seed);
      if (next) {
        if (p.isShadow()) ++ctx.shadowForwards;
        buckets[size_t(*next)].push_back(p);
      } else if (p.isShadow() || p.hitOwners == 0 || (p.hitOwners >> self) & 1) {
        shadeQueue.push_back(p);
      } else {
        // hit geometry lives elsewhere; ship the path to one of its owners
        PathState q = p;
        q.pixelAndFlags |= kFlagShadeBound;
        buckets[size_t(pickOwnerRank(p.hitOwners, seed))].push_back(q);
      }
    }

    std::vector<uint32_t> counts(static_cast<size_t>(n));
    for (int d = 0; d < n; ++d) counts[size_t(d)] = uint32_t(buckets[size_t(d)].size());
    std::vector<uint32_t> matrix = exchangeCounts(ctx.group, counts);
    bool any = false;
    for (uint32_t c : matrix) any = any || c != 0;
    if (!any) break;
    if (++rounds > uint32_t(n))
      throw ProtocolError("traversal exceeded the rank-count round bound");
    queue = exchangeRays(ctx.group, ctx.wire, buckets, matrix);
    if (ctx.wire.maskMode == MaskMode::Replay) {
      for (PathState& p : queue) {
        if (p.isShadeBound()) continue;
        Ray r{p.origin, p.dir, 0.f, kInf};
        p.visited = replayVisited(r, p.originRank, self, ctx.proxyBvh, p.pixel(), epoch, n);
      }
    }
  }
  ctx.roundsPerWavefront.push_back(rounds);
  return shadeQueue;
}

Vec3 cosineSample(const Vec3& n, float u1, float u2) {
  float r = std::sqrt(u1);
  float phi = 2.f * std::numbers::pi_v<float> * u2;
  Vec3 t, b;
  buildBasis(n, t, b);
  return t * (r * std::cos(phi)) + b * (r * std::sin(phi)) +
         n * std::sqrt(std::max(0.f, 1.f - u1));
}

// Weighted reservoir selection over all lights followed by an area sample on
// the winner; the unoccluded contribution rides in the shadow ray's
// throughput so the receiving rank only has to test visibility.
void spawnShadowRay(RankContext& ctx, uint64_t frameSeed, uint32_t epoch, uint32_t pixel,
                    const Vec3& hitPoint, const Vec3& n, const Vec3& throughput,
                    const Vec3& albedo, std::vector<PathState>& nextQueue) {
  if (ctx.lights.empty()) return;
  float wSum = 0.f;
  int selected = -1;
  float wSelected = 0.f;
  for (uint32_t i = 0; i < ctx.lights.size(); ++i) {
    const Light& light = ctx.lights[i];
    float d2 = std::max(lengthSq(light.center - hitPoint), 1e-12f);
    float w = light.power / d2;
    if (w <= 0.f) continue;
    wSum += w;
    float u = rngFloat(frameSeed, pixel, epoch, RngStream::LightReservoir, i);
    if (u * wSum <= w) {
      selected = int(i);
      wSelected = w;
    }
  }
  if (selected < 0 || wSum <= 0.f) return;
  const Light& light = ctx.lights[size_t(selected)];
  float pSelect = wSelected / wSum;

  float uTri = rngFloat(frameSeed, pixel, epoch, RngStream::LightPoint, 0);
  size_t tri = size_t(
      std::lower_bound(light.areaCdf.begin(), light.areaCdf.end(), uTri) - light.areaCdf.begin());
  if (tri >= light.tris.size()) tri = light.tris.size() - 1;
  float u1 = rngFloat(frameSeed, pixel, epoch, RngStream::LightPoint, 1);
  float u2 = rngFloat(frameSeed, pixel, epoch, RngStream::LightPoint, 2);
  float su = std::sqrt(u1);
  const Vec3& a = light.verts[light.tris[tri][0]];
  const Vec3& b = light.verts[light.tris[tri][1]];
  const Vec3& c = light.verts[light.tris[tri][2]];
  Vec3 sample = a * (1.f - su) + b * (su * (1.f - u2)) + c * (su * u2);
  Vec3 lightN = cross(b - a, c - a);
  float ln = length(lightN);
  if (ln <= 0.f) return;
  lightN = lightN / ln;

  Vec3 shadowOrigin = hitPoint + n * ctx.eps;
  Vec3 wi = sample - shadowOrigin;
  float dist = length(wi);
  if (dist <= ctx.eps) return;
  Vec3 wiN = wi / dist;
  float cosS = dot(n, wiN);
  if (cosS <= 0.f) return;
  float cosL = std::fabs(dot(lightN, wiN));  // lights emit from both sides
  if (cosL <= 0.f) return;

  float invPi = 1.f / std::numbers::pi_v<float>;
  Vec3 contribution = throughput * albedo * invPi * light.emission *
                      (cosS * cosL / (dist * dist) * light.totalArea / pSelect);
  if (!isFinite(contribution) || maxComponent(contribution) <= 0.f) return;

  PathState s;
  s.origin = shadowOrigin;
  s.dir = quantizeHalf(wiN);
  s.throughput = quantizeHalf(contribution);
  s.tMax = dist * (1.f - 1e-3f);
  s.pixelAndFlags = pixel | kFlagShadow;
  s.visited = 0;
  s.originRank = uint8_t(ctx.self());
  nextQueue.push_back(s);
}

void shadeEpoch(RankContext& ctx, uint64_t frameSeed, uint32_t epoch,
                const std::vector<PathState>& shadeQueue, std::vector<PathState>& nextQueue) {
  bool spawnMore = int(epoch) < ctx.cfg.maxBounce;
  for (const PathState& p : shadeQueue) {
    if (!isFinite(p.throughput)) {
      ++ctx.droppedNonFinite;
      continue;
    }
    uint32_t pixel = p.pixel();
    if (p.isShadow()) {
      if (!p.occluded()) ctx.accumAdd(pixel, p.throughput);
      continue;
    }
    if (p.hitOwners == 0) {
      ctx.accumAdd(pixel, p.throughput * ctx.scene.environment);
      continue;
    }

    // Only tMax and the hit's owner mask travel; re-trace locally for the
    // full hit. A carried hit that this rank cannot reproduce within
    // tolerance is treated as escaped.
    Ray ray{p.origin, p.dir, 0.f, p.tMax * (1.f + 2.f * kRetraceRelTol)};
    std::optional<Hit> hit = ctx.geom.intersect(ray);
    if (!hit || std::fabs(hit->t - p.tMax) > kRetraceRelTol * p.tMax) {
      ++ctx.retraceMisses;
      ctx.accumAdd(pixel, p.throughput * ctx.scene.environment);
      continue;
    }
    const MaterialDesc& mat = ctx.scene.materials[ctx.geom.hitMaterial(*hit)];
    if (mat.kind == MaterialDesc::Kind::Emissive) {
      // direct camera hits only; later bounces get emitters via light samples
      if (epoch == 0) ctx.accumAdd(pixel, p.throughput * mat.emission);
      continue;
    }
    if (!spawnMore) continue;

    Vec3 n = hit->normal;
    if (dot(n, p.dir) > 0.f) n = -n;
    Vec3 hitPoint = p.origin + p.dir * hit->t;

    spawnShadowRay(ctx, frameSeed, epoch, pixel, hitPoint, n, p.throughput, mat.albedo,
                   nextQueue);

    // cosine-weighted diffuse bounce, then throughput-based rejection
    Vec3 throughput = p.throughput * mat.albedo;
    float survival =
        std::clamp(maxComponent(throughput) / ctx.cfg.rouletteQ, 0.f, 1.f);
    if (survival <= 0.f) continue;
    if (rngFloat(frameSeed, pixel, epoch, RngStream::Roulette, 0) >= survival) continue;
    throughput = throughput / survival;

    float u1 = rngFloat(frameSeed, pixel, epoch, RngStream::Bsdf, 0);
    float u2 = rngFloat(frameSeed, pixel, epoch, RngStream::Bsdf, 1);
    Vec3 dir = cosineSample(n, u1, u2);
    float len = length(dir);
    if (!(len > 0.f) || !isFinite(dir)) continue;

    PathState q;
    q.origin = hitPoint + n * ctx.eps;
    q.dir = quantizeHalf(dir / len);
    q.throughput = quantizeHalf(throughput);
    q.tMax = kInf;
    q.pixelAndFlags = pixel;
    q.visited = 0;
    q.originRank = uint8_t(ctx.self());
    if (!isFinite(q.throughput)) {
      ++ctx.droppedNonFinite;
      continue;
    }
    nextQueue.push_back(q);
  }
}

struct RankCounters {
  uint64_t raysTraced, bytesRays, bytesTiles, droppedNonFinite, retraceMisses, shadowForwards;
};

}  // namespace

Ray cameraRay(const Camera& camera, int width, int height, uint32_t pixel, uint64_t frameSeed) {
  uint32_t x = pixel % uint32_t(width);
  uint32_t y = pixel / uint32_t(width);
  float jx = rngFloat(frameSeed, pixel, 0, RngStream::CameraJitter, 0);
  float jy = rngFloat(frameSeed, pixel, 0, RngStream::CameraJitter, 1);

  Vec3 forward = normalize(camera.lookAt - camera.position);
  Vec3 right = normalize(cross(forward, camera.up));
  Vec3 up = cross(right, forward);
  float tanHalf = std::tan(camera.fovY * std::numbers::pi_v<float> / 360.f);
  float aspect = float(width) / float(height);
  float sx = (2.f * (float(x) + jx) / float(width) - 1.f) * tanHalf * aspect;
  float sy = (1.f - 2.f * (float(y) + jy) / float(height)) * tanHalf;

  Ray ray;
  ray.origin = camera.position;
  ray.dir = quantizeHalf(normalize(forward + right * sx + up * sy));
  ray.tMin = 0.f;
  ray.tMax = kInf;
  return ray;
}

std::vector<Vec3> renderRankFrame(RankGroup& group, const Scene& scene,
                                  const PartitionPlan& plan, const ProxySet& proxySet,
                                  const RenderConfig& cfg, FrameStats& stats,
                                  const DebugHooks* hooks) {
  if (cfg.width < 1 || cfg.height < 1 || uint64_t(cfg.width) * uint64_t(cfg.height) > (1u << 28))
    throw DomainError("frame dimensions out of range (pixel ids are 28 bits)");
  if (cfg.spp < 1 || cfg.maxBounce < 0) throw DomainError("bad sampling configuration");
  if (cfg.maskMode == MaskMode::Bitmask8 && group.rankCount() > 8)
    throw DomainError("bitmask8 supports at most 8 ranks");
  if (plan.rankCount != group.rankCount())
    throw DomainError("partition plan rank count disagrees with the rank group");

  group.verifyUniform(scene.digest(), Opcode::SceneHash);
  group.verifyUniform(hashCombine(plan.digest(), proxySet.digest()), Opcode::ProxySet);

  RankContext ctx{group, scene, cfg, hooks};
  ctx.wire = WireConfig{cfg.maskMode, group.rankCount()};
  GeometryCache cache;
  ctx.geom = LocalGeometry::build(buildRankGeometry(scene, plan, group.selfRank(), cache));
  ctx.proxyBvh = ProxyBvh::build(proxySet);
  ctx.lights = collectLights(scene);
  ctx.eps = 1e-4f * std::max(length(scene.bounds.diagonal()), 1e-3f);
  ctx.accum.assign(size_t(cfg.width) * size_t(cfg.height), Vec3{0, 0, 0});

  for (int s = 0; s < cfg.spp; ++s) {
    ctx.sample = uint32_t(s);
    uint64_t frameSeed = hashCombine(cfg.seed, uint64_t(s));
    std::vector<PathState> queue = generatePrimaries(ctx, frameSeed);
    for (int e = 0; e <= cfg.maxBounce; ++e) {
      std::vector<PathState> shadeQueue = traverseEpoch(ctx, uint32_t(e), std::move(queue));
      queue = {};
      shadeEpoch(ctx, frameSeed, uint32_t(e), shadeQueue, queue);
    }
    if (!queue.empty()) throw ProtocolError("live rays left after the bounce limit");
  }

  // parallel direct send compositing, then gather the summed tiles to root
  std::vector<Vec3> tile = exchangeFrameTiles(group, ctx.accum, cfg.width, cfg.height);
  std::vector<uint8_t> tileBytes(tile.size() * sizeof(Vec3));
  std::memcpy(tileBytes.data(), tile.data(), tileBytes.size());
  std::vector<std::vector<uint8_t>> gathered = group.gatherTo(0, tileBytes, Opcode::Tiles);

  RankCounters mine{ctx.raysTraced,       group.counters().bytesRays,
                    group.counters().bytesTiles, ctx.droppedNonFinite,
                    ctx.retraceMisses,    ctx.shadowForwards};
  std::vector<uint8_t> counterBytes(sizeof mine);
  std::memcpy(counterBytes.data(), &mine, sizeof mine);
  std::vector<std::vector<uint8_t>> allCounters = group.gatherTo(0, counterBytes, Opcode::Counts);

  if (group.selfRank() != 0) return {};

  int n = group.rankCount();
  std::vector<Vec3> image(size_t(cfg.width) * size_t(cfg.height));
  for (int r = 0; r < n; ++r) {
    auto [r0, r1] = tileRows(cfg.height, n, r);
    size_t bytes = size_t(r1 - r0) * size_t(cfg.width) * sizeof(Vec3);
    if (gathered[size_t(r)].size() != bytes) throw ProtocolError("gathered tile size mismatch");
    std::memcpy(image.data() + size_t(r0) * cfg.width, gathered[size_t(r)].data(), bytes);
  }

  stats = FrameStats{};
  for (const std::vector<uint32_t>& matrix : group.counters().countMatrices) {
    uint64_t off = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) off += matrix[size_t(i) * n + j];
    stats.forwardsPerRound.push_back(off);
    stats.forwardsTotal += off;
  }
  stats.roundsPerWavefront = ctx.roundsPerWavefront;
  stats.perRankRayCounts.resize(static_cast<size_t>(n));
  for (int r = 0; r < n; ++r) {
    RankCounters c{};
    std::memcpy(&c, allCounters[size_t(r)].data(), sizeof c);
    stats.perRankRayCounts[size_t(r)] = c.raysTraced;
    stats.bytesRays += c.bytesRays;
    stats.bytesTiles += c.bytesTiles;
    stats.droppedNonFinite += c.droppedNonFinite;
    stats.retraceMisses += c.retraceMisses;
    stats.shadowForwards += c.shadowForwards;
  }
  return image;
}

std::vector<Vec3> renderInProc(const Scene& scene, const PartitionPlan& plan,
                               const ProxySet& proxySet, const RenderConfig& cfg,
                               FrameStats& stats, const DebugHooks* hooks) {
  int n = plan.rankCount;
  std::shared_ptr<InProcShared> shared = makeInProcShared(n);
  std::vector<Vec3> image;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  std::vector<std::thread> workers;
  workers.reserve(static_cast<size_t>(n));
  for (int r = 0; r < n; ++r) {
    workers.emplace_back([&, r] {
      try {
        InProcGroup group(shared, r);
        FrameStats rankStats;
        std::vector<Vec3> result =
            renderRankFrame(group, scene, plan, proxySet, cfg, rankStats, hooks);
        if (r == 0) {
          image = std::move(result);
          stats = std::move(rankStats);
        }
      } catch (...) {
        errors[size_t(r)] = std::current_exception();
      }
    });
  }
  for (std::thread& w : workers) w.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  return image;
}

}  // namespace dppt
