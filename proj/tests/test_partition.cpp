// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <map>
#include <set>

#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/partition.hpp"
#include "core/scene.hpp"

using namespace dppt;

namespace {

// One object, one mesh with the given counts, env light so finalize passes.
Scene syntheticScene(int triangles, int vertices, int instances) {
  Scene s;
  Mesh m;
  for (int i = 0; i < vertices; ++i)
    m.vertices.push_back({float(i % 10), float(i / 10), float(i % 3)});
  for (int i = 0; i < triangles; ++i)
    m.triangles.push_back({uint32_t(i % vertices), uint32_t((i + 1) % vertices),
                           uint32_t((i + 2) % vertices)});
  m.material = 0;
  s.materials.push_back({});
  s.meshes.push_back(std::move(m));
  s.objects.push_back({"thing", {0}});
  for (int i = 0; i < instances; ++i)
    s.instances.push_back({0, Affine3::translate({float(i) * 20.f, 0, 0}), {}});
  s.environment = {0.5f, 0.5f, 0.5f};
  s.finalize();
  return s;
}

std::vector<uint32_t> allIds(size_t n) {
  std::vector<uint32_t> ids(n);
  for (size_t i = 0; i < n; ++i) ids[i] = uint32_t(i);
  return ids;
}

}  // namespace

TEST_CASE("memory estimate: mesh weights plus flat mesh and instance costs") {
  MemoryModel model{24, 12, 128, 64};
  Scene one = syntheticScene(100, 60, 1);
  PartItem item;
  item.kind = PartItem::Kind::Instance;
  item.object = 0;
  item.instance = 0;
  item.box = one.instances[0].worldBounds;
  CHECK(memoryEstimate(one, {item}, {0}, model) == 100 * 24 + 60 * 12 + 128 + 64);
}

TEST_CASE("memory estimate counts a shared mesh once per part") {
  MemoryModel model{24, 12, 128, 64};
  Scene five = syntheticScene(100, 60, 5);
  std::vector<PartItem> items;
  for (uint32_t i = 0; i < 5; ++i) {
    PartItem item;
    item.kind = PartItem::Kind::Instance;
    item.object = 0;
    item.instance = i;
    item.box = five.instances[i].worldBounds;
    items.push_back(item);
  }
  CHECK(memoryEstimate(five, items, allIds(5), model) == 3312 + 4 * 64);
}

TEST_CASE("whole-scene estimate equals an independent tally") {
  Scene s = generateMiniIsland(8, 3, 4, 42);
  MemoryModel model;
  double want = 0;
  for (const Mesh& m : s.meshes)
    want += double(m.triangles.size()) * model.bytesPerTriangle +
            double(m.vertices.size()) * model.bytesPerVertex + model.bytesPerMesh;
  want += double(s.instances.size()) * model.bytesPerInstance;
  CHECK(wholeSceneEstimate(s, model) == doctest::Approx(want));
}

TEST_CASE("single rank plans put everything on rank 0 with no replication") {
  Scene s = generateMiniIsland(8, 3, 4, 42);
  for (Strategy strat : allStrategies()) {
    PartitionPlan plan = partition(s, 1, strat);
    CHECK(plan.rankCount == 1);
    REQUIRE(!plan.items.empty());
    for (RankMask m : plan.itemOwners) CHECK(m == 1);
    CHECK(plan.replicationFraction == 0.0);
  }
}

TEST_CASE("every item is owned by at least one rank and masks stay in range") {
  Scene s = generateMiniIsland(8, 4, 5, 7);
  for (Strategy strat : allStrategies()) {
    for (int ranks : {2, 4}) {
      PartitionPlan plan = partition(s, ranks, strat);
      REQUIRE(plan.itemOwners.size() == plan.items.size());
      RankMask used = 0;
      for (RankMask m : plan.itemOwners) {
        CHECK(m != 0);
        CHECK((m >> ranks) == 0);
        used |= m;
      }
      // every rank got something
      CHECK(used == (1ull << ranks) - 1);
    }
  }
}

TEST_CASE("object partitioning keeps all instances of an object together") {
  Scene s = generateMiniIsland(8, 3, 4, 42);
  PartitionPlan plan = partition(s, 3, Strategy::ObjectNaive);
  std::map<uint32_t, RankMask> ownerOf;
  for (size_t i = 0; i < plan.items.size(); ++i) {
    REQUIRE(plan.items[i].kind == PartItem::Kind::Object);
    CHECK(popcount64(plan.itemOwners[i]) == 1);
    ownerOf[plan.items[i].object] = plan.itemOwners[i];
  }
  CHECK(ownerOf.size() == s.objects.size());
}

TEST_CASE("spatial partitioning yields disjoint covering domains") {
  Scene s = generateMiniIsland(8, 3, 4, 42);
  for (Strategy strat : {Strategy::SpatialSimple, Strategy::SpatialSah}) {
    PartitionPlan plan = partition(s, 4, strat);
    REQUIRE(plan.domains.size() == 4);
    for (size_t a = 0; a < plan.domains.size(); ++a)
      for (size_t b = a + 1; b < plan.domains.size(); ++b)
        CHECK(intersection(plan.domains[a], plan.domains[b]).volume() == 0.f);
    // membership by box overlap: an instance overlapping a domain is owned there
    for (size_t i = 0; i < plan.items.size(); ++i) {
      for (int r = 0; r < 4; ++r) {
        bool owned = (plan.itemOwners[i] >> r) & 1;
        if (owned) CHECK(plan.items[i].box.overlaps(plan.domains[size_t(r)]));
      }
    }
  }
}

TEST_CASE("best strategy respects the replication budget") {
  Scene s = generateMiniIsland(10, 6, 6, 3);
  PartitionPlan plan = partition(s, 4, Strategy::Best);
  CHECK(plan.replicationFraction <= plan.options.replicationCap + 1e-9);
}

TEST_CASE("partitioning rejects more ranks than items") {
  Scene s = generateMiniIsland(8, 3, 4, 42);  // 4 objects
  CHECK_THROWS_AS(partition(s, 8, Strategy::ObjectNaive), DomainError);
  CHECK_THROWS_AS(partition(s, 65, Strategy::SpatialSimple), DomainError);
}

TEST_CASE("largest part shrinks (weakly) as rank count grows") {
  Scene s = generateMiniIsland(10, 5, 6, 11);
  MemoryModel model;
  for (Strategy strat : {Strategy::ObjectNaive, Strategy::ObjectProxies, Strategy::BvhStyle,
                         Strategy::Best, Strategy::SpatialSimple}) {
    std::vector<std::pair<int, double>> curve = maxPartSizeCurve(s, strat, model, 8);
    REQUIRE(!curve.empty());
    CHECK(curve[0].first == 1);
    CHECK(curve[0].second == doctest::Approx(wholeSceneEstimate(s, model)));
    for (size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].second <= curve[i - 1].second + 1e-6);
  }
}

TEST_CASE("default proxy modes and proxy coverage per strategy") {
  Scene s = generateMiniIsland(8, 3, 4, 42);
  CHECK(defaultProxyMode(Strategy::SpatialSimple) == ProxyMode::DomainBoxes);
  CHECK(defaultProxyMode(Strategy::ObjectNaive) == ProxyMode::ItemBoxes);
  CHECK(defaultProxyMode(Strategy::ObjectProxies) == ProxyMode::Braided);

  for (Strategy strat : allStrategies()) {
    PartitionPlan plan = partition(s, 4, strat);
    ProxySet set = buildProxySet(s, plan, defaultProxyMode(strat));
    REQUIRE(!set.proxies.empty());
    RankMask used = 0;
    for (const Proxy& p : set.proxies) {
      CHECK(p.owners != 0);
      CHECK(!p.bounds.empty());
      used |= p.owners;
    }
    CHECK(used == 0b1111);
  }
}

TEST_CASE("spatial proxies are exactly the rank domains") {
  Scene s = generateMiniIsland(8, 3, 4, 42);
  PartitionPlan plan = partition(s, 3, Strategy::SpatialSimple);
  ProxySet set = buildProxySet(s, plan, ProxyMode::DomainBoxes);
  REQUIRE(set.proxies.size() == 3);
  for (size_t a = 0; a < 3; ++a)
    for (size_t b = a + 1; b < 3; ++b)
      CHECK(intersection(set.proxies[a].bounds, set.proxies[b].bounds).volume() == 0.f);
}

TEST_CASE("braided proxies give instanced objects one box per instance") {
  Scene s = generateMiniIsland(8, 3, 4, 42);
  PartitionPlan plan = partition(s, 2, Strategy::ObjectProxies);
  ProxySet set = buildProxySet(s, plan, ProxyMode::Braided);
  // 7 tree instances contribute >= 7 boxes; grounds contribute braided pieces.
  CHECK(set.proxies.size() >= 7);
  CHECK(set.proxies.size() <= 7 + 2 * 64);
}

TEST_CASE("rank geometry covers exactly the items owned by the rank") {
  Scene s = generateMiniIsland(8, 3, 4, 42);
  for (Strategy strat : allStrategies()) {
    PartitionPlan plan = partition(s, 4, strat);
    GeometryCache cache;
    size_t total = 0;
    for (int r = 0; r < 4; ++r) {
      std::vector<GeomUnit> units = buildRankGeometry(s, plan, r, cache);
      for (const GeomUnit& u : units) {
        CHECK(((u.owners >> r) & 1) == 1);
        CHECK(u.bvh != nullptr);
      }
      total += units.size();
    }
    CHECK(total > 0);
  }
}

TEST_CASE("plan digest changes with strategy and rank count") {
  Scene s = generateMiniIsland(8, 3, 4, 42);
  PartitionPlan a = partition(s, 2, Strategy::SpatialSimple);
  PartitionPlan b = partition(s, 4, Strategy::SpatialSimple);
  PartitionPlan c = partition(s, 2, Strategy::ObjectNaive);
  CHECK(a.digest() != b.digest());
  CHECK(a.digest() != c.digest());
  CHECK(a.digest() == partition(s, 2, Strategy::SpatialSimple).digest());
}
