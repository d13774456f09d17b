// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <string>

#include "core/error.hpp"
#include "core/scene.hpp"

using namespace dppt;

namespace {
std::string dataPath(const char* name) { return std::string(DPPT_TEST_DATA_DIR) + "/" + name; }
}  // namespace

TEST_CASE("json scene loads objects, obj meshes, and instances") {
  Scene s = loadScene(dataPath("two_tris.json"));
  REQUIRE(s.objects.size() == 2);
  REQUIRE(s.meshes.size() == 2);
  REQUIRE(s.instances.size() == 3);
  CHECK(s.objects[0].id == "floor");
  CHECK(s.meshes[0].triangles.size() == 2);
  // quad.obj is one 4-gon fanned into 2 triangles
  CHECK(s.meshes[1].triangles.size() == 2);
  CHECK(s.meshes[1].vertices.size() == 4);
  CHECK(s.materials[1].kind == MaterialDesc::Kind::Emissive);
  CHECK(s.materials[1].emission == Vec3{5, 4, 3});
  CHECK(s.environment == Vec3{0.2f, 0.3f, 0.4f});
  CHECK(s.camera.fovY == 50.f);
  // second floor instance is translated by +2.5 in x
  CHECK(s.instances[1].worldBounds.hi.x == doctest::Approx(3.5f));
  // world bounds cover the emissive panel at y = 2
  CHECK(s.bounds.hi.y == doctest::Approx(2.f));
}

TEST_CASE("missing obj reference reports the path") {
  try {
    loadScene(dataPath("bad_missing_obj.json"));
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("does_not_exist.obj") != std::string::npos);
  }
}

TEST_CASE("missing scene file is a domain error") {
  CHECK_THROWS_AS(loadScene(dataPath("no_such_scene.json")), DomainError);
}

TEST_CASE("island generation is deterministic") {
  Scene a = generateMiniIsland(8, 3, 4, 42);
  Scene b = generateMiniIsland(8, 3, 4, 42);
  CHECK(a.digest() == b.digest());
  Scene c = generateMiniIsland(8, 3, 4, 43);
  CHECK(a.digest() != c.digest());
}

TEST_CASE("island layout: two ground objects, two instanced tree objects") {
  Scene s = generateMiniIsland(8, 3, 4, 42);
  REQUIRE(s.objects.size() == 4);
  CHECK(s.instanceCount(0) == 1);
  CHECK(s.instanceCount(1) == 1);
  CHECK(s.instanceCount(2) == 3);
  CHECK(s.instanceCount(3) == 4);
  CHECK(s.instances.size() == 9);
  // second tree type is the light source
  bool anyEmissive = false;
  for (uint32_t m : s.objects[3].meshes)
    anyEmissive |= s.materials[s.meshes[m].material].kind == MaterialDesc::Kind::Emissive;
  CHECK(anyEmissive);
}

TEST_CASE("island generation rejects degenerate parameters") {
  CHECK_THROWS_AS(generateMiniIsland(1, 3, 4, 42), DomainError);
  CHECK_THROWS_AS(generateMiniIsland(8, 0, 4, 42), DomainError);
}

TEST_CASE("box fixture has only single-instance objects and an area light") {
  Scene s = generateBoxScene();
  CHECK(s.objects.size() == 8);
  CHECK(s.instances.size() == 8);
  for (uint32_t o = 0; o < s.objects.size(); ++o) CHECK(s.instanceCount(o) == 1);
  bool anyEmissive = false;
  for (const MaterialDesc& m : s.materials)
    anyEmissive |= m.kind == MaterialDesc::Kind::Emissive;
  CHECK(anyEmissive);
  CHECK(s.environment == Vec3{0, 0, 0});
}

TEST_CASE("meshTriangleOffsets forms a stable prefix sum") {
  Scene s = generateMiniIsland(8, 3, 4, 42);
  for (uint32_t o = 0; o < s.objects.size(); ++o) {
    std::vector<uint32_t> off = s.meshTriangleOffsets(o);
    REQUIRE(off.size() == s.objects[o].meshes.size() + 1);
    CHECK(off[0] == 0);
    for (size_t i = 0; i + 1 < off.size(); ++i)
      CHECK(off[i + 1] - off[i] == s.meshes[s.objects[o].meshes[i]].triangles.size());
  }
}

TEST_CASE("experiment views are derived from scene bounds") {
  Scene s = generateBoxScene();
  Camera v0 = experimentView(s, 0);
  Camera v2 = experimentView(s, 2);
  CHECK(!(v0.position == v2.position));
  CHECK(s.bounds.contains(v0.lookAt));
  CHECK(v2.position.y > s.bounds.hi.y);  // top-down
  CHECK_THROWS_AS(experimentView(s, 3), DomainError);
}
