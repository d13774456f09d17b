// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "core/math.hpp"

namespace dppt {

struct MaterialDesc {
  enum class Kind { Diffuse, Emissive };
  Kind kind = Kind::Diffuse;
  Vec3 albedo{0.5f, 0.5f, 0.5f};
  Vec3 emission{0.f, 0.f, 0.f};
};

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;  // optional, per vertex; empty = use geometric normals
  std::vector<std::array<uint32_t, 3>> triangles;
  uint32_t material = 0;

  Aabb bounds() const {
    Aabb b;
    for (const Vec3& v : vertices) b.extend(v);
    return b;
  }
};

struct SceneObject {
  std::string id;
  std::vector<uint32_t> meshes;  // indices into Scene::meshes
};

struct Instance {
  uint32_t object = 0;
  Affine3 transform;
  Aabb worldBounds;  // contains every transformed vertex of the object
};

struct Camera {
  Vec3 position{0, 0, 5};
  Vec3 lookAt{0, 0, 0};
  Vec3 up{0, 1, 0};
  float fovY = 45.f;  // degrees
};

struct Scene {
  std::vector<MaterialDesc> materials;
  std::vector<Mesh> meshes;
  std::vector<SceneObject> objects;
  std::vector<Instance> instances;
  Vec3 environment{0, 0, 0};
  Camera camera;
  Aabb bounds;

  uint32_t instanceCount(uint32_t object) const {
    uint32_t n = 0;
    for (const Instance& inst : instances)
      if (inst.object == object) ++n;
    return n;
  }

  // Total triangles per object, and per-mesh offsets used to form a stable
  // primitive id across an object's meshes.
  std::vector<uint32_t> meshTriangleOffsets(uint32_t object) const;

  void finalize();  // derive worldBounds / sceneBounds, validate invariants
  uint64_t digest() const;
};

Scene loadScene(const std::string& path);

// Deterministic procedural test scene: two spatially large interleaved
// ground meshes plus two tree objects instanced treesC / treesD times. The
// second tree type carries an emissive canopy so the scene has area lights.
Scene generateMiniIsland(int groundResolution, int treesC, int treesD, uint64_t seed);

// Non-instanced interior box fixture (emissive ceiling panel, two blockers).
Scene generateBoxScene();

// Canonical evaluation viewpoints derived from the scene bounds.
// 0 = default three-quarter view, 1 = low grazing view, 2 = top-down.
Camera experimentView(const Scene& scene, int view);

}  // namespace dppt
