// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/scene.hpp"

#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/hash.hpp"

namespace dppt {

using nlohmann::json;

std::vector<uint32_t> Scene::meshTriangleOffsets(uint32_t object) const {
  std::vector<uint32_t> offsets;
  uint32_t acc = 0;
  for (uint32_t m : objects[object].meshes) {
    offsets.push_back(acc);
    acc += uint32_t(meshes[m].triangles.size());
  }
  offsets.push_back(acc);
  return offsets;
}

void Scene::finalize() {
  bounds = Aabb{};
  bool anyLight = environment.x > 0 || environment.y > 0 || environment.z > 0;
  for (const SceneObject& obj : objects) {
    if (obj.meshes.empty()) throw DomainError("object '" + obj.id + "' owns no mesh");
  }
  for (size_t mi = 0; mi < meshes.size(); ++mi) {
    const Mesh& m = meshes[mi];
    if (m.triangles.empty())
      throw DomainError("mesh #" + std::to_string(mi) + " has zero triangles");
    for (const auto& t : m.triangles)
      for (uint32_t idx : t)
        if (idx >= m.vertices.size())
          throw DomainError("mesh #" + std::to_string(mi) + " triangle index out of range");
    if (materials[m.material].kind == MaterialDesc::Kind::Emissive) anyLight = true;
  }
  for (Instance& inst : instances) {
    if (inst.object >= objects.size()) throw DomainError("instance references unknown object");
    Aabb wb;
    for (uint32_t m : objects[inst.object].meshes)
      for (const Vec3& v : meshes[m].vertices) wb.extend(inst.transform.applyPoint(v));
    inst.worldBounds = wb;
    bounds.extend(wb);
  }
  if (!anyLight) throw DomainError("scene has neither lights nor environment radiance");
}

uint64_t Scene::digest() const {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mixF = [&](float f) { h = hashCombine(h, std::bit_cast<uint32_t>(f)); };
  auto mixV = [&](const Vec3& v) { mixF(v.x); mixF(v.y); mixF(v.z); };
  for (const MaterialDesc& m : materials) {
    h = hashCombine(h, uint64_t(m.kind));
    mixV(m.albedo);
    mixV(m.emission);
  }
  for (const Mesh& m : meshes) {
    h = hashCombine(h, m.vertices.size());
    for (const Vec3& v : m.vertices) mixV(v);
    for (const auto& t : m.triangles) h = hashCombine(h, t[0] ^ uint64_t(t[1]) << 20 ^ uint64_t(t[2]) << 40);
    h = hashCombine(h, m.material);
  }
  for (const SceneObject& o : objects)
    for (uint32_t m : o.meshes) h = hashCombine(h, m);
  for (const Instance& i : instances) {
    h = hashCombine(h, i.object);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) mixF(i.transform.m[r][c]);
  }
  mixV(environment);
  mixV(camera.position);
  mixV(camera.lookAt);
  mixV(camera.up);
  mixF(camera.fovY);
  return h;
}

// ---------------------------------------------------------------------------
// OBJ ingestion: 'v' and 'f' records only, polygons triangulated as fans.

static Mesh loadObj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open OBJ file: " + path);
  Mesh mesh;
  std::string line;
  size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x >> v.y >> v.z))
        throw DomainError(path + ":" + std::to_string(lineNo) + ": malformed vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<uint32_t> face;
      std::string tok;
      while (ls >> tok) {
        // take the position index, ignore /vt/vn parts
        long idx = std::strtol(tok.c_str(), nullptr, 10);
        if (idx == 0)
          throw DomainError(path + ":" + std::to_string(lineNo) + ": malformed face index");
        long resolved = idx > 0 ? idx - 1 : long(mesh.vertices.size()) + idx;
        if (resolved < 0 || resolved >= long(mesh.vertices.size()))
          throw DomainError(path + ":" + std::to_string(lineNo) + ": face index out of range");
        face.push_back(uint32_t(resolved));
      }
      if (face.size() < 3)
        throw DomainError(path + ":" + std::to_string(lineNo) + ": face with <3 vertices");
      for (size_t i = 2; i < face.size(); ++i)
        mesh.triangles.push_back({face[0], face[uint32_t(i - 1)], face[uint32_t(i)]});
    }
    // all other records ignored
  }
  if (mesh.triangles.empty()) throw DomainError(path + ": mesh has zero triangles");
  return mesh;
}

// ---------------------------------------------------------------------------
// JSON scene format

static Vec3 parseVec3(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 3)
    throw DomainError(std::string("field '") + field + "' must be an array of 3 numbers");
  return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
}

static MaterialDesc parseMaterial(const json& j, const std::string& objId) {
  MaterialDesc m;
  std::string kind = j.value("kind", "diffuse");
  if (kind == "diffuse") {
    m.kind = MaterialDesc::Kind::Diffuse;
    if (j.contains("albedo")) m.albedo = parseVec3(j["albedo"], "albedo");
    if (m.albedo.x >= 1.f || m.albedo.y >= 1.f || m.albedo.z >= 1.f)
      throw DomainError("object '" + objId + "': diffuse albedo must be < 1 componentwise");
  } else if (kind == "emissive") {
    m.kind = MaterialDesc::Kind::Emissive;
    m.emission = parseVec3(j.at("emission"), "emission");
    if (j.contains("albedo")) m.albedo = parseVec3(j["albedo"], "albedo");
  } else {
    throw DomainError("object '" + objId + "': unknown material kind '" + kind + "'");
  }
  return m;
}

Scene loadScene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open scene file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DomainError("scene parse error in " + path + ": " + e.what());
  }
  std::filesystem::path base = std::filesystem::path(path).parent_path();

  Scene scene;
  try {
    if (doc.contains("camera")) {
      const json& c = doc["camera"];
      scene.camera.position = parseVec3(c.at("pos"), "camera.pos");
      scene.camera.lookAt = parseVec3(c.at("lookAt"), "camera.lookAt");
      if (c.contains("up")) scene.camera.up = parseVec3(c["up"], "camera.up");
      scene.camera.fovY = c.value("fovY", 45.f);
    }
    if (doc.contains("environment")) scene.environment = parseVec3(doc["environment"], "environment");

    std::vector<std::string> objectIds;
    for (const json& jo : doc.at("objects")) {
      SceneObject obj;
      obj.id = jo.at("id").get<std::string>();
      uint32_t material = uint32_t(scene.materials.size());
      scene.materials.push_back(jo.contains("material") ? parseMaterial(jo["material"], obj.id)
                                                        : MaterialDesc{});
      for (const json& jm : jo.at("meshes")) {
        Mesh mesh;
        if (jm.contains("obj")) {
          std::string rel = jm["obj"].get<std::string>();
          std::filesystem::path p = base / rel;
          if (!std::filesystem::exists(p))
            throw DomainError("object '" + obj.id + "': missing OBJ file: " + p.string());
          mesh = loadObj(p.string());
        } else if (jm.contains("inline")) {
          const json& ji = jm["inline"];
          const json& jv = ji.at("vertices");
          const json& jt = ji.at("triangles");
          if (jv.size() % 3 != 0) throw DomainError("inline vertices not a multiple of 3");
          if (jt.size() % 3 != 0) throw DomainError("inline triangles not a multiple of 3");
          for (size_t i = 0; i + 2 < jv.size(); i += 3)
            mesh.vertices.push_back({jv[i].get<float>(), jv[i + 1].get<float>(), jv[i + 2].get<float>()});
          for (size_t i = 0; i + 2 < jt.size(); i += 3)
            mesh.triangles.push_back({jt[i].get<uint32_t>(), jt[i + 1].get<uint32_t>(), jt[i + 2].get<uint32_t>()});
          if (mesh.triangles.empty())
            throw DomainError("object '" + obj.id + "': inline mesh has zero triangles");
        } else {
          throw DomainError("object '" + obj.id + "': mesh entry needs 'obj' or 'inline'");
        }
        mesh.material = material;
        obj.meshes.push_back(uint32_t(scene.meshes.size()));
        scene.meshes.push_back(std::move(mesh));
      }
      objectIds.push_back(obj.id);
      scene.objects.push_back(std::move(obj));
    }

    for (const json& ji : doc.at("instances")) {
      Instance inst;
      std::string ref = ji.at("object").get<std::string>();
      auto it = std::find(objectIds.begin(), objectIds.end(), ref);
      if (it == objectIds.end())
        throw DomainError("instance references unknown object '" + ref + "'");
      inst.object = uint32_t(it - objectIds.begin());
      if (ji.contains("transform")) {
        const json& jt = ji["transform"];
        if (jt.size() != 12) throw DomainError("instance transform must have 12 floats");
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 4; ++c) inst.transform.m[r][c] = jt[r * 4 + c].get<float>();
      }
      scene.instances.push_back(inst);
    }
  } catch (const json::exception& e) {
    throw DomainError("scene format error in " + path + ": " + e.what());
  }

  scene.finalize();
  return scene;
}

// ---------------------------------------------------------------------------
// Procedural fixtures

static float groundHeight(float x, float z) {
  return 0.6f * std::sin(x * 0.37f) * std::cos(z * 0.29f);
}

static Mesh makeTreeCanopy(bool tall) {
  // Small pyramid canopy on a thin trunk; the 'tall' variant is a double cone.
  Mesh m;
  auto quadCols = [&](float y0, float y1, float r0, float r1) {
    uint32_t base = uint32_t(m.vertices.size());
    m.vertices.push_back({-r0, y0, -r0});
    m.vertices.push_back({r0, y0, -r0});
    m.vertices.push_back({r0, y0, r0});
    m.vertices.push_back({-r0, y0, r0});
    m.vertices.push_back({0.f, y1, 0.f});
    (void)r1;
    for (uint32_t i = 0; i < 4; ++i)
      m.triangles.push_back({base + i, base + (i + 1) % 4, base + 4});
    m.triangles.push_back({base + 0, base + 2, base + 1});
    m.triangles.push_back({base + 0, base + 3, base + 2});
  };
  if (tall) {
    quadCols(0.6f, 1.6f, 0.45f, 0.f);
    quadCols(1.2f, 2.2f, 0.32f, 0.f);
  } else {
    quadCols(0.5f, 1.4f, 0.55f, 0.f);
  }
  return m;
}

static Mesh makeTrunk() {
  Mesh m;
  float r = 0.08f, h = 0.7f;
  m.vertices = {{-r, 0, -r}, {r, 0, -r}, {r, 0, r}, {-r, 0, r},
                {-r, h, -r}, {r, h, -r}, {r, h, r}, {-r, h, r}};
  m.triangles = {{0, 1, 5}, {0, 5, 4}, {1, 2, 6}, {1, 6, 5},
                 {2, 3, 7}, {2, 7, 6}, {3, 0, 4}, {3, 4, 7}};
  return m;
}

Scene generateMiniIsland(int groundResolution, int treesC, int treesD, uint64_t seed) {
  if (groundResolution < 2) throw DomainError("groundResolution must be >= 2");
  if (treesC < 1 || treesD < 1) throw DomainError("tree counts must be >= 1");

  Scene scene;
  const float S = 10.f;  // half extent of the island

  // Materials: ground A, ground B, tree C, tree D (emissive canopy).
  scene.materials.push_back({MaterialDesc::Kind::Diffuse, {0.28f, 0.45f, 0.20f}, {}});
  scene.materials.push_back({MaterialDesc::Kind::Diffuse, {0.58f, 0.52f, 0.38f}, {}});
  scene.materials.push_back({MaterialDesc::Kind::Diffuse, {0.16f, 0.42f, 0.20f}, {}});
  scene.materials.push_back({MaterialDesc::Kind::Emissive, {0.6f, 0.55f, 0.3f}, {3.0f, 2.4f, 1.2f}});

  // Two interleaved ground meshes: checkerboard cells of one height-field.
  Mesh groundA, groundB;
  int n = groundResolution;
  auto cellCorner = [&](int i, int j) {
    float x = -S + 2 * S * float(i) / float(n);
    float z = -S + 2 * S * float(j) / float(n);
    return Vec3{x, groundHeight(x, z), z};
  };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      Mesh& m = ((i + j) & 1) ? groundB : groundA;
      uint32_t base = uint32_t(m.vertices.size());
      m.vertices.push_back(cellCorner(i, j));
      m.vertices.push_back(cellCorner(i + 1, j));
      m.vertices.push_back(cellCorner(i + 1, j + 1));
      m.vertices.push_back(cellCorner(i, j + 1));
      m.triangles.push_back({base, base + 2, base + 1});
      m.triangles.push_back({base, base + 3, base + 2});
    }
  }
  groundA.material = 0;
  groundB.material = 1;

  auto addObject = [&](const std::string& id, std::vector<Mesh> parts) {
    SceneObject obj;
    obj.id = id;
    for (Mesh& m : parts) {
      obj.meshes.push_back(uint32_t(scene.meshes.size()));
      scene.meshes.push_back(std::move(m));
    }
    scene.objects.push_back(std::move(obj));
    return uint32_t(scene.objects.size() - 1);
  };

  addObject("ground-a", {std::move(groundA)});
  addObject("ground-b", {std::move(groundB)});

  Mesh treeC = makeTreeCanopy(false);
  treeC.material = 2;
  Mesh trunkC = makeTrunk();
  trunkC.material = 2;
  uint32_t objC = addObject("tree-c", {std::move(treeC), std::move(trunkC)});

  Mesh treeD = makeTreeCanopy(true);
  treeD.material = 3;
  uint32_t objD = addObject("tree-d", {std::move(treeD)});

  scene.instances.push_back({0, Affine3::identity(), {}});
  scene.instances.push_back({1, Affine3::identity(), {}});

  uint64_t state = seed;
  auto nextF = [&]() {
    state = splitmix64(state);
    return float(state >> 40) * 0x1p-24f;
  };
  auto placeTrees = [&](uint32_t obj, int count) {
    for (int k = 0; k < count; ++k) {
      float x = (nextF() * 2.f - 1.f) * S * 0.9f;
      float z = (nextF() * 2.f - 1.f) * S * 0.9f;
      float s = 0.6f + nextF() * 0.8f;
      float rot = nextF() * 6.2831853f;
      Affine3 xf = Affine3::translate({x, groundHeight(x, z), z}) * Affine3::rotateY(rot) *
                   Affine3::scale(s);
      scene.instances.push_back({obj, xf, {}});
    }
  };
  placeTrees(objC, treesC);
  placeTrees(objD, treesD);

  scene.environment = {0.45f, 0.55f, 0.70f};
  scene.camera.position = {S * 1.25f, S * 0.85f, S * 1.45f};
  scene.camera.lookAt = {0.f, 0.f, 0.f};
  scene.camera.fovY = 48.f;

  scene.finalize();
  return scene;
}

Scene generateBoxScene() {
  Scene scene;
  auto quad = [](Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
    Mesh m;
    m.vertices = {a, b, c, d};
    m.triangles = {{0, 1, 2}, {0, 2, 3}};
    return m;
  };
  auto box = [](Vec3 lo, Vec3 hi) {
    Mesh m;
    m.vertices = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, lo.y, hi.z}, {lo.x, lo.y, hi.z},
                  {lo.x, hi.y, lo.z}, {hi.x, hi.y, lo.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
    m.triangles = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
                   {1, 2, 6}, {1, 6, 5}, {2, 3, 7}, {2, 7, 6}, {3, 0, 4}, {3, 4, 7}};
    return m;
  };

  struct Entry {
    std::string id;
    Mesh mesh;
    MaterialDesc mat;
  };
  MaterialDesc white{MaterialDesc::Kind::Diffuse, {0.72f, 0.72f, 0.72f}, {}};
  MaterialDesc red{MaterialDesc::Kind::Diffuse, {0.62f, 0.08f, 0.08f}, {}};
  MaterialDesc green{MaterialDesc::Kind::Diffuse, {0.08f, 0.55f, 0.10f}, {}};
  MaterialDesc light{MaterialDesc::Kind::Emissive, {0.7f, 0.7f, 0.7f}, {14.f, 12.f, 9.f}};

  std::vector<Entry> entries;
  entries.push_back({"floor", quad({0, 0, 0}, {4, 0, 0}, {4, 0, 4}, {0, 0, 4}), white});
  entries.push_back({"ceiling", quad({0, 4, 0}, {0, 4, 4}, {4, 4, 4}, {4, 4, 0}), white});
  entries.push_back({"back", quad({0, 0, 0}, {0, 4, 0}, {4, 4, 0}, {4, 0, 0}), white});
  entries.push_back({"left", quad({0, 0, 0}, {0, 0, 4}, {0, 4, 4}, {0, 4, 0}), red});
  entries.push_back({"right", quad({4, 0, 0}, {4, 4, 0}, {4, 4, 4}, {4, 0, 4}), green});
  entries.push_back({"panel", quad({1.4f, 3.98f, 1.4f}, {1.4f, 3.98f, 2.6f},
                                   {2.6f, 3.98f, 2.6f}, {2.6f, 3.98f, 1.4f}),
                     light});
  // boxes float slightly so no face is coplanar with the floor
  entries.push_back({"short-box", box({2.3f, 0.004f, 0.8f}, {3.4f, 1.2f, 1.9f}), white});
  entries.push_back({"tall-box", box({0.7f, 0.004f, 1.7f}, {1.8f, 2.6f, 2.8f}), white});

  for (Entry& e : entries) {
    uint32_t mat = uint32_t(scene.materials.size());
    scene.materials.push_back(e.mat);
    e.mesh.material = mat;
    SceneObject obj;
    obj.id = e.id;
    obj.meshes.push_back(uint32_t(scene.meshes.size()));
    scene.meshes.push_back(std::move(e.mesh));
    uint32_t objId = uint32_t(scene.objects.size());
    scene.objects.push_back(std::move(obj));
    scene.instances.push_back({objId, Affine3::identity(), {}});
  }

  scene.environment = {0.f, 0.f, 0.f};
  scene.camera.position = {2.f, 2.f, 9.5f};
  scene.camera.lookAt = {2.f, 2.f, 0.f};
  scene.camera.fovY = 40.f;
  scene.finalize();
  return scene;
}

Camera experimentView(const Scene& scene, int view) {
  Camera cam = scene.camera;
  Vec3 c = scene.bounds.center();
  Vec3 d = scene.bounds.diagonal();
  float r = std::max({d.x, d.y, d.z});
  cam.lookAt = c;
  switch (view) {
    case 0: cam.position = c + Vec3{0.7f * r, 0.5f * r, 0.8f * r}; break;
    case 1: cam.position = c + Vec3{-0.95f * r, 0.12f * r, 0.25f * r}; break;
    case 2:
      cam.position = c + Vec3{0.02f * r, 1.4f * r, 0.02f * r};
      cam.up = {0, 0, -1};
      break;
    default: throw DomainError("experiment view must be 0, 1, or 2");
  }
  return cam;
}

}  // namespace dppt
