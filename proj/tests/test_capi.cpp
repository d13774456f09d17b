// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "dppt.h"

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() / "dppt_capi_test";
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

dppt_render_opts tinyOpts() {
  dppt_render_opts opts{};
  opts.width = 16;
  opts.height = 16;
  opts.spp = 1;
  opts.max_bounce = 2;
  opts.seed = 1;
  opts.mask_mode = "bitmask8";
  opts.view = -1;
  opts.backend = "inproc";
  return opts;
}

}  // namespace

TEST_CASE("scene handles report structure and digest") {
  dppt_scene* scene = nullptr;
  REQUIRE(dppt_scene_mini_island(8, 3, 4, 42, &scene) == DPPT_OK);
  uint32_t objects = 0, meshes = 0, instances = 0;
  uint64_t digest = 0;
  CHECK(dppt_scene_info(scene, &objects, &meshes, &instances, &digest) == DPPT_OK);
  CHECK(objects == 4);
  CHECK(instances == 9);
  CHECK(digest != 0);
  dppt_scene_destroy(scene);
}

TEST_CASE("errors set a readable message and a domain status") {
  dppt_scene* scene = nullptr;
  CHECK(dppt_scene_load("/nonexistent/scene.json", &scene) == DPPT_ERROR_DOMAIN);
  CHECK(std::string(dppt_last_error()).find("scene") != std::string::npos);
  CHECK(dppt_scene_mini_island(1, 3, 4, 42, &scene) == DPPT_ERROR_DOMAIN);
  CHECK(dppt_scene_info(nullptr, nullptr, nullptr, nullptr, nullptr) == DPPT_ERROR_DOMAIN);
}

TEST_CASE("plan build, render, reference, and compare round-trip") {
  TempDir tmp;
  dppt_scene* scene = nullptr;
  REQUIRE(dppt_scene_box(&scene) == DPPT_OK);

  dppt_plan* plan = nullptr;
  REQUIRE(dppt_plan_build(scene, 2, "best", &plan) == DPPT_OK);
  CHECK(dppt_plan_save_json(scene, plan, tmp.file("plan.json").c_str()) == DPPT_OK);
  CHECK(dppt_plan_save_proxies_obj(plan, tmp.file("proxies.obj").c_str()) == DPPT_OK);
  CHECK(std::filesystem::file_size(tmp.file("plan.json")) > 0);
  CHECK(std::filesystem::file_size(tmp.file("proxies.obj")) > 0);

  dppt_render_opts opts = tinyOpts();
  std::string accum = tmp.file("frame.raw");
  std::string png = tmp.file("frame.png");
  std::string stats = tmp.file("stats.csv");
  REQUIRE(dppt_render(scene, plan, &opts, png.c_str(), nullptr, accum.c_str(), stats.c_str()) ==
          DPPT_OK);
  CHECK(std::filesystem::file_size(png) > 8);
  CHECK(std::filesystem::file_size(stats) > 0);

  std::string ref = tmp.file("ref.raw");
  REQUIRE(dppt_render_reference(scene, &opts, nullptr, ref.c_str()) == DPPT_OK);
  float diff = 1.f;
  REQUIRE(dppt_compare_accum(accum.c_str(), ref.c_str(), &diff) == DPPT_OK);
  CHECK(diff <= 1e-4f);

  dppt_plan_destroy(plan);
  dppt_scene_destroy(scene);
}

TEST_CASE("unknown strategy and backend are rejected") {
  dppt_scene* scene = nullptr;
  REQUIRE(dppt_scene_box(&scene) == DPPT_OK);
  dppt_plan* plan = nullptr;
  CHECK(dppt_plan_build(scene, 2, "quantum", &plan) == DPPT_ERROR_DOMAIN);
  REQUIRE(dppt_plan_build(scene, 2, "object-naive", &plan) == DPPT_OK);
  dppt_render_opts opts = tinyOpts();
  opts.backend = "carrier-pigeon";
  CHECK(dppt_render(scene, plan, &opts, nullptr, nullptr, nullptr, nullptr) ==
        DPPT_ERROR_DOMAIN);
  dppt_plan_destroy(plan);
  dppt_scene_destroy(scene);
}
