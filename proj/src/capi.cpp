// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dppt.h"

#include <fstream>
#include <string>

#include "core/engine.hpp"
#include "core/error.hpp"
#include "core/image.hpp"
#include "core/metrics.hpp"
#include "core/partition.hpp"
#include "core/reference.hpp"
#include "core/scene.hpp"
#include "core/socket_group.hpp"

struct dppt_scene {
  dppt::Scene scene;
};

struct dppt_plan {
  dppt::PartitionPlan plan;
  dppt::ProxySet proxySet;
};

namespace {

thread_local std::string g_lastError;

dppt_status fail(dppt_status code, const std::string& message) {
  g_lastError = message;
  return code;
}

template <typename Fn>
dppt_status guarded(Fn&& fn) {
  try {
    fn();
    return DPPT_OK;
  } catch (const dppt::ProtocolError& e) {
    return fail(DPPT_ERROR_PROTOCOL, e.what());
  } catch (const dppt::Error& e) {
    return fail(DPPT_ERROR_DOMAIN, e.what());
  } catch (const std::exception& e) {
    return fail(DPPT_ERROR_DOMAIN, e.what());
  }
}

void writeText(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw dppt::DomainError("cannot open for writing: " + path);
  out << text;
  if (!out) throw dppt::DomainError("write failed: " + path);
}

dppt::RenderConfig makeConfig(const dppt::Scene& scene, const dppt_render_opts& opts) {
  dppt::RenderConfig cfg;
  cfg.width = opts.width;
  cfg.height = opts.height;
  cfg.spp = opts.spp;
  cfg.maxBounce = opts.max_bounce;
  cfg.seed = opts.seed;
  cfg.maskMode = dppt::maskModeFromName(opts.mask_mode ? opts.mask_mode : "bitmask8");
  cfg.camera = opts.view < 0 ? scene.camera : dppt::experimentView(scene, opts.view);
  return cfg;
}

void writeOutputs(const dppt::RenderConfig& cfg, const std::vector<dppt::Vec3>& accum,
                  const dppt::FrameStats& stats, const char* pngPath, const char* ppmPath,
                  const char* accumPath, const char* statsPath) {
  if (pngPath || ppmPath) {
    std::vector<uint8_t> rgb = dppt::toneMap(accum, cfg.spp);
    if (pngPath) dppt::writePng(pngPath, cfg.width, cfg.height, rgb);
    if (ppmPath) dppt::writePpm(ppmPath, cfg.width, cfg.height, rgb);
  }
  if (accumPath) dppt::writeAccumRaw(accumPath, cfg.width, cfg.height, accum);
  if (statsPath) writeText(statsPath, stats.toCsv());
}

}  // namespace

extern "C" {

const char* dppt_last_error(void) { return g_lastError.c_str(); }

dppt_status dppt_scene_load(const char* path, dppt_scene** out) {
  return guarded([&] {
    auto* s = new dppt_scene{dppt::loadScene(path)};
    *out = s;
  });
}

dppt_status dppt_scene_mini_island(int ground_resolution, int trees_c, int trees_d,
                                   uint64_t seed, dppt_scene** out) {
  return guarded([&] {
    auto* s = new dppt_scene{dppt::generateMiniIsland(ground_resolution, trees_c, trees_d, seed)};
    *out = s;
  });
}

dppt_status dppt_scene_box(dppt_scene** out) {
  return guarded([&] {
    auto* s = new dppt_scene{dppt::generateBoxScene()};
    *out = s;
  });
}

void dppt_scene_destroy(dppt_scene* scene) { delete scene; }

dppt_status dppt_scene_info(const dppt_scene* scene, uint32_t* objects, uint32_t* meshes,
                            uint32_t* instances, uint64_t* digest) {
  if (!scene) return fail(DPPT_ERROR_DOMAIN, "null scene handle");
  if (objects) *objects = uint32_t(scene->scene.objects.size());
  if (meshes) *meshes = uint32_t(scene->scene.meshes.size());
  if (instances) *instances = uint32_t(scene->scene.instances.size());
  if (digest) *digest = scene->scene.digest();
  return DPPT_OK;
}

dppt_status dppt_plan_build(const dppt_scene* scene, int rank_count, const char* strategy,
                            dppt_plan** out) {
  if (!scene) return fail(DPPT_ERROR_DOMAIN, "null scene handle");
  return guarded([&] {
    dppt::Strategy s = dppt::strategyFromName(strategy ? strategy : "best");
    auto* p = new dppt_plan;
    p->plan = dppt::partition(scene->scene, rank_count, s);
    p->proxySet = dppt::buildProxySet(scene->scene, p->plan, dppt::defaultProxyMode(s));
    *out = p;
  });
}

void dppt_plan_destroy(dppt_plan* plan) { delete plan; }

dppt_status dppt_plan_save_json(const dppt_scene* scene, const dppt_plan* plan,
                                const char* path) {
  if (!scene || !plan) return fail(DPPT_ERROR_DOMAIN, "null handle");
  return guarded([&] { writeText(path, dppt::planToJson(scene->scene, plan->plan)); });
}

dppt_status dppt_plan_save_proxies_obj(const dppt_plan* plan, const char* path) {
  if (!plan) return fail(DPPT_ERROR_DOMAIN, "null plan handle");
  return guarded([&] { writeText(path, dppt::proxyBoxesToObj(plan->proxySet)); });
}

dppt_status dppt_render(const dppt_scene* scene, const dppt_plan* plan,
                        const dppt_render_opts* opts, const char* png_path,
                        const char* ppm_path, const char* accum_path, const char* stats_path) {
  if (!scene || !plan || !opts) return fail(DPPT_ERROR_DOMAIN, "null handle");
  return guarded([&] {
    dppt::RenderConfig cfg = makeConfig(scene->scene, *opts);
    std::string backend = opts->backend ? opts->backend : "inproc";
    dppt::FrameStats stats;
    std::vector<dppt::Vec3> accum;
    if (backend == "inproc") {
      accum = dppt::renderInProc(scene->scene, plan->plan, plan->proxySet, cfg, stats);
    } else if (backend == "socket") {
      int n = plan->plan.rankCount;
      std::vector<uint16_t> ports(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) ports[size_t(i)] = uint16_t(opts->base_port + i);
      dppt::SocketRankGroup group(opts->rank_id, n, opts->host ? opts->host : "127.0.0.1",
                                  ports);
      accum = dppt::renderRankFrame(group, scene->scene, plan->plan, plan->proxySet, cfg, stats);
      if (opts->rank_id != 0) return;
    } else {
      throw dppt::DomainError("unknown backend: " + backend);
    }
    writeOutputs(cfg, accum, stats, png_path, ppm_path, accum_path, stats_path);
  });
}

dppt_status dppt_render_reference(const dppt_scene* scene, const dppt_render_opts* opts,
                                  const char* png_path, const char* accum_path) {
  if (!scene || !opts) return fail(DPPT_ERROR_DOMAIN, "null handle");
  return guarded([&] {
    dppt::RenderConfig cfg = makeConfig(scene->scene, *opts);
    std::vector<dppt::Vec3> accum = dppt::renderReference(scene->scene, cfg);
    if (png_path) dppt::writePng(png_path, cfg.width, cfg.height, dppt::toneMap(accum, cfg.spp));
    if (accum_path) dppt::writeAccumRaw(accum_path, cfg.width, cfg.height, accum);
  });
}

dppt_status dppt_compare_accum(const char* path_a, const char* path_b, float* max_diff) {
  return guarded([&] {
    int wa, ha, wb, hb;
    std::vector<dppt::Vec3> a = dppt::readAccumRaw(path_a, wa, ha);
    std::vector<dppt::Vec3> b = dppt::readAccumRaw(path_b, wb, hb);
    if (wa != wb || ha != hb) throw dppt::DomainError("accumulation dumps differ in size");
    float d = dppt::maxRelativeDiff(a, b);
    if (max_diff) *max_diff = d;
  });
}

dppt_status dppt_experiment_forwards(const dppt_scene* scene, int rank_count, int width,
                                     int height, int max_bounce, uint64_t seed,
                                     const char* csv_path) {
  if (!scene) return fail(DPPT_ERROR_DOMAIN, "null scene handle");
  return guarded([&] {
    dppt::ForwardsTable table =
        dppt::tabulateForwards(scene->scene, {0, 1, 2}, dppt::allStrategies(), rank_count,
                               width, height, max_bounce, seed, dppt::MaskMode::Bitmask8);
    writeText(csv_path, table.toCsv());
  });
}

dppt_status dppt_experiment_max_part(const dppt_scene* scene, int n_max, const char* csv_path) {
  if (!scene) return fail(DPPT_ERROR_DOMAIN, "null scene handle");
  return guarded([&] {
    dppt::MaxPartTable table =
        dppt::tabulateMaxPart(scene->scene, dppt::allStrategies(), dppt::MemoryModel{}, n_max);
    writeText(csv_path, table.toCsv());
  });
}

}  // extern "C"
