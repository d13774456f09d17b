/* Copyright 2026 The dppt Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the distributed path tracing simulator. All functions
 * return DPPT_OK or an error code; dppt_last_error() describes the most
 * recent failure on the calling thread.
 */

#ifndef DPPT_H
#define DPPT_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dppt_status {
  DPPT_OK = 0,
  DPPT_ERROR_DOMAIN = 1,   /* invalid input or configuration */
  DPPT_ERROR_PROTOCOL = 2, /* transport / collective contract violation */
} dppt_status;

const char* dppt_last_error(void);

/* Scenes */
typedef struct dppt_scene dppt_scene;

dppt_status dppt_scene_load(const char* path, dppt_scene** out);
dppt_status dppt_scene_mini_island(int ground_resolution, int trees_c, int trees_d,
                                   uint64_t seed, dppt_scene** out);
dppt_status dppt_scene_box(dppt_scene** out);
void dppt_scene_destroy(dppt_scene* scene);
dppt_status dppt_scene_info(const dppt_scene* scene, uint32_t* objects, uint32_t* meshes,
                            uint32_t* instances, uint64_t* digest);

/* Partition plans (the proxy set is derived with the strategy's default
 * proxy mode at build time). */
typedef struct dppt_plan dppt_plan;

dppt_status dppt_plan_build(const dppt_scene* scene, int rank_count, const char* strategy,
                            dppt_plan** out);
void dppt_plan_destroy(dppt_plan* plan);
dppt_status dppt_plan_save_json(const dppt_scene* scene, const dppt_plan* plan,
                                const char* path);
dppt_status dppt_plan_save_proxies_obj(const dppt_plan* plan, const char* path);

/* Rendering */
typedef struct dppt_render_opts {
  int width;
  int height;
  int spp;
  int max_bounce;
  uint64_t seed;
  const char* mask_mode; /* "bitmask8" | "bitmask64" | "replay" */
  int view;              /* -1 = scene camera, 0..2 = canonical views */
  const char* backend;   /* "inproc" | "socket" */
  int rank_id;           /* socket backend: this process's rank */
  const char* host;      /* socket backend, e.g. "127.0.0.1" */
  int base_port;         /* socket backend: rank i listens on base_port + i */
} dppt_render_opts;

/* Any output path may be NULL to skip it. With the socket backend, outputs
 * are written by the rank 0 process only. */
dppt_status dppt_render(const dppt_scene* scene, const dppt_plan* plan,
                        const dppt_render_opts* opts, const char* png_path,
                        const char* ppm_path, const char* accum_path, const char* stats_path);

/* Single-rank ground truth with the same shading code and sample streams. */
dppt_status dppt_render_reference(const dppt_scene* scene, const dppt_render_opts* opts,
                                  const char* png_path, const char* accum_path);

/* Largest per-channel difference of two accumulation dumps, relative for
 * values above 1. */
dppt_status dppt_compare_accum(const char* path_a, const char* path_b, float* max_diff);

/* Experiments (CSV output): total ray forwards per view and strategy, and
 * the largest-part memory estimate across part counts. */
dppt_status dppt_experiment_forwards(const dppt_scene* scene, int rank_count, int width,
                                     int height, int max_bounce, uint64_t seed,
                                     const char* csv_path);
dppt_status dppt_experiment_max_part(const dppt_scene* scene, int n_max, const char* csv_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DPPT_H */
