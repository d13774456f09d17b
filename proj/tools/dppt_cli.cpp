// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "dppt.h"

namespace {

struct SceneArgs {
  std::string path;
  bool miniIsland = false;
  bool box = false;
  int groundRes = 8;
  int treesC = 3;
  int treesD = 4;
  uint64_t sceneSeed = 42;
};

void addSceneArgs(CLI::App* cmd, SceneArgs& args) {
  cmd->add_option("--scene", args.path, "scene description file (json)");
  cmd->add_flag("--mini-island", args.miniIsland, "use the generated island test scene");
  cmd->add_flag("--box", args.box, "use the generated interior box test scene");
  cmd->add_option("--ground-res", args.groundRes, "island ground resolution");
  cmd->add_option("--trees-c", args.treesC, "island instances of tree type C");
  cmd->add_option("--trees-d", args.treesD, "island instances of tree type D");
  cmd->add_option("--scene-seed", args.sceneSeed, "island placement seed");
}

dppt_scene* openScene(const SceneArgs& args) {
  dppt_scene* scene = nullptr;
  dppt_status st;
  if (args.miniIsland)
    st = dppt_scene_mini_island(args.groundRes, args.treesC, args.treesD, args.sceneSeed,
                                &scene);
  else if (args.box)
    st = dppt_scene_box(&scene);
  else if (!args.path.empty())
    st = dppt_scene_load(args.path.c_str(), &scene);
  else {
    std::fprintf(stderr, "error: no scene given (--scene, --mini-island, or --box)\n");
    return nullptr;
  }
  if (st != DPPT_OK) {
    std::fprintf(stderr, "error: %s\n", dppt_last_error());
    return nullptr;
  }
  return scene;
}

int check(dppt_status st) {
  if (st == DPPT_OK) return 0;
  std::fprintf(stderr, "error: %s\n", dppt_last_error());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed object-space path tracing simulator"};
  app.require_subcommand(1);

  // scene info
  SceneArgs infoScene;
  CLI::App* info = app.add_subcommand("info", "print scene summary");
  addSceneArgs(info, infoScene);

  // partition
  SceneArgs partScene;
  int partRanks = 4;
  std::string partStrategy = "best";
  std::string planJson, proxiesObj;
  CLI::App* part = app.add_subcommand("partition", "build a partition plan");
  addSceneArgs(part, partScene);
  part->add_option("--ranks", partRanks, "number of simulated ranks");
  part->add_option("--strategy", partStrategy,
                   "spatial-simple|spatial-sah|object-naive|object-proxies|bvh-style|best");
  part->add_option("--plan-json", planJson, "write the plan as json");
  part->add_option("--proxies-obj", proxiesObj, "write proxy boxes as obj");

  // render
  SceneArgs renderScene;
  int ranks = 1, width = 256, height = 256, spp = 4, bounces = 4, view = -1;
  uint64_t seed = 0;
  std::string strategy = "best", mask = "bitmask8", backend = "inproc";
  std::string pngOut, ppmOut, accumOut, statsOut, host = "127.0.0.1";
  int basePort = 19750, rankId = -1;
  CLI::App* render = app.add_subcommand("render", "render a frame across simulated ranks");
  addSceneArgs(render, renderScene);
  render->add_option("--ranks", ranks, "number of simulated ranks");
  render->add_option("--strategy", strategy, "partitioning strategy");
  render->add_option("--width", width);
  render->add_option("--height", height);
  render->add_option("--spp", spp, "samples per pixel");
  render->add_option("--bounces", bounces, "maximum path bounces");
  render->add_option("--seed", seed);
  render->add_option("--mask", mask, "bitmask8|bitmask64|replay");
  render->add_option("--view", view, "-1 = scene camera, 0..2 = canonical views");
  render->add_option("--backend", backend, "inproc|socket");
  render->add_option("--host", host, "socket backend bind address");
  render->add_option("--base-port", basePort, "socket backend: rank i listens on base+i");
  render->add_option("--rank-id", rankId, "socket backend: run as this single rank")
      ->group("");  // internal, used by the spawned worker processes
  render->add_option("--png", pngOut, "tone-mapped png output");
  render->add_option("--ppm", ppmOut, "tone-mapped ppm output");
  render->add_option("--accum", accumOut, "raw accumulation dump output");
  render->add_option("--stats", statsOut, "frame statistics csv output");

  // reference
  SceneArgs refScene;
  int refWidth = 256, refHeight = 256, refSpp = 4, refBounces = 4, refView = -1;
  uint64_t refSeed = 0;
  std::string refPng, refAccum;
  CLI::App* ref = app.add_subcommand("reference", "single-rank ground-truth render");
  addSceneArgs(ref, refScene);
  ref->add_option("--width", refWidth);
  ref->add_option("--height", refHeight);
  ref->add_option("--spp", refSpp);
  ref->add_option("--bounces", refBounces);
  ref->add_option("--seed", refSeed);
  ref->add_option("--view", refView);
  ref->add_option("--png", refPng);
  ref->add_option("--accum", refAccum);

  // compare
  std::string cmpA, cmpB;
  float tolerance = 1e-4f;
  CLI::App* cmp = app.add_subcommand("compare", "diff two accumulation dumps");
  cmp->add_option("a", cmpA)->required();
  cmp->add_option("b", cmpB)->required();
  cmp->add_option("--tolerance", tolerance, "maximum allowed difference");

  // experiments
  SceneArgs expScene;
  std::string expKind = "forwards", expCsv = "experiment.csv";
  int expRanks = 4, expWidth = 128, expHeight = 128, expBounces = 4, expNMax = 16;
  uint64_t expSeed = 0;
  CLI::App* experiment = app.add_subcommand("experiment", "run a measurement experiment");
  addSceneArgs(experiment, expScene);
  experiment->add_option("kind", expKind, "forwards|maxpart")->required();
  experiment->add_option("--csv", expCsv, "output csv path");
  experiment->add_option("--ranks", expRanks);
  experiment->add_option("--width", expWidth);
  experiment->add_option("--height", expHeight);
  experiment->add_option("--bounces", expBounces);
  experiment->add_option("--seed", expSeed);
  experiment->add_option("--nmax", expNMax, "maxpart: largest part count");

  CLI11_PARSE(app, argc, argv);

  if (info->parsed()) {
    dppt_scene* scene = openScene(infoScene);
    if (!scene) return 1;
    uint32_t objects, meshes, instances;
    uint64_t digest;
    int rc = check(dppt_scene_info(scene, &objects, &meshes, &instances, &digest));
    if (rc == 0)
      std::printf("objects %u\nmeshes %u\ninstances %u\ndigest %016llx\n", objects, meshes,
                  instances, static_cast<unsigned long long>(digest));
    dppt_scene_destroy(scene);
    return rc;
  }

  if (part->parsed()) {
    dppt_scene* scene = openScene(partScene);
    if (!scene) return 1;
    dppt_plan* plan = nullptr;
    int rc = check(dppt_plan_build(scene, partRanks, partStrategy.c_str(), &plan));
    if (rc == 0 && !planJson.empty())
      rc = check(dppt_plan_save_json(scene, plan, planJson.c_str()));
    if (rc == 0 && !proxiesObj.empty())
      rc = check(dppt_plan_save_proxies_obj(plan, proxiesObj.c_str()));
    dppt_plan_destroy(plan);
    dppt_scene_destroy(scene);
    return rc;
  }

  if (render->parsed()) {
    dppt_scene* scene = openScene(renderScene);
    if (!scene) return 1;
    dppt_plan* plan = nullptr;
    int rc = check(dppt_plan_build(scene, ranks, strategy.c_str(), &plan));
    if (rc != 0) {
      dppt_scene_destroy(scene);
      return rc;
    }
    dppt_render_opts opts{};
    opts.width = width;
    opts.height = height;
    opts.spp = spp;
    opts.max_bounce = bounces;
    opts.seed = seed;
    opts.mask_mode = mask.c_str();
    opts.view = view;
    opts.backend = backend.c_str();
    opts.host = host.c_str();
    opts.base_port = basePort;

    auto runRank = [&](int id) {
      opts.rank_id = id;
      return check(dppt_render(scene, plan, &opts,  //
                               pngOut.empty() ? nullptr : pngOut.c_str(),
                               ppmOut.empty() ? nullptr : ppmOut.c_str(),
                               accumOut.empty() ? nullptr : accumOut.c_str(),
                               statsOut.empty() ? nullptr : statsOut.c_str()));
    };

    if (backend != "socket") {
      rc = runRank(0);
    } else if (rankId >= 0) {
      rc = runRank(rankId);
    } else {
      // head process: one worker process per rank, outputs come from rank 0
      std::vector<pid_t> children;
      for (int r = 0; r < ranks; ++r) {
        pid_t pid = fork();
        if (pid == 0) _exit(runRank(r));
        if (pid < 0) {
          std::fprintf(stderr, "error: fork failed\n");
          rc = 1;
          break;
        }
        children.push_back(pid);
      }
      for (pid_t pid : children) {
        int status = 0;
        waitpid(pid, &status, 0);
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) rc = 1;
      }
    }
    dppt_plan_destroy(plan);
    dppt_scene_destroy(scene);
    return rc;
  }

  if (ref->parsed()) {
    dppt_scene* scene = openScene(refScene);
    if (!scene) return 1;
    dppt_render_opts opts{};
    opts.width = refWidth;
    opts.height = refHeight;
    opts.spp = refSpp;
    opts.max_bounce = refBounces;
    opts.seed = refSeed;
    opts.mask_mode = "bitmask8";
    opts.view = refView;
    int rc = check(dppt_render_reference(scene, &opts, refPng.empty() ? nullptr : refPng.c_str(),
                                         refAccum.empty() ? nullptr : refAccum.c_str()));
    dppt_scene_destroy(scene);
    return rc;
  }

  if (cmp->parsed()) {
    float diff = 0.f;
    int rc = check(dppt_compare_accum(cmpA.c_str(), cmpB.c_str(), &diff));
    if (rc != 0) return rc;
    std::printf("max difference %g (tolerance %g)\n", double(diff), double(tolerance));
    return diff <= tolerance ? 0 : 1;
  }

  if (experiment->parsed()) {
    dppt_scene* scene = openScene(expScene);
    if (!scene) return 1;
    int rc;
    if (expKind == "forwards")
      rc = check(dppt_experiment_forwards(scene, expRanks, expWidth, expHeight, expBounces,
                                          expSeed, expCsv.c_str()));
    else if (expKind == "maxpart")
      rc = check(dppt_experiment_max_part(scene, expNMax, expCsv.c_str()));
    else {
      std::fprintf(stderr, "error: unknown experiment kind: %s\n", expKind.c_str());
      rc = 1;
    }
    dppt_scene_destroy(scene);
    return rc;
  }

  return 0;
}
