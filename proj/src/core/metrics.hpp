// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/partition.hpp"
#include "core/scene.hpp"
#include "core/wire.hpp"

namespace dppt {

// Per-frame measurements, assembled on the root rank after compositing.
struct FrameStats {
  uint64_t forwardsTotal = 0;              // off-diagonal count-matrix entries
  std::vector<uint64_t> forwardsPerRound;  // one entry per exchange round
  uint64_t bytesRays = 0;                  // wire bytes of forwarded records
  uint64_t bytesTiles = 0;                 // wire bytes of compositing tiles
  std::vector<uint32_t> roundsPerWavefront;
  std::vector<uint64_t> perRankRayCounts;  // rays traced on each rank
  uint64_t droppedNonFinite = 0;
  uint64_t retraceMisses = 0;  // carried hit not reproduced on the shading rank
  uint64_t shadowForwards = 0;

  std::string toCsv() const;
};

// Ray-forwarding experiment: renders every (view, strategy) combination at
// one sample per pixel and tabulates total forwards. Row per view, column
// per strategy.
struct ForwardsTable {
  std::vector<std::string> strategies;
  std::vector<int> views;
  std::vector<std::vector<uint64_t>> forwards;  // [view][strategy]

  std::string toCsv() const;
};
ForwardsTable tabulateForwards(const Scene& scene, const std::vector<int>& views,
                               const std::vector<Strategy>& strategies, int rankCount, int width,
                               int height, int maxBounce, uint64_t seed, MaskMode maskMode);

// Largest-part memory experiment across part counts 1..nMax.
struct MaxPartTable {
  std::vector<std::string> strategies;
  std::vector<std::vector<std::pair<int, double>>> curves;  // per strategy

  std::string toCsv() const;
};
MaxPartTable tabulateMaxPart(const Scene& scene, const std::vector<Strategy>& strategies,
                             const MemoryModel& model, int nMax);

}  // namespace dppt
