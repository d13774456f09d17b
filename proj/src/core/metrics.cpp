// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/metrics.hpp"

#include <sstream>

#include "core/engine.hpp"
#include "core/error.hpp"

namespace dppt {

std::string FrameStats::toCsv() const {
  std::ostringstream out;
  out << "metric,value\n";
  out << "forwardsTotal," << forwardsTotal << "\n";
  out << "bytesRays," << bytesRays << "\n";
  out << "bytesTiles," << bytesTiles << "\n";
  out << "droppedNonFinite," << droppedNonFinite << "\n";
  out << "retraceMisses," << retraceMisses << "\n";
  out << "shadowForwards," << shadowForwards << "\n";
  for (size_t i = 0; i < roundsPerWavefront.size(); ++i)
    out << "roundsWavefront" << i << "," << roundsPerWavefront[i] << "\n";
  for (size_t i = 0; i < perRankRayCounts.size(); ++i)
    out << "raysRank" << i << "," << perRankRayCounts[i] << "\n";
  return out.str();
}

std::string ForwardsTable::toCsv() const {
  std::ostringstream out;
  out << "view";
  for (const std::string& s : strategies) out << "," << s;
  out << "\n";
  for (size_t v = 0; v < views.size(); ++v) {
    out << views[v];
    for (uint64_t f : forwards[v]) out << "," << f;
    out << "\n";
  }
  return out.str();
}

ForwardsTable tabulateForwards(const Scene& scene, const std::vector<int>& views,
                               const std::vector<Strategy>& strategies, int rankCount, int width,
                               int height, int maxBounce, uint64_t seed, MaskMode maskMode) {
  ForwardsTable table;
  for (Strategy s : strategies) table.strategies.push_back(strategyName(s));
  table.views = views;
  for (int view : views) {
    std::vector<uint64_t> row;
    for (Strategy strategy : strategies) {
      PartitionPlan plan = partition(scene, rankCount, strategy);
      ProxySet proxySet = buildProxySet(scene, plan, defaultProxyMode(strategy));
      RenderConfig cfg;
      cfg.width = width;
      cfg.height = height;
      cfg.spp = 1;
      cfg.maxBounce = maxBounce;
      cfg.seed = seed;
      cfg.maskMode = maskMode;
      cfg.camera = experimentView(scene, view);
      FrameStats stats;
      renderInProc(scene, plan, proxySet, cfg, stats);
      row.push_back(stats.forwardsTotal);
    }
    table.forwards.push_back(std::move(row));
  }
  return table;
}

std::string MaxPartTable::toCsv() const {
  std::ostringstream out;
  out << "parts";
  for (const std::string& s : strategies) out << "," << s;
  out << "\n";
  size_t longest = 0;
  for (const auto& c : curves) longest = std::max(longest, c.size());
  for (size_t i = 0; i < longest; ++i) {
    out << (i + 1);
    for (const auto& c : curves) {
      out << ",";
      if (i < c.size()) out << c[i].second;
    }
    out << "\n";
  }
  return out.str();
}

MaxPartTable tabulateMaxPart(const Scene& scene, const std::vector<Strategy>& strategies,
                             const MemoryModel& model, int nMax) {
  MaxPartTable table;
  for (Strategy s : strategies) {
    table.strategies.push_back(strategyName(s));
    table.curves.push_back(maxPartSizeCurve(scene, s, model, nMax));
  }
  return table;
}

}  // namespace dppt
