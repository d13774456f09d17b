// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "core/engine.hpp"
#include "core/proxy.hpp"

namespace dppt {

// Ground-truth accumulation buffer: the same shading code and sample streams
// as the engine, run on a single rank with no transport.
std::vector<Vec3> renderReference(const Scene& scene, const RenderConfig& cfg);

// Exhaustive-scan version of the forwarding operator, used as the oracle in
// property tests against the proxy BVH walk.
std::optional<int> forwardOracle(const Ray& ray, RankMask visited, const ProxySet& proxies,
                                 bool tmaxCulling, uint32_t seed);

}  // namespace dppt
