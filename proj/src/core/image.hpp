// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/math.hpp"

namespace dppt {

// Gamma 2.2 tone map of an accumulation buffer (radiance sums over spp).
std::vector<uint8_t> toneMap(const std::vector<Vec3>& accum, int spp);

void writePpm(const std::string& path, int width, int height, const std::vector<uint8_t>& rgb);
void writePng(const std::string& path, int width, int height, const std::vector<uint8_t>& rgb);

// Raw accumulation dump for oracle diffing: u32 width, u32 height,
// u32 channels (3), then width*height*3 little-endian f32 values.
void writeAccumRaw(const std::string& path, int width, int height,
                   const std::vector<Vec3>& accum);
std::vector<Vec3> readAccumRaw(const std::string& path, int& width, int& height);

// Largest per-channel error, relative for values above 1:
// max over pixels of |a-b| / max(1, |a|, |b|).
float maxRelativeDiff(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

}  // namespace dppt
