// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/image.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "core/error.hpp"

namespace dppt {

std::vector<uint8_t> toneMap(const std::vector<Vec3>& accum, int spp) {
  std::vector<uint8_t> rgb(accum.size() * 3);
  float scale = 1.f / float(spp);
  for (size_t i = 0; i < accum.size(); ++i) {
    Vec3 c = accum[i] * scale;
    for (int k = 0; k < 3; ++k) {
      float v = std::pow(std::clamp(c[k], 0.f, 1.f), 1.f / 2.2f);
      rgb[i * 3 + k] = uint8_t(std::lround(v * 255.f));
    }
  }
  return rgb;
}

void writePpm(const std::string& path, int width, int height, const std::vector<uint8_t>& rgb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open for writing: " + path);
  out << "P6\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), std::streamsize(rgb.size()));
  if (!out) throw DomainError("write failed: " + path);
}

namespace {

void pngChunk(std::ofstream& out, const char type[4], const uint8_t* data, size_t size) {
  auto be32 = [&](uint32_t v) {
    uint8_t b[4] = {uint8_t(v >> 24), uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  be32(uint32_t(size));
  out.write(type, 4);
  if (size) out.write(reinterpret_cast<const char*>(data), std::streamsize(size));
  uint32_t crc = crc32(0, nullptr, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  if (size) crc = crc32(crc, data, uInt(size));
  be32(crc);
}

}  // namespace

void writePng(const std::string& path, int width, int height, const std::vector<uint8_t>& rgb) {
  if (rgb.size() != size_t(width) * size_t(height) * 3)
    throw DomainError("pixel buffer does not match the image dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open for writing: " + path);
  static const uint8_t magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.write(reinterpret_cast<const char*>(magic), 8);

  uint8_t ihdr[13];
  uint32_t w = uint32_t(width), h = uint32_t(height);
  ihdr[0] = uint8_t(w >> 24); ihdr[1] = uint8_t(w >> 16); ihdr[2] = uint8_t(w >> 8);
  ihdr[3] = uint8_t(w);
  ihdr[4] = uint8_t(h >> 24); ihdr[5] = uint8_t(h >> 16); ihdr[6] = uint8_t(h >> 8);
  ihdr[7] = uint8_t(h);
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 2;   // truecolor
  ihdr[10] = ihdr[11] = ihdr[12] = 0;
  pngChunk(out, "IHDR", ihdr, sizeof ihdr);

  std::vector<uint8_t> raw(size_t(height) * (size_t(width) * 3 + 1));
  for (int y = 0; y < height; ++y) {
    uint8_t* row = raw.data() + size_t(y) * (size_t(width) * 3 + 1);
    row[0] = 0;  // filter: none
    std::memcpy(row + 1, rgb.data() + size_t(y) * width * 3, size_t(width) * 3);
  }
  uLongf zSize = compressBound(uLong(raw.size()));
  std::vector<uint8_t> z(zSize);
  if (compress2(z.data(), &zSize, raw.data(), uLong(raw.size()), 6) != Z_OK)
    throw DomainError("png compression failed");
  pngChunk(out, "IDAT", z.data(), zSize);
  pngChunk(out, "IEND", nullptr, 0);
  if (!out) throw DomainError("write failed: " + path);
}

void writeAccumRaw(const std::string& path, int width, int height,
                   const std::vector<Vec3>& accum) {
  if (accum.size() != size_t(width) * size_t(height))
    throw DomainError("accumulation buffer does not match the image dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open for writing: " + path);
  uint32_t header[3] = {uint32_t(width), uint32_t(height), 3};
  out.write(reinterpret_cast<char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(accum.data()),
            std::streamsize(accum.size() * sizeof(Vec3)));
  if (!out) throw DomainError("write failed: " + path);
}

std::vector<Vec3> readAccumRaw(const std::string& path, int& width, int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open: " + path);
  uint32_t header[3];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || header[2] != 3) throw DomainError("not an accumulation dump: " + path);
  width = int(header[0]);
  height = int(header[1]);
  std::vector<Vec3> accum(size_t(width) * size_t(height));
  in.read(reinterpret_cast<char*>(accum.data()), std::streamsize(accum.size() * sizeof(Vec3)));
  if (!in) throw DomainError("truncated accumulation dump: " + path);
  return accum;
}

float maxRelativeDiff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.size() != b.size()) throw DomainError("buffers differ in size");
  float worst = 0.f;
  for (size_t i = 0; i < a.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      float denom = std::max({1.f, std::fabs(a[i][k]), std::fabs(b[i][k])});
      worst = std::max(worst, std::fabs(a[i][k] - b[i][k]) / denom);
    }
  }
  return worst;
}

}  // namespace dppt
