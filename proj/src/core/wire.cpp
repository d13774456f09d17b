// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/wire.hpp"

#include <bit>
#include <cstring>

#include "core/error.hpp"
#include "core/half.hpp"

static_assert(std::endian::native == std::endian::little,
              "wire codec assumes a little-endian host");

namespace dppt {

MaskMode maskModeFromName(const std::string& name) {
  if (name == "bitmask8") return MaskMode::Bitmask8;
  if (name == "bitmask64") return MaskMode::Bitmask64;
  if (name == "replay") return MaskMode::Replay;
  throw DomainError("unknown mask mode: " + name);
}

std::string maskModeName(MaskMode m) {
  switch (m) {
    case MaskMode::Bitmask8: return "bitmask8";
    case MaskMode::Bitmask64: return "bitmask64";
    case MaskMode::Replay: return "replay";
  }
  return "?";
}

namespace {

void putMask(uint8_t* at, uint64_t value, size_t width) {
  std::memcpy(at, &value, width);  // little-endian truncation keeps low bytes
}

uint64_t getMask(const uint8_t* at, size_t width) {
  uint64_t v = 0;
  std::memcpy(&v, at, width);
  return v;
}

}  // namespace

void encodeRecord(const PathState& p, const WireConfig& cfg, uint8_t* out) {
  size_t size = cfg.recordSize();
  std::memset(out, 0, size);
  std::memcpy(out + 0, &p.origin.x, 4);
  std::memcpy(out + 4, &p.origin.y, 4);
  std::memcpy(out + 8, &p.origin.z, 4);
  uint16_t h[6] = {floatToHalf(p.dir.x),        floatToHalf(p.dir.y),
                   floatToHalf(p.dir.z),        floatToHalf(p.throughput.x),
                   floatToHalf(p.throughput.y), floatToHalf(p.throughput.z)};
  std::memcpy(out + 12, h, 12);
  std::memcpy(out + 24, &p.tMax, 4);
  std::memcpy(out + 28, &p.pixelAndFlags, 4);
  size_t mb = cfg.maskBytes();
  if (cfg.maskMode == MaskMode::Replay)
    putMask(out + 32, p.originRank, mb);
  else
    putMask(out + 32, p.visited, mb);
  putMask(out + 32 + mb, p.hitOwners, mb);
}

PathState decodeRecord(const uint8_t* data, const WireConfig& cfg) {
  PathState p;
  std::memcpy(&p.origin.x, data + 0, 4);
  std::memcpy(&p.origin.y, data + 4, 4);
  std::memcpy(&p.origin.z, data + 8, 4);
  uint16_t h[6];
  std::memcpy(h, data + 12, 12);
  p.dir = {halfToFloat(h[0]), halfToFloat(h[1]), halfToFloat(h[2])};
  p.throughput = {halfToFloat(h[3]), halfToFloat(h[4]), halfToFloat(h[5])};
  std::memcpy(&p.tMax, data + 24, 4);
  std::memcpy(&p.pixelAndFlags, data + 28, 4);
  size_t mb = cfg.maskBytes();
  if (cfg.maskMode == MaskMode::Replay) {
    p.originRank = uint8_t(getMask(data + 32, mb));
    if (p.originRank >= cfg.rankCount) throw ProtocolError("origin rank out of range");
    p.visited = 1ull << p.originRank;
  } else {
    p.visited = getMask(data + 32, mb);
  }
  p.hitOwners = getMask(data + 32 + mb, mb);
  return p;
}

std::vector<uint8_t> encodeRecords(const std::vector<PathState>& paths, const WireConfig& cfg) {
  size_t rec = cfg.recordSize();
  std::vector<uint8_t> out(paths.size() * rec);
  for (size_t i = 0; i < paths.size(); ++i) encodeRecord(paths[i], cfg, out.data() + i * rec);
  return out;
}

std::vector<PathState> decodeRecords(const uint8_t* data, size_t size, const WireConfig& cfg) {
  size_t rec = cfg.recordSize();
  if (size % rec != 0) throw ProtocolError("ray payload is not a whole number of records");
  std::vector<PathState> out(size / rec);
  for (size_t i = 0; i < out.size(); ++i) out[i] = decodeRecord(data + i * rec, cfg);
  return out;
}

}  // namespace dppt
