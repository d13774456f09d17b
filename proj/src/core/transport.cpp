// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/transport.hpp"

#include <barrier>
#include <cstring>

#include "core/error.hpp"

namespace dppt {

std::vector<uint32_t> exchangeCounts(RankGroup& group, const std::vector<uint32_t>& sendCounts) {
  if (int(sendCounts.size()) != group.rankCount())
    throw ProtocolError("send-count row has wrong length");
  std::vector<uint32_t> matrix = group.allGatherCounts(sendCounts);
  group.counters().countMatrices.push_back(matrix);
  return matrix;
}

std::vector<PathState> exchangeRays(RankGroup& group, const WireConfig& cfg,
                                    const std::vector<std::vector<PathState>>& buckets,
                                    const std::vector<uint32_t>& matrix) {
  int n = group.rankCount();
  int self = group.selfRank();
  if (int(buckets.size()) != n) throw ProtocolError("bucket array has wrong length");
  for (int d = 0; d < n; ++d)
    if (buckets[d].size() != matrix[size_t(self) * n + d])
      throw ProtocolError("bucket size disagrees with announced count");

  size_t rec = cfg.recordSize();
  std::vector<std::vector<uint8_t>> out(n);
  for (int d = 0; d < n; ++d) {
    out[d] = encodeRecords(buckets[d], cfg);
    if (d != self) {
      group.counters().bytesRays += out[d].size();
      group.counters().recordsForwarded += buckets[d].size();
    }
  }
  std::vector<std::vector<uint8_t>> in = group.allToAll(out, Opcode::Rays);

  std::vector<PathState> received;
  for (int src = 0; src < n; ++src) {
    if (in[src].size() != size_t(matrix[size_t(src) * n + self]) * rec)
      throw ProtocolError("received payload disagrees with announced count");
    std::vector<PathState> part = decodeRecords(in[src].data(), in[src].size(), cfg);
    received.insert(received.end(), part.begin(), part.end());
  }
  return received;
}

std::pair<int, int> tileRows(int height, int rankCount, int rank) {
  return {rank * height / rankCount, (rank + 1) * height / rankCount};
}

std::vector<Vec3> exchangeFrameTiles(RankGroup& group, const std::vector<Vec3>& partial,
                                     int width, int height) {
  int n = group.rankCount();
  int self = group.selfRank();
  if (partial.size() != size_t(width) * size_t(height))
    throw ProtocolError("partial frame buffer has wrong dimensions");

  std::vector<std::vector<uint8_t>> out(n);
  for (int d = 0; d < n; ++d) {
    auto [r0, r1] = tileRows(height, n, d);
    size_t bytes = size_t(r1 - r0) * width * sizeof(Vec3);
    out[d].resize(bytes);
    if (bytes)
      std::memcpy(out[d].data(), partial.data() + size_t(r0) * width, bytes);
    if (d != self) group.counters().bytesTiles += bytes;
  }
  std::vector<std::vector<uint8_t>> in = group.allToAll(out, Opcode::Tiles);

  auto [r0, r1] = tileRows(height, n, self);
  size_t pixels = size_t(r1 - r0) * width;
  std::vector<Vec3> tile(pixels, Vec3{0, 0, 0});
  for (int src = 0; src < n; ++src) {
    if (in[src].size() != pixels * sizeof(Vec3))
      throw ProtocolError("tile payload has wrong size");
    const Vec3* p = reinterpret_cast<const Vec3*>(in[src].data());
    for (size_t i = 0; i < pixels; ++i) tile[i] = tile[i] + p[i];
  }
  return tile;
}

// ---------------------------------------------------------------------------
// In-process backend

class InProcShared {
 public:
  explicit InProcShared(int n)
      : rankCount(n), barrier(n), stamps(static_cast<size_t>(n)), slots(static_cast<size_t>(n)) {}

  int rankCount;
  std::barrier<> barrier;
  struct Stamp {
    uint64_t seq;
    Opcode opcode;
  };
  std::vector<Stamp> stamps;
  std::vector<std::vector<std::vector<uint8_t>>> slots;  // [rank] -> per-dest payloads
};

std::shared_ptr<InProcShared> makeInProcShared(int rankCount) {
  if (rankCount < 1) throw DomainError("rankCount must be >= 1");
  return std::make_shared<InProcShared>(rankCount);
}

InProcGroup::InProcGroup(std::shared_ptr<InProcShared> shared, int rank)
    : shared_(std::move(shared)), rank_(rank) {
  if (rank_ < 0 || rank_ >= shared_->rankCount) throw DomainError("rank out of range");
}

int InProcGroup::rankCount() const { return shared_->rankCount; }

// Rendezvous: publish, meet, verify lockstep, read, meet again so slots can
// be reused. A mismatch is observed by every rank, so all of them throw and
// nobody is left waiting.
std::vector<std::vector<uint8_t>> InProcGroup::allToAll(
    const std::vector<std::vector<uint8_t>>& out, Opcode opcode) {
  int n = shared_->rankCount;
  if (int(out.size()) != n) throw ProtocolError("all-to-all bucket count mismatch");
  shared_->stamps[size_t(rank_)] = {seq_, opcode};
  shared_->slots[size_t(rank_)] = out;
  shared_->barrier.arrive_and_wait();
  bool ok = true;
  for (const auto& s : shared_->stamps)
    if (s.seq != seq_ || s.opcode != opcode) ok = false;
  std::vector<std::vector<uint8_t>> in(static_cast<size_t>(n));
  if (ok)
    for (int src = 0; src < n; ++src) in[size_t(src)] = shared_->slots[size_t(src)][size_t(rank_)];
  shared_->barrier.arrive_and_wait();
  ++seq_;
  if (!ok) throw ProtocolError("collective called out of lockstep");
  return in;
}

std::vector<uint32_t> InProcGroup::allGatherCounts(const std::vector<uint32_t>& row) {
  int n = shared_->rankCount;
  std::vector<uint8_t> bytes(row.size() * 4);
  std::memcpy(bytes.data(), row.data(), bytes.size());
  std::vector<std::vector<uint8_t>> out(size_t(n), bytes);
  std::vector<std::vector<uint8_t>> in = allToAll(out, Opcode::Counts);
  std::vector<uint32_t> matrix(size_t(n) * n);
  for (int src = 0; src < n; ++src) {
    if (in[size_t(src)].size() != size_t(n) * 4)
      throw ProtocolError("count row has wrong length");
    std::memcpy(matrix.data() + size_t(src) * n, in[size_t(src)].data(), size_t(n) * 4);
  }
  return matrix;
}

std::vector<std::vector<uint8_t>> InProcGroup::gatherTo(int root,
                                                        const std::vector<uint8_t>& payload,
                                                        Opcode opcode) {
  int n = shared_->rankCount;
  std::vector<std::vector<uint8_t>> out(static_cast<size_t>(n));
  out[size_t(root)] = payload;
  std::vector<std::vector<uint8_t>> in = allToAll(out, opcode);
  if (rank_ != root) return {};
  return in;
}

void InProcGroup::verifyUniform(uint64_t digest, Opcode opcode) {
  int n = shared_->rankCount;
  std::vector<uint8_t> bytes(8);
  std::memcpy(bytes.data(), &digest, 8);
  std::vector<std::vector<uint8_t>> in = allToAll(std::vector(size_t(n), bytes), opcode);
  for (const auto& b : in) {
    uint64_t d = 0;
    if (b.size() == 8) std::memcpy(&d, b.data(), 8);
    if (d != digest) throw ProtocolError("rank digests disagree (mismatched scene or plan)");
  }
}

}  // namespace dppt
