// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "core/math.hpp"
#include "core/wire.hpp"

namespace dppt {

// Frame opcodes shared by both backends; the in-process backend uses them
// only for lockstep verification.
enum class Opcode : uint8_t {
  Counts = 1,
  Rays = 2,
  Tiles = 3,
  ProxySet = 4,
  SceneHash = 5,
};

struct TransportCounters {
  uint64_t bytesRays = 0;
  uint64_t bytesTiles = 0;
  uint64_t recordsForwarded = 0;  // records sent to other ranks
  std::vector<std::vector<uint32_t>> countMatrices;  // one per exchangeCounts
};

// A communicator over a fixed set of ranks. All collectives must be entered
// by every rank with matching opcode and call ordinal; both backends verify
// this and raise ProtocolError on divergence instead of deadlocking.
class RankGroup {
 public:
  virtual ~RankGroup() = default;

  virtual int rankCount() const = 0;
  virtual int selfRank() const = 0;

  // All-gather of one u32 row per rank; returns the row-major
  // rankCount x rankCount matrix.
  virtual std::vector<uint32_t> allGatherCounts(const std::vector<uint32_t>& row) = 0;

  // All-to-all byte move; element d of `out` goes to rank d. Returns one
  // payload per source rank (index = source), own bucket passed through.
  virtual std::vector<std::vector<uint8_t>> allToAll(
      const std::vector<std::vector<uint8_t>>& out, Opcode opcode) = 0;

  // Gather to root; non-root ranks get an empty result.
  virtual std::vector<std::vector<uint8_t>> gatherTo(int root, const std::vector<uint8_t>& payload,
                                                     Opcode opcode) = 0;

  // Collective digest comparison (scene / proxy-set handshake). Throws
  // ProtocolError when any rank disagrees.
  virtual void verifyUniform(uint64_t digest, Opcode opcode) = 0;

  TransportCounters& counters() { return counters_; }
  const TransportCounters& counters() const { return counters_; }

 protected:
  TransportCounters counters_;
};

// exchangeCounts: full send-count matrix, entry [i*N+j] = rays i sends to j.
std::vector<uint32_t> exchangeCounts(RankGroup& group, const std::vector<uint32_t>& sendCounts);

// exchangeRays: moves the per-destination buckets; validates bucket sizes
// against this rank's row of `matrix` (from the immediately preceding
// exchangeCounts) and the received byte counts against its column. Received
// records are ordered by ascending source rank.
std::vector<PathState> exchangeRays(RankGroup& group, const WireConfig& cfg,
                                    const std::vector<std::vector<PathState>>& buckets,
                                    const std::vector<uint32_t>& matrix);

// exchangeFrameTiles: parallel direct send compositing. Every rank holds an
// equally sized partial accumulation buffer; rank r returns the componentwise
// sum of everyone's rows [r*H/N, (r+1)*H/N).
std::vector<Vec3> exchangeFrameTiles(RankGroup& group, const std::vector<Vec3>& partial,
                                     int width, int height);
std::pair<int, int> tileRows(int height, int rankCount, int rank);

// In-process backend: rendezvous state shared by rankCount logical workers,
// one InProcGroup per worker thread. Delivery order is deterministic
// (by source rank), so repeated runs are bit-identical.
class InProcShared;

class InProcGroup : public RankGroup {
 public:
  InProcGroup(std::shared_ptr<InProcShared> shared, int rank);

  int rankCount() const override;
  int selfRank() const override { return rank_; }
  std::vector<uint32_t> allGatherCounts(const std::vector<uint32_t>& row) override;
  std::vector<std::vector<uint8_t>> allToAll(const std::vector<std::vector<uint8_t>>& out,
                                             Opcode opcode) override;
  std::vector<std::vector<uint8_t>> gatherTo(int root, const std::vector<uint8_t>& payload,
                                             Opcode opcode) override;
  void verifyUniform(uint64_t digest, Opcode opcode) override;

 private:
  std::shared_ptr<InProcShared> shared_;
  int rank_;
  uint64_t seq_ = 0;
};

std::shared_ptr<InProcShared> makeInProcShared(int rankCount);

}  // namespace dppt
