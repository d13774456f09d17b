// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "core/transport.hpp"

namespace dppt {

// Full-mesh TCP backend. Rank i listens on ports[i]; connections to lower
// ranks are initiated by the higher rank. Every collective moves
// length-prefixed frames {u32 seq, u8 opcode, u32 len, payload}; sequence
// numbers and opcodes are checked on receipt so lockstep violations surface
// as protocol errors instead of deadlocks.
class SocketRankGroup : public RankGroup {
 public:
  // `listenFd` may be a pre-bound listening socket for this rank (tests bind
  // ephemeral ports up front); pass -1 to bind host:ports[selfRank] here.
  SocketRankGroup(int selfRank, int rankCount, const std::string& host,
                  const std::vector<uint16_t>& ports, int listenFd = -1);
  ~SocketRankGroup() override;

  SocketRankGroup(const SocketRankGroup&) = delete;
  SocketRankGroup& operator=(const SocketRankGroup&) = delete;

  int rankCount() const override { return rankCount_; }
  int selfRank() const override { return selfRank_; }
  std::vector<uint32_t> allGatherCounts(const std::vector<uint32_t>& row) override;
  std::vector<std::vector<uint8_t>> allToAll(const std::vector<std::vector<uint8_t>>& out,
                                             Opcode opcode) override;
  std::vector<std::vector<uint8_t>> gatherTo(int root, const std::vector<uint8_t>& payload,
                                             Opcode opcode) override;
  void verifyUniform(uint64_t digest, Opcode opcode) override;

 private:
  // Simultaneously drains sends and receives across the mesh (poll-based, so
  // large exchanges cannot deadlock on full kernel buffers). `sendTo[j]`
  // frames go to rank j; `recvFrom[j]` marks an expected inbound frame.
  std::vector<std::vector<uint8_t>> sendRecvAll(const std::vector<std::vector<uint8_t>>& payloads,
                                                const std::vector<bool>& sendTo,
                                                const std::vector<bool>& recvFrom, Opcode opcode);

  int selfRank_ = 0;
  int rankCount_ = 1;
  std::vector<int> peerFd_;  // per rank, -1 for self
  uint64_t seq_ = 0;
};

}  // namespace dppt
