// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/socket_group.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "core/error.hpp"

namespace dppt {

namespace {

constexpr size_t kHeaderSize = 9;  // u32 seq, u8 opcode, u32 len

void setNonBlocking(int fd) {
  int flags = fcntl(fd, F_GETFL, 0);
  if (flags < 0 || fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0)
    throw ProtocolError("fcntl failed on transport socket");
}

void setNoDelay(int fd) {
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

sockaddr_in makeAddr(const std::string& host, uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw DomainError("invalid transport host address: " + host);
  return addr;
}

// Blocking exact-size I/O, used only during mesh setup.
void readAll(int fd, void* buf, size_t n) {
  uint8_t* p = static_cast<uint8_t*>(buf);
  while (n > 0) {
    ssize_t r = read(fd, p, n);
    if (r == 0) throw ProtocolError("peer closed during transport setup");
    if (r < 0) {
      if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) {
        pollfd pfd{fd, POLLIN, 0};
        poll(&pfd, 1, 1000);
        continue;
      }
      throw ProtocolError("read failed during transport setup");
    }
    p += r;
    n -= size_t(r);
  }
}

void writeAll(int fd, const void* buf, size_t n) {
  const uint8_t* p = static_cast<const uint8_t*>(buf);
  while (n > 0) {
    ssize_t r = write(fd, p, n);
    if (r < 0) {
      if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) {
        pollfd pfd{fd, POLLOUT, 0};
        poll(&pfd, 1, 1000);
        continue;
      }
      throw ProtocolError("write failed during transport setup");
    }
    p += r;
    n -= size_t(r);
  }
}

int connectWithRetry(const sockaddr_in& addr) {
  for (int attempt = 0; attempt < 400; ++attempt) {
    int fd = socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ProtocolError("socket() failed");
    if (connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) return fd;
    close(fd);
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
  }
  throw ProtocolError("could not connect to peer rank");
}

}  // namespace

SocketRankGroup::SocketRankGroup(int selfRank, int rankCount, const std::string& host,
                                 const std::vector<uint16_t>& ports, int listenFd)
    : selfRank_(selfRank), rankCount_(rankCount), peerFd_(size_t(rankCount), -1) {
  if (rankCount < 1 || selfRank < 0 || selfRank >= rankCount)
    throw DomainError("bad rank configuration");
  if (int(ports.size()) != rankCount) throw DomainError("need one listen port per rank");
  if (rankCount == 1) return;

  bool ownListen = listenFd < 0;
  if (ownListen) {
    listenFd = socket(AF_INET, SOCK_STREAM, 0);
    if (listenFd < 0) throw ProtocolError("socket() failed");
    int one = 1;
    setsockopt(listenFd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = makeAddr(host, ports[size_t(selfRank)]);
    if (bind(listenFd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
        listen(listenFd, rankCount) < 0) {
      close(listenFd);
      throw ProtocolError("could not bind transport listen port");
    }
  }

  // Higher ranks dial lower ones; each connection starts with the dialer's
  // rank so accepts may arrive in any order.
  try {
    for (int j = 0; j < selfRank; ++j) {
      int fd = connectWithRetry(makeAddr(host, ports[size_t(j)]));
      uint32_t hello = uint32_t(selfRank);
      writeAll(fd, &hello, 4);
      setNoDelay(fd);
      peerFd_[size_t(j)] = fd;
    }
    for (int j = selfRank + 1; j < rankCount; ++j) {
      int fd = accept(listenFd, nullptr, nullptr);
      if (fd < 0) throw ProtocolError("accept failed during transport setup");
      uint32_t hello = 0;
      readAll(fd, &hello, 4);
      if (hello <= uint32_t(selfRank) || hello >= uint32_t(rankCount)) {
        close(fd);
        throw ProtocolError("unexpected peer rank in transport handshake");
      }
      setNoDelay(fd);
      peerFd_[hello] = fd;
    }
  } catch (...) {
    close(listenFd);
    for (int fd : peerFd_)
      if (fd >= 0) close(fd);
    throw;
  }
  close(listenFd);
  for (int fd : peerFd_)
    if (fd >= 0) setNonBlocking(fd);
}

SocketRankGroup::~SocketRankGroup() {
  for (int fd : peerFd_)
    if (fd >= 0) close(fd);
}

std::vector<std::vector<uint8_t>> SocketRankGroup::sendRecvAll(
    const std::vector<std::vector<uint8_t>>& payloads, const std::vector<bool>& sendTo,
    const std::vector<bool>& recvFrom, Opcode opcode) {
  int n = rankCount_;
  struct SendState {
    std::vector<uint8_t> frame;
    size_t sent = 0;
    bool active = false;
  };
  struct RecvState {
    uint8_t header[kHeaderSize];
    size_t got = 0;
    std::vector<uint8_t> payload;
    bool headerDone = false;
    bool done = true;
  };
  std::vector<SendState> tx(static_cast<size_t>(n));
  std::vector<RecvState> rx(static_cast<size_t>(n));
  std::vector<std::vector<uint8_t>> in(static_cast<size_t>(n));

  int pending = 0;
  for (int j = 0; j < n; ++j) {
    if (j == selfRank_) continue;
    if (sendTo[size_t(j)]) {
      SendState& s = tx[size_t(j)];
      const std::vector<uint8_t>& body = payloads[size_t(j)];
      s.frame.resize(kHeaderSize + body.size());
      uint32_t seq32 = uint32_t(seq_);
      uint32_t len = uint32_t(body.size());
      std::memcpy(s.frame.data(), &seq32, 4);
      s.frame[4] = uint8_t(opcode);
      std::memcpy(s.frame.data() + 5, &len, 4);
      std::memcpy(s.frame.data() + kHeaderSize, body.data(), body.size());
      s.active = true;
      ++pending;
    }
    if (recvFrom[size_t(j)]) {
      rx[size_t(j)].done = false;
      ++pending;
    }
  }

  while (pending > 0) {
    std::vector<pollfd> pfds;
    std::vector<int> pfdRank;
    for (int j = 0; j < n; ++j) {
      short events = 0;
      if (tx[size_t(j)].active) events |= POLLOUT;
      if (!rx[size_t(j)].done) events |= POLLIN;
      if (!events) continue;
      pfds.push_back({peerFd_[size_t(j)], events, 0});
      pfdRank.push_back(j);
    }
    if (poll(pfds.data(), nfds_t(pfds.size()), 30000) <= 0)
      throw ProtocolError("transport stalled (peer rank unresponsive)");

    for (size_t k = 0; k < pfds.size(); ++k) {
      int j = pfdRank[k];
      int fd = peerFd_[size_t(j)];
      if (pfds[k].revents & (POLLERR | POLLHUP | POLLNVAL)) {
        if (!(pfds[k].revents & POLLIN)) throw ProtocolError("peer rank disconnected");
      }
      if ((pfds[k].revents & POLLOUT) && tx[size_t(j)].active) {
        SendState& s = tx[size_t(j)];
        ssize_t w = write(fd, s.frame.data() + s.sent, s.frame.size() - s.sent);
        if (w < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)
          throw ProtocolError("write to peer rank failed");
        if (w > 0) s.sent += size_t(w);
        if (s.sent == s.frame.size()) {
          s.active = false;
          --pending;
        }
      }
      if ((pfds[k].revents & POLLIN) && !rx[size_t(j)].done) {
        RecvState& r = rx[size_t(j)];
        ssize_t got;
        if (!r.headerDone) {
          got = read(fd, r.header + r.got, kHeaderSize - r.got);
          if (got == 0) throw ProtocolError("peer rank closed connection");
          if (got < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)
            throw ProtocolError("read from peer rank failed");
          if (got > 0) r.got += size_t(got);
          if (r.got == kHeaderSize) {
            uint32_t seq32, len;
            std::memcpy(&seq32, r.header, 4);
            std::memcpy(&len, r.header + 5, 4);
            if (seq32 != uint32_t(seq_) || r.header[4] != uint8_t(opcode))
              throw ProtocolError("collective called out of lockstep");
            r.payload.resize(len);
            r.headerDone = true;
            r.got = 0;
            if (len == 0) {
              r.done = true;
              in[size_t(j)] = std::move(r.payload);
              --pending;
            }
          }
        } else {
          got = read(fd, r.payload.data() + r.got, r.payload.size() - r.got);
          if (got == 0) throw ProtocolError("peer rank closed connection");
          if (got < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)
            throw ProtocolError("read from peer rank failed");
          if (got > 0) r.got += size_t(got);
          if (r.got == r.payload.size()) {
            r.done = true;
            in[size_t(j)] = std::move(r.payload);
            --pending;
          }
        }
      }
    }
  }
  ++seq_;
  return in;
}

std::vector<std::vector<uint8_t>> SocketRankGroup::allToAll(
    const std::vector<std::vector<uint8_t>>& out, Opcode opcode) {
  if (int(out.size()) != rankCount_) throw ProtocolError("all-to-all bucket count mismatch");
  std::vector<bool> all(size_t(rankCount_), true);
  all[size_t(selfRank_)] = false;
  std::vector<std::vector<uint8_t>> in = sendRecvAll(out, all, all, opcode);
  in[size_t(selfRank_)] = out[size_t(selfRank_)];
  return in;
}

std::vector<uint32_t> SocketRankGroup::allGatherCounts(const std::vector<uint32_t>& row) {
  int n = rankCount_;
  if (int(row.size()) != n) throw ProtocolError("count row has wrong length");
  std::vector<uint8_t> bytes(size_t(n) * 4);
  std::memcpy(bytes.data(), row.data(), bytes.size());
  std::vector<std::vector<uint8_t>> in = allToAll(std::vector(size_t(n), bytes), Opcode::Counts);
  std::vector<uint32_t> matrix(size_t(n) * n);
  for (int src = 0; src < n; ++src) {
    if (in[size_t(src)].size() != size_t(n) * 4)
      throw ProtocolError("count row has wrong length");
    std::memcpy(matrix.data() + size_t(src) * n, in[size_t(src)].data(), size_t(n) * 4);
  }
  return matrix;
}

std::vector<std::vector<uint8_t>> SocketRankGroup::gatherTo(int root,
                                                            const std::vector<uint8_t>& payload,
                                                            Opcode opcode) {
  int n = rankCount_;
  std::vector<bool> sendTo(size_t(n), false), recvFrom(size_t(n), false);
  std::vector<std::vector<uint8_t>> out(static_cast<size_t>(n));
  if (selfRank_ == root) {
    for (int j = 0; j < n; ++j) recvFrom[size_t(j)] = j != selfRank_;
  } else {
    sendTo[size_t(root)] = true;
    out[size_t(root)] = payload;
  }
  std::vector<std::vector<uint8_t>> in = sendRecvAll(out, sendTo, recvFrom, opcode);
  if (selfRank_ != root) return {};
  in[size_t(root)] = payload;
  return in;
}

void SocketRankGroup::verifyUniform(uint64_t digest, Opcode opcode) {
  std::vector<uint8_t> bytes(8);
  std::memcpy(bytes.data(), &digest, 8);
  std::vector<std::vector<uint8_t>> in =
      allToAll(std::vector(size_t(rankCount_), bytes), opcode);
  for (const auto& b : in) {
    uint64_t d = 0;
    if (b.size() == 8) std::memcpy(&d, b.data(), 8);
    if (d != digest) throw ProtocolError("rank digests disagree (mismatched scene or plan)");
  }
}

}  // namespace dppt
