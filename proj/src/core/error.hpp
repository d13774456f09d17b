// Copyright 2026 The dppt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dppt {

// Error taxonomy mirrors the process exit codes: 1 = domain (bad input,
// bad config), 2 = protocol (transport / collective lockstep violations).
struct Error : std::runtime_error {
  int code;
  Error(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& msg) : Error(1, msg) {}
};

struct ProtocolError : Error {
  explicit ProtocolError(const std::string& msg) : Error(2, msg) {}
};

}  // namespace dppt
