// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace multigrid {

enum class ErrorCode {
  kInvalidArgument = 1,
  kOutOfBounds = 2,  // precondition violation (e.g. grid outside the clip)
  kInvalidGrid = 3,
  kConfig = 4,
  kShape = 5,
  kIo = 6,
  kNumeric = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace multigrid
