/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include <stdexcept>
#include <string>

namespace ntsp {

enum class ErrorKind {
  schema,            // document does not match the expected structure
  dangling_reference,
  duplicate,         // duplicate id, or a second SPL on one position
  cycle,             // after-link graph has a directed cycle
  invalid_value,
  length_mismatch,
  not_normalized,
  capacity,          // simulator or search size limit exceeded
  no_root,
  degenerate,
  io,
};

inline const char *to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::schema: return "schema";
  case ErrorKind::dangling_reference: return "dangling_reference";
  case ErrorKind::duplicate: return "duplicate";
  case ErrorKind::cycle: return "cycle";
  case ErrorKind::invalid_value: return "invalid_value";
  case ErrorKind::length_mismatch: return "length_mismatch";
  case ErrorKind::not_normalized: return "not_normalized";
  case ErrorKind::capacity: return "capacity";
  case ErrorKind::no_root: return "no_root";
  case ErrorKind::degenerate: return "degenerate";
  case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

inline void require_length(std::size_t got, std::size_t expected,
                           const char *what) {
  if (got != expected)
    throw Error(ErrorKind::length_mismatch,
                std::string(what) + " has length " + std::to_string(got) +
                    ", expected " + std::to_string(expected));
}

} // namespace ntsp
