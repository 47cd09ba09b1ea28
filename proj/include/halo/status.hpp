// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HALO_STATUS_HPP
#define HALO_STATUS_HPP

#include <cstdint>

namespace halo {

/// Status returned by every public operation. Numeric values are frozen and
/// part of the wire protocol (see docs/protocol.md); never renumber.
enum class StatusCode : uint8_t {
  Ok = 0,
  ErrNoResource = 1,
  ErrBadHandle = 2,
  ErrBadArgument = 3,
  ErrSerialization = 4,
  ErrTimeout = 5,
  ErrKernelFault = 6,
  ErrFinalized = 7,
  /// Success-class: the request completed through the host fail-safe
  /// callback instead of a registered kernel.
  FailsafeExecuted = 8,
};

/// Ok and FailsafeExecuted are the only success-class codes.
constexpr bool is_success(StatusCode s) {
  return s == StatusCode::Ok || s == StatusCode::FailsafeExecuted;
}

const char* status_name(StatusCode s);

/// Minimal status-or-value carrier used throughout the framework.
template <typename T>
struct Result {
  StatusCode status = StatusCode::Ok;
  T value{};

  bool ok() const { return is_success(status); }
  static Result failure(StatusCode s) { return Result{s, T{}}; }
  static Result success(T v, StatusCode s = StatusCode::Ok) {
    return Result{s, static_cast<T&&>(v)};
  }
};

}  // namespace halo

#endif  // HALO_STATUS_HPP
