// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HALO_IPC_COPY_COUNTER_HPP
#define HALO_IPC_COPY_COUNTER_HPP

#include <atomic>
#include <cstdint>

namespace halo::ipc {

/// Process-wide accounting of argument-payload bytes the framework copies
/// while marshaling, storing and delivering requests and results. Device
/// staging inside a backend (the t2 offload) is deliberately not counted:
/// this counter exists to verify that the messaging path itself moves
/// handles, not data. Test instrumentation; zero cost beyond one atomic add
/// per copy site.
class CopyCounter {
 public:
  static void add(uint64_t bytes) {
    bytes_.fetch_add(bytes, std::memory_order_relaxed);
  }
  static uint64_t total() { return bytes_.load(std::memory_order_relaxed); }
  static void reset() { bytes_.store(0, std::memory_order_relaxed); }

 private:
  static inline std::atomic<uint64_t> bytes_{0};
};

}  // namespace halo::ipc

#endif  // HALO_IPC_COPY_COUNTER_HPP
