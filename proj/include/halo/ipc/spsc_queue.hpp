// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HALO_IPC_SPSC_QUEUE_HPP
#define HALO_IPC_SPSC_QUEUE_HPP

#include <atomic>
#include <cstddef>
#include <new>
#include <utility>
#include <vector>

namespace halo::ipc {

/// Bounded single-producer/single-consumer ring. Enqueue and dequeue are
/// wait-free and never block; a full ring rejects the push, an empty ring
/// rejects the pop. One thread may push, one thread may pop.
template <typename T>
class SpscQueue {
 public:
  explicit SpscQueue(size_t capacity_pow2 = 1024)
      : mask_(round_up(capacity_pow2) - 1), slots_(mask_ + 1) {}

  SpscQueue(const SpscQueue&) = delete;
  SpscQueue& operator=(const SpscQueue&) = delete;

  bool try_push(T v) {
    size_t head = head_.load(std::memory_order_relaxed);
    size_t tail = tail_.load(std::memory_order_acquire);
    if (head - tail > mask_) return false;  // full
    slots_[head & mask_] = std::move(v);
    head_.store(head + 1, std::memory_order_release);
    return true;
  }

  bool try_pop(T& out) {
    size_t tail = tail_.load(std::memory_order_relaxed);
    size_t head = head_.load(std::memory_order_acquire);
    if (tail == head) return false;  // empty
    out = std::move(slots_[tail & mask_]);
    tail_.store(tail + 1, std::memory_order_release);
    return true;
  }

  bool empty() const {
    return head_.load(std::memory_order_acquire) ==
           tail_.load(std::memory_order_acquire);
  }

  size_t capacity() const { return mask_ + 1; }

 private:
  static size_t round_up(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
  }

  alignas(64) std::atomic<size_t> head_{0};
  alignas(64) std::atomic<size_t> tail_{0};
  size_t mask_;
  std::vector<T> slots_;
};

}  // namespace halo::ipc

#endif  // HALO_IPC_SPSC_QUEUE_HPP
