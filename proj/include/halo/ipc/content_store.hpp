// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared-memory content store. One named region exists per application
// context (naming convention `halo.<app_id>` under the shared-memory
// directory); every agent process attaches the same region and exchanges
// 64-bit handles instead of data. Envelope bodies, unified-memory buffers,
// internal buffers and kernel results all live here.

#ifndef HALO_IPC_CONTENT_STORE_HPP
#define HALO_IPC_CONTENT_STORE_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "halo/status.hpp"

namespace halo::ipc {

/// Directory holding the region files: $HALO_SHM_DIR if set, /dev/shm when
/// present, /tmp otherwise.
std::string store_directory();

/// Refcounted allocator over one shared mapping. All operations take the
/// region's process-shared lock, so put/get/release are linearizable across
/// attached processes. Allocations never move while referenced; a handle
/// freed to refcount zero never resolves again within the region lifetime
/// (slot generations).
class ContentStore {
 public:
  struct Stats {
    uint64_t capacity = 0;
    uint64_t used_bytes = 0;   ///< reserved data bytes (64-byte granularity)
    uint64_t live_handles = 0;
  };

  /// Create the region (the runtime agent side). Capacity is the data-area
  /// size in bytes. The region file is removed when the creating store is
  /// destroyed.
  static Result<std::unique_ptr<ContentStore>> create(const std::string& name,
                                                      uint64_t capacity);

  /// Attach an existing region by name (the virtualization agent side).
  static Result<std::unique_ptr<ContentStore>> attach(const std::string& name);

  ~ContentStore();
  ContentStore(const ContentStore&) = delete;
  ContentStore& operator=(const ContentStore&) = delete;

  /// Copy bytes into a fresh allocation; refcount 1. Counted by CopyCounter
  /// only when `counted_payload` bytes are argument payload (see wire.hpp).
  Result<uint64_t> put(std::span<const std::byte> bytes,
                       uint64_t counted_payload = 0);

  /// Reserve zero-initialized space without copying anything; refcount 1.
  Result<uint64_t> alloc(uint64_t length);

  /// Borrow a view of the allocation. No copy, no refcount change. The view
  /// stays valid while the handle is live and this store is attached.
  Result<std::span<std::byte>> get(uint64_t handle);

  StatusCode add_ref(uint64_t handle);
  StatusCode release(uint64_t handle);

  /// Byte offset of the allocation inside the data area, for building
  /// external-view argument descriptors.
  Result<uint64_t> offset_of(uint64_t handle);

  /// Bounds-checked raw view of the data area (resolves external refs).
  Result<std::span<std::byte>> view(uint64_t offset, uint64_t length);

  Stats stats();
  const std::string& name() const { return name_; }

 private:
  ContentStore() = default;
  struct Region;
  Region* region_ = nullptr;
  std::byte* data_ = nullptr;
  uint64_t mapped_size_ = 0;
  int fd_ = -1;
  bool owner_ = false;
  std::string name_;
  std::string path_;
};

}  // namespace halo::ipc

#endif  // HALO_IPC_CONTENT_STORE_HPP
