// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HALO_VAGENT_DEVICE_MANAGER_HPP
#define HALO_VAGENT_DEVICE_MANAGER_HPP

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "halo/ipc/content_store.hpp"
#include "halo/vagent/kernel_repository.hpp"
#include "halo/wire.hpp"

namespace halo::vagent {

/// Outcome of one kernel invocation. Result-argument payloads live in the
/// content store; ownership of `out_handles` passes to whoever receives the
/// reply. `invoked` distinguishes argument rejection (no invocation
/// recorded) from kernel execution.
struct ExecOutcome {
  StatusCode status = StatusCode::Ok;
  ComputeObject result;
  std::vector<uint64_t> out_handles;
  uint64_t t2_ns = 0;
  uint64_t t3_ns = 0;
  bool invoked = false;
};

/// The device side of a virtualization agent: stages inputs into the
/// backend's working memory (that staging copy is the t2 offload), invokes
/// the kernel entry point (t3), and materializes outputs in the content
/// store. Internal buffers resolve through the registered buffer table and
/// are handed to kernels in place, so their state persists across
/// invocations.
class DeviceManager {
 public:
  struct Options {
    // Artificial latencies injected by the sim_accel backend.
    uint64_t sim_t2_ns = 0;
    uint64_t sim_t3_ns = 0;
  };

  explicit DeviceManager(Options opts = {}) : opts_(opts) {}

  struct BufferRecord {
    uint64_t store_handle = 0;
    MpixType kind = MpixType::InternalUint8;
    uint64_t elem_count = 0;
  };

  void register_buffer(uint64_t buffer_handle, BufferRecord rec) {
    buffers_[buffer_handle] = rec;
  }
  bool forget_buffer(uint64_t buffer_handle) {
    return buffers_.erase(buffer_handle) > 0;
  }

  ExecOutcome execute(const LoadedKernel& kernel, const ComputeObject& request,
                      ipc::ContentStore& store);

 private:
  Options opts_;
  std::unordered_map<uint64_t, BufferRecord> buffers_;
  std::vector<std::byte> arena_;  // grow-only staging area
};

}  // namespace halo::vagent

#endif  // HALO_VAGENT_DEVICE_MANAGER_HPP
