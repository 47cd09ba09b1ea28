// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// Test kernel that always faults, for the isolation tests.

#include <stdexcept>

#include "halo/kernels/abi.h"

extern "C" int32_t halo_kernel_entry(const halo_kern_env*,
                                     const halo_kern_arg*, uint32_t) {
  throw std::runtime_error("induced kernel fault");
}
