// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// Template for the loadable kernel modules. Compiled once per
// (kernel, variant) pair with HALO_MODULE_KERNEL / HALO_MODULE_OPT set by
// the build; each shared object exports the default entry symbol.

#include "halo/kernels/abi.h"
#include "halo/kernels/kernels.hpp"

#define HALO_STR2(x) #x
#define HALO_STR(x) HALO_STR2(x)

extern "C" int32_t halo_kernel_entry(const halo_kern_env* env,
                                     const halo_kern_arg* args,
                                     uint32_t nargs) {
  static const halo_kernel_fn fn =
      halo::kern::kernel_entry(HALO_STR(HALO_MODULE_KERNEL), HALO_MODULE_OPT);
  if (!fn) return 2;
  return fn(env, args, nargs);
}
