/*
 * Copyright (c) 2026 The HALO Project Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Fixed binary interface between a virtualization agent's device manager and
 * a loadable kernel module. A module exports one entry symbol (named in its
 * package manifest) with the halo_kernel_fn signature: argument descriptors
 * in, result descriptors out through the emit callback. Plain C so modules
 * can be built in any toolchain.
 */

#ifndef HALO_KERNELS_ABI_H
#define HALO_KERNELS_ABI_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* One resolved argument. `data` is the read view; `mut` is non-null only for
 * framework-managed internal buffers, which the kernel may update in place
 * (state persists across invocations). */
typedef struct halo_kern_arg {
  uint8_t is_float;
  uint8_t is_signed;
  uint32_t elem_size;
  uint64_t elem_count;
  const void* data;
  void* mut;
} halo_kern_arg;

struct halo_kern_ctx; /* opaque, owned by the device manager */

/* Allocate one output argument in the invocation's result set and return a
 * writable pointer to it, or NULL when allocation fails. Outputs appear in
 * the result object in emission order. */
typedef void* (*halo_emit_fn)(struct halo_kern_ctx* ctx, uint8_t is_float,
                              uint8_t is_signed, uint32_t elem_size,
                              uint64_t elem_count);

typedef struct halo_kern_env {
  struct halo_kern_ctx* ctx;
  halo_emit_fn emit;
} halo_kern_env;

/* Returns 0 on success, 1 when the argument set is invalid for the kernel
 * (reported as a bad-argument error without an invocation record), any other
 * value is reported as a kernel fault. */
typedef int32_t (*halo_kernel_fn)(const halo_kern_env* env,
                                  const halo_kern_arg* args, uint32_t nargs);

#define HALO_KERN_OK 0
#define HALO_KERN_BAD_ARGS 1

#define HALO_KERNEL_ENTRY_DEFAULT "halo_kernel_entry"

#ifdef __cplusplus
}
#endif

#endif /* HALO_KERNELS_ABI_H */
