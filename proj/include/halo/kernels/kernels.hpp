// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// The eight HPC subroutines, each in a reference (naive) and an optimized
// variant. All are pure float64 computations; the optimized variants differ
// from the reference only by reassociation (blocking, unrolling).

#ifndef HALO_KERNELS_KERNELS_HPP
#define HALO_KERNELS_KERNELS_HPP

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "halo/kernels/abi.h"
#include "halo/status.hpp"

namespace halo::kern {

struct DenseMatrix {
  uint64_t rows = 0;
  uint64_t cols = 0;
  std::vector<double> data;  // row-major, size rows * cols

  static DenseMatrix zeros(uint64_t r, uint64_t c) {
    return DenseMatrix{r, c, std::vector<double>(r * c, 0.0)};
  }
  double& at(uint64_t i, uint64_t j) { return data[i * cols + j]; }
  double at(uint64_t i, uint64_t j) const { return data[i * cols + j]; }
};

struct CsrMatrix {
  uint64_t rows = 0;
  uint64_t cols = 0;
  std::vector<uint64_t> row_ptr;  // size rows + 1, nondecreasing
  std::vector<uint64_t> col_idx;  // sorted within each row, < cols
  std::vector<double> values;     // same length as col_idx

  bool well_formed() const;
};

using Vector = std::vector<double>;

// Checked operations. Dimension mismatches, malformed CSR structure, zero
// diagonals and empty convolution kernels yield ErrBadArgument.
Result<DenseMatrix> mmm(const DenseMatrix& a, const DenseMatrix& b, bool opt);
Result<DenseMatrix> ewmm(const DenseMatrix& a, const DenseMatrix& b, bool opt);
Result<DenseMatrix> smmm(const CsrMatrix& a, const DenseMatrix& b, bool opt);
Result<Vector> mvm(const DenseMatrix& a, const Vector& x, bool opt);
Result<DenseMatrix> ewmd(const DenseMatrix& a, const DenseMatrix& b, bool opt);
Result<double> vdp(const Vector& x, const Vector& y, bool opt);
Result<Vector> jacobi(const DenseMatrix& a, const Vector& b, uint64_t iters,
                      double tol, bool opt);
/// Same-size zero-padded correlation centered on the kernel midpoint.
Result<Vector> conv1d(const Vector& signal, const Vector& kernel, bool opt);

DenseMatrix densify(const CsrMatrix& a);

// ---------------------------------------------------------------------------
// Kernel registry: the glue between compute functions, module entry points,
// package manifests and configuration aliases.
// ---------------------------------------------------------------------------

/// Expected element kinds of the input argument list ('u' = uint64 inline
/// descriptor data, 'd' = float64 payload).
struct KernelInfo {
  std::string_view name;       // module name, e.g. "mmm"
  std::string_view alias;      // configuration alias, e.g. "MMM"
  std::string_view alt_alias;  // secondary alias ("" when none)
  uint64_t sw_fid = 0;
  std::string_view signature;  // e.g. "udd"
};

std::span<const KernelInfo> kernel_table();
const KernelInfo* kernel_by_fid(uint64_t sw_fid);
const KernelInfo* kernel_by_name(std::string_view name);

/// Resolve the in-process entry point for a kernel (used by modules and the
/// fail-safe path). Returns nullptr for unknown names.
halo_kernel_fn kernel_entry(std::string_view name, bool opt);

}  // namespace halo::kern

#endif  // HALO_KERNELS_KERNELS_HPP
