// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace halo::kern {

namespace {

constexpr uint64_t kBlock = 64;

// ---------------------------------------------------------------------------
// Raw loops. A/B/C are row-major; callers have validated shapes.
// ---------------------------------------------------------------------------

void mmm_naive(const double* a, const double* b, double* c, uint64_t m,
               uint64_t k, uint64_t n) {
  for (uint64_t i = 0; i < m; ++i)
    for (uint64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (uint64_t l = 0; l < k; ++l) acc += a[i * k + l] * b[l * n + j];
      c[i * n + j] = acc;
    }
}

void mmm_opt(const double* a, const double* b, double* c, uint64_t m,
             uint64_t k, uint64_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (uint64_t ii = 0; ii < m; ii += kBlock) {
    uint64_t im = std::min(ii + kBlock, m);
    for (uint64_t kk = 0; kk < k; kk += kBlock) {
      uint64_t km = std::min(kk + kBlock, k);
      for (uint64_t jj = 0; jj < n; jj += kBlock) {
        uint64_t jm = std::min(jj + kBlock, n);
        for (uint64_t i = ii; i < im; ++i)
          for (uint64_t l = kk; l < km; ++l) {
            double av = a[i * k + l];
            const double* brow = b + l * n;
            double* crow = c + i * n;
            for (uint64_t j = jj; j < jm; ++j) crow[j] += av * brow[j];
          }
      }
    }
  }
}

void ew_naive(const double* a, const double* b, double* c, uint64_t count,
              bool divide) {
  for (uint64_t i = 0; i < count; ++i)
    c[i] = divide ? a[i] / b[i] : a[i] * b[i];
}

void ew_opt(const double* a, const double* b, double* c, uint64_t count,
            bool divide) {
  uint64_t i = 0;
  if (divide) {
    for (; i + 4 <= count; i += 4) {
      c[i] = a[i] / b[i];
      c[i + 1] = a[i + 1] / b[i + 1];
      c[i + 2] = a[i + 2] / b[i + 2];
      c[i + 3] = a[i + 3] / b[i + 3];
    }
    for (; i < count; ++i) c[i] = a[i] / b[i];
  } else {
    for (; i + 4 <= count; i += 4) {
      c[i] = a[i] * b[i];
      c[i + 1] = a[i + 1] * b[i + 1];
      c[i + 2] = a[i + 2] * b[i + 2];
      c[i + 3] = a[i + 3] * b[i + 3];
    }
    for (; i < count; ++i) c[i] = a[i] * b[i];
  }
}

void smmm_naive(const uint64_t* row_ptr, const uint64_t* col_idx,
                const double* values, const double* b, double* c, uint64_t m,
                uint64_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (uint64_t i = 0; i < m; ++i)
    for (uint64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      double v = values[p];
      uint64_t col = col_idx[p];
      for (uint64_t j = 0; j < n; ++j) c[i * n + j] += v * b[col * n + j];
    }
}

void smmm_opt(const uint64_t* row_ptr, const uint64_t* col_idx,
              const double* values, const double* b, double* c, uint64_t m,
              uint64_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (uint64_t jj = 0; jj < n; jj += kBlock) {
    uint64_t jm = std::min(jj + kBlock, n);
    for (uint64_t i = 0; i < m; ++i) {
      double* crow = c + i * n;
      for (uint64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
        double v = values[p];
        const double* brow = b + col_idx[p] * n;
        for (uint64_t j = jj; j < jm; ++j) crow[j] += v * brow[j];
      }
    }
  }
}

void mvm_naive(const double* a, const double* x, double* y, uint64_t m,
               uint64_t n) {
  for (uint64_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (uint64_t j = 0; j < n; ++j) acc += a[i * n + j] * x[j];
    y[i] = acc;
  }
}

void mvm_opt(const double* a, const double* x, double* y, uint64_t m,
             uint64_t n) {
  for (uint64_t i = 0; i < m; ++i) {
    const double* row = a + i * n;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    uint64_t j = 0;
    for (; j + 4 <= n; j += 4) {
      s0 += row[j] * x[j];
      s1 += row[j + 1] * x[j + 1];
      s2 += row[j + 2] * x[j + 2];
      s3 += row[j + 3] * x[j + 3];
    }
    double acc = (s0 + s1) + (s2 + s3);
    for (; j < n; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

double vdp_naive(const double* x, const double* y, uint64_t n) {
  double acc = 0.0;
  for (uint64_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double vdp_opt(const double* x, const double* y, uint64_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  uint64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  double acc = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

// One sweep x_next[i] = (b[i] - sum_{j != i} A[i][j] x[j]) / A[i][i].
void jacobi_sweep_naive(const double* a, const double* b, const double* x,
                        double* x_next, uint64_t n) {
  for (uint64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (uint64_t j = 0; j < n; ++j)
      if (j != i) acc += a[i * n + j] * x[j];
    x_next[i] = (b[i] - acc) / a[i * n + i];
  }
}

void jacobi_sweep_opt(const double* a, const double* b, const double* x,
                      double* x_next, uint64_t n) {
  for (uint64_t i = 0; i < n; ++i) {
    const double* row = a + i * n;
    double acc = 0.0;
    uint64_t j = 0;
    for (; j < i; ++j) acc += row[j] * x[j];
    for (j = i + 1; j < n; ++j) acc += row[j] * x[j];
    x_next[i] = (b[i] - acc) / row[i];
  }
}

void conv1d_naive(const double* s, uint64_t n, const double* k, uint64_t kn,
                  double* out) {
  int64_t half = static_cast<int64_t>(kn) / 2;
  for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
    double acc = 0.0;
    for (int64_t j = 0; j < static_cast<int64_t>(kn); ++j) {
      int64_t idx = i + j - half;
      if (idx >= 0 && idx < static_cast<int64_t>(n)) acc += s[idx] * k[j];
    }
    out[i] = acc;
  }
}

void conv1d_opt(const double* s, uint64_t n, const double* k, uint64_t kn,
                double* out) {
  int64_t half = static_cast<int64_t>(kn) / 2;
  int64_t sn = static_cast<int64_t>(n);
  int64_t skn = static_cast<int64_t>(kn);
  // Interior: no boundary checks.
  int64_t lo = std::min<int64_t>(half, sn);
  int64_t hi = std::max<int64_t>(lo, sn - (skn - 1 - half));
  for (int64_t i = lo; i < hi; ++i) {
    const double* base = s + (i - half);
    double acc = 0.0;
    for (int64_t j = 0; j < skn; ++j) acc += base[j] * k[j];
    out[i] = acc;
  }
  auto edge = [&](int64_t i) {
    double acc = 0.0;
    for (int64_t j = 0; j < skn; ++j) {
      int64_t idx = i + j - half;
      if (idx >= 0 && idx < sn) acc += s[idx] * k[j];
    }
    out[i] = acc;
  };
  for (int64_t i = 0; i < lo; ++i) edge(i);
  for (int64_t i = hi; i < sn; ++i) edge(i);
}

}  // namespace

// ---------------------------------------------------------------------------
// Checked wrappers
// ---------------------------------------------------------------------------

bool CsrMatrix::well_formed() const {
  if (row_ptr.size() != rows + 1 || row_ptr.empty()) return false;
  if (row_ptr.front() != 0 || row_ptr.back() != values.size()) return false;
  if (col_idx.size() != values.size()) return false;
  for (uint64_t i = 0; i < rows; ++i) {
    if (row_ptr[i] > row_ptr[i + 1]) return false;
    for (uint64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      if (col_idx[p] >= cols) return false;
      if (p > row_ptr[i] && col_idx[p - 1] >= col_idx[p]) return false;
    }
  }
  return true;
}

DenseMatrix densify(const CsrMatrix& a) {
  DenseMatrix d = DenseMatrix::zeros(a.rows, a.cols);
  for (uint64_t i = 0; i < a.rows; ++i)
    for (uint64_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
      d.at(i, a.col_idx[p]) = a.values[p];
  return d;
}

Result<DenseMatrix> mmm(const DenseMatrix& a, const DenseMatrix& b, bool opt) {
  using R = Result<DenseMatrix>;
  if (a.cols != b.rows || a.data.size() != a.rows * a.cols ||
      b.data.size() != b.rows * b.cols)
    return R::failure(StatusCode::ErrBadArgument);
  DenseMatrix c = DenseMatrix::zeros(a.rows, b.cols);
  (opt ? mmm_opt : mmm_naive)(a.data.data(), b.data.data(), c.data.data(),
                              a.rows, a.cols, b.cols);
  return R::success(std::move(c));
}

static Result<DenseMatrix> ew_checked(const DenseMatrix& a,
                                      const DenseMatrix& b, bool opt,
                                      bool divide) {
  using R = Result<DenseMatrix>;
  if (a.rows != b.rows || a.cols != b.cols ||
      a.data.size() != a.rows * a.cols || b.data.size() != b.rows * b.cols)
    return R::failure(StatusCode::ErrBadArgument);
  DenseMatrix c = DenseMatrix::zeros(a.rows, a.cols);
  (opt ? ew_opt : ew_naive)(a.data.data(), b.data.data(), c.data.data(),
                            a.data.size(), divide);
  return R::success(std::move(c));
}

Result<DenseMatrix> ewmm(const DenseMatrix& a, const DenseMatrix& b, bool opt) {
  return ew_checked(a, b, opt, false);
}

Result<DenseMatrix> ewmd(const DenseMatrix& a, const DenseMatrix& b, bool opt) {
  return ew_checked(a, b, opt, true);
}

Result<DenseMatrix> smmm(const CsrMatrix& a, const DenseMatrix& b, bool opt) {
  using R = Result<DenseMatrix>;
  if (!a.well_formed() || a.cols != b.rows ||
      b.data.size() != b.rows * b.cols)
    return R::failure(StatusCode::ErrBadArgument);
  DenseMatrix c = DenseMatrix::zeros(a.rows, b.cols);
  (opt ? smmm_opt : smmm_naive)(a.row_ptr.data(), a.col_idx.data(),
                                a.values.data(), b.data.data(), c.data.data(),
                                a.rows, b.cols);
  return R::success(std::move(c));
}

Result<Vector> mvm(const DenseMatrix& a, const Vector& x, bool opt) {
  using R = Result<Vector>;
  if (a.cols != x.size() || a.data.size() != a.rows * a.cols)
    return R::failure(StatusCode::ErrBadArgument);
  Vector y(a.rows, 0.0);
  (opt ? mvm_opt : mvm_naive)(a.data.data(), x.data(), y.data(), a.rows,
                              a.cols);
  return R::success(std::move(y));
}

Result<double> vdp(const Vector& x, const Vector& y, bool opt) {
  using R = Result<double>;
  if (x.size() != y.size()) return R::failure(StatusCode::ErrBadArgument);
  return R::success((opt ? vdp_opt : vdp_naive)(x.data(), y.data(), x.size()));
}

Result<Vector> jacobi(const DenseMatrix& a, const Vector& b, uint64_t iters,
                      double tol, bool opt) {
  using R = Result<Vector>;
  uint64_t n = a.rows;
  if (a.cols != n || a.data.size() != n * n || b.size() != n || n == 0)
    return R::failure(StatusCode::ErrBadArgument);
  for (uint64_t i = 0; i < n; ++i)
    if (a.at(i, i) == 0.0) return R::failure(StatusCode::ErrBadArgument);

  Vector x(n, 0.0), x_next(n, 0.0);
  auto sweep = opt ? jacobi_sweep_opt : jacobi_sweep_naive;
  for (uint64_t it = 0; it < iters; ++it) {
    sweep(a.data.data(), b.data(), x.data(), x_next.data(), n);
    double delta = 0.0;
    for (uint64_t i = 0; i < n; ++i)
      delta = std::max(delta, std::fabs(x_next[i] - x[i]));
    x.swap(x_next);
    if (delta < tol) break;
  }
  return R::success(std::move(x));
}

Result<Vector> conv1d(const Vector& signal, const Vector& kernel, bool opt) {
  using R = Result<Vector>;
  if (kernel.empty() || signal.empty())
    return R::failure(StatusCode::ErrBadArgument);
  Vector out(signal.size(), 0.0);
  (opt ? conv1d_opt : conv1d_naive)(signal.data(), signal.size(),
                                    kernel.data(), kernel.size(), out.data());
  return R::success(std::move(out));
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace {

constexpr KernelInfo kTable[] = {
    {"mmm", "MMM", "", 0x12345ull, "udd"},
    {"ewmm", "EWMM", "", 0x123456ull, "udd"},
    {"smmm", "SMMM", "", 0x1234567ull, "uuudd"},
    {"ewmd", "EWMD", "", 0x12345678ull, "udd"},
    {"vdp", "VDP", "", 0x123456789ull, "dd"},
    {"js", "JS", "", 0x123456789Aull, "uddd"},
    // The configuration example lists FC where the kernel set names MVM; the
    // same matrix-vector kernel serves both aliases.
    {"mvm", "MVM", "FC", 0x123456789Bull, "udd"},
    {"conv1d", "1DCONV", "", 0x123456789Cull, "dd"},
};

}  // namespace

std::span<const KernelInfo> kernel_table() { return kTable; }

const KernelInfo* kernel_by_fid(uint64_t sw_fid) {
  for (const auto& k : kTable)
    if (k.sw_fid == sw_fid) return &k;
  return nullptr;
}

const KernelInfo* kernel_by_name(std::string_view name) {
  for (const auto& k : kTable)
    if (k.name == name) return &k;
  return nullptr;
}

// ---------------------------------------------------------------------------
// ABI glue: descriptor validation + emission. Return codes: 0 ok, 1 invalid
// arguments, anything else a kernel fault.
// ---------------------------------------------------------------------------

namespace {

constexpr int32_t kOk = 0;
constexpr int32_t kBadArgs = 1;

bool is_f64(const halo_kern_arg& a) {
  return a.is_float && a.elem_size == 8 && a.data != nullptr;
}
bool is_u64(const halo_kern_arg& a) {
  return !a.is_float && !a.is_signed && a.elem_size == 8 && a.data != nullptr;
}
const double* f64(const halo_kern_arg& a) {
  return static_cast<const double*>(a.data);
}
const uint64_t* u64(const halo_kern_arg& a) {
  return static_cast<const uint64_t*>(a.data);
}

double* emit_f64(const halo_kern_env* env, uint64_t count) {
  return static_cast<double*>(env->emit(env->ctx, 1, 1, 8, count));
}
uint64_t* emit_u64(const halo_kern_env* env, uint64_t count) {
  return static_cast<uint64_t*>(env->emit(env->ctx, 0, 0, 8, count));
}

template <bool Opt>
int32_t entry_mmm(const halo_kern_env* env, const halo_kern_arg* args,
                  uint32_t nargs) {
  if (nargs != 3 || !is_u64(args[0]) || args[0].elem_count != 3 ||
      !is_f64(args[1]) || !is_f64(args[2]))
    return kBadArgs;
  uint64_t m = u64(args[0])[0], k = u64(args[0])[1], n = u64(args[0])[2];
  if (args[1].elem_count != m * k || args[2].elem_count != k * n)
    return kBadArgs;
  uint64_t* dims = emit_u64(env, 2);
  double* c = emit_f64(env, m * n);
  if (!dims || !c) return 2;
  dims[0] = m;
  dims[1] = n;
  (Opt ? mmm_opt : mmm_naive)(f64(args[1]), f64(args[2]), c, m, k, n);
  return kOk;
}

template <bool Opt, bool Divide>
int32_t entry_ew(const halo_kern_env* env, const halo_kern_arg* args,
                 uint32_t nargs) {
  if (nargs != 3 || !is_u64(args[0]) || args[0].elem_count != 2 ||
      !is_f64(args[1]) || !is_f64(args[2]))
    return kBadArgs;
  uint64_t r = u64(args[0])[0], cdim = u64(args[0])[1];
  if (args[1].elem_count != r * cdim || args[2].elem_count != r * cdim)
    return kBadArgs;
  uint64_t* dims = emit_u64(env, 2);
  double* c = emit_f64(env, r * cdim);
  if (!dims || !c) return 2;
  dims[0] = r;
  dims[1] = cdim;
  (Opt ? ew_opt : ew_naive)(f64(args[1]), f64(args[2]), c, r * cdim, Divide);
  return kOk;
}

template <bool Opt>
int32_t entry_smmm(const halo_kern_env* env, const halo_kern_arg* args,
                   uint32_t nargs) {
  if (nargs != 5 || !is_u64(args[0]) || args[0].elem_count != 3 ||
      !is_u64(args[1]) || !is_u64(args[2]) || !is_f64(args[3]) ||
      !is_f64(args[4]))
    return kBadArgs;
  uint64_t m = u64(args[0])[0], k = u64(args[0])[1], n = u64(args[0])[2];
  const uint64_t* row_ptr = u64(args[1]);
  const uint64_t* col_idx = u64(args[2]);
  uint64_t nnz = args[3].elem_count;
  if (args[1].elem_count != m + 1 || args[2].elem_count != nnz ||
      args[4].elem_count != k * n || m == 0 || row_ptr[0] != 0 ||
      row_ptr[m] != nnz)
    return kBadArgs;
  for (uint64_t i = 0; i < m; ++i)
    if (row_ptr[i] > row_ptr[i + 1]) return kBadArgs;
  for (uint64_t p = 0; p < nnz; ++p)
    if (col_idx[p] >= k) return kBadArgs;
  uint64_t* dims = emit_u64(env, 2);
  double* c = emit_f64(env, m * n);
  if (!dims || !c) return 2;
  dims[0] = m;
  dims[1] = n;
  (Opt ? smmm_opt : smmm_naive)(row_ptr, col_idx, f64(args[3]), f64(args[4]),
                                c, m, n);
  return kOk;
}

template <bool Opt>
int32_t entry_mvm(const halo_kern_env* env, const halo_kern_arg* args,
                  uint32_t nargs) {
  if (nargs != 3 || !is_u64(args[0]) || args[0].elem_count != 2 ||
      !is_f64(args[1]) || !is_f64(args[2]))
    return kBadArgs;
  uint64_t m = u64(args[0])[0], n = u64(args[0])[1];
  if (args[1].elem_count != m * n || args[2].elem_count != n) return kBadArgs;
  double* y = emit_f64(env, m);
  if (!y) return 2;
  (Opt ? mvm_opt : mvm_naive)(f64(args[1]), f64(args[2]), y, m, n);
  return kOk;
}

template <bool Opt>
int32_t entry_vdp(const halo_kern_env* env, const halo_kern_arg* args,
                  uint32_t nargs) {
  if (nargs != 2 || !is_f64(args[0]) || !is_f64(args[1]) ||
      args[0].elem_count != args[1].elem_count)
    return kBadArgs;
  double* out = emit_f64(env, 1);
  if (!out) return 2;
  out[0] =
      (Opt ? vdp_opt : vdp_naive)(f64(args[0]), f64(args[1]), args[0].elem_count);
  return kOk;
}

template <bool Opt>
int32_t entry_js(const halo_kern_env* env, const halo_kern_arg* args,
                 uint32_t nargs) {
  if (nargs != 4 || !is_u64(args[0]) || args[0].elem_count != 2 ||
      !is_f64(args[1]) || !is_f64(args[2]) || !is_f64(args[3]) ||
      args[3].elem_count != 1)
    return kBadArgs;
  uint64_t n = u64(args[0])[0], iters = u64(args[0])[1];
  if (n == 0 || args[1].elem_count != n * n || args[2].elem_count != n)
    return kBadArgs;
  const double* a = f64(args[1]);
  for (uint64_t i = 0; i < n; ++i)
    if (a[i * n + i] == 0.0) return kBadArgs;
  double tol = f64(args[3])[0];
  double* x = emit_f64(env, n);
  if (!x) return 2;
  std::vector<double> cur(n, 0.0), next(n, 0.0);
  auto sweep = Opt ? jacobi_sweep_opt : jacobi_sweep_naive;
  for (uint64_t it = 0; it < iters; ++it) {
    sweep(a, f64(args[2]), cur.data(), next.data(), n);
    double delta = 0.0;
    for (uint64_t i = 0; i < n; ++i)
      delta = std::max(delta, std::fabs(next[i] - cur[i]));
    cur.swap(next);
    if (delta < tol) break;
  }
  std::memcpy(x, cur.data(), n * sizeof(double));
  return kOk;
}

template <bool Opt>
int32_t entry_conv1d(const halo_kern_env* env, const halo_kern_arg* args,
                     uint32_t nargs) {
  if (nargs != 2 || !is_f64(args[0]) || !is_f64(args[1]) ||
      args[0].elem_count == 0 || args[1].elem_count == 0)
    return kBadArgs;
  double* out = emit_f64(env, args[0].elem_count);
  if (!out) return 2;
  (Opt ? conv1d_opt : conv1d_naive)(f64(args[0]), args[0].elem_count,
                                    f64(args[1]), args[1].elem_count, out);
  return kOk;
}

}  // namespace

halo_kernel_fn kernel_entry(std::string_view name, bool opt) {
  if (name == "mmm") return opt ? entry_mmm<true> : entry_mmm<false>;
  if (name == "ewmm")
    return opt ? entry_ew<true, false> : entry_ew<false, false>;
  if (name == "ewmd") return opt ? entry_ew<true, true> : entry_ew<false, true>;
  if (name == "smmm") return opt ? entry_smmm<true> : entry_smmm<false>;
  if (name == "mvm") return opt ? entry_mvm<true> : entry_mvm<false>;
  if (name == "vdp") return opt ? entry_vdp<true> : entry_vdp<false>;
  if (name == "js") return opt ? entry_js<true> : entry_js<false>;
  if (name == "conv1d") return opt ? entry_conv1d<true> : entry_conv1d<false>;
  return nullptr;
}

}  // namespace halo::kern
