// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// Benchmark harness: drives kernels through the framework and through direct
// in-process calls, measures the T1-T4 decomposition and computes the three
// derived metrics (performance penalty, performance portability score,
// overhead ratio).

#ifndef HALO_BENCH_BENCH_HPP
#define HALO_BENCH_BENCH_HPP

#include <string>
#include <vector>

#include "halo/runtime/context.hpp"
#include "halo/types.hpp"

namespace halo::bench {

// ---------------------------------------------------------------------------
// Metric arithmetic (pure)
// ---------------------------------------------------------------------------

/// Performance penalty in percent: (t3_variant - t3_baseline) / t3_baseline
/// x 100. Requires t3_baseline > 0.
double perf_penalty(double t3_variant, double t3_baseline);

/// Performance portability score: t3_baseline / t3_agnostic, clamped into
/// [0, 1]. Requires both > 0.
double portability_score(double t3_baseline, double t3_agnostic);

/// Overhead ratio in percent: t1 / t4 x 100. Requires t4 > 0.
double overhead_ratio(double t1, double t4);

// ---------------------------------------------------------------------------
// Problem geometry
// ---------------------------------------------------------------------------

/// Kernel dimensions derived deterministically from a working-set size.
/// WSS counts the float64 payload bytes of inputs plus outputs:
///   mmm            3 square matrices   n = floor(sqrt(wss / 24))
///   ewmm, ewmd     3 same-shape        n = floor(sqrt(wss / 24))
///   smmm           dense B + C         n = floor(sqrt(wss / 16)), 8 nnz/row
///   mvm            matrix dominates    n = floor(sqrt(wss / 8))
///   js             matrix dominates    n = floor(sqrt(wss / 8)), 10 sweeps
///   vdp            2 vectors           len = wss / 16
///   conv1d         signal + output     len = wss / 16, kernel 31 taps
struct Dims {
  uint64_t rows = 0;
  uint64_t cols = 0;
  uint64_t inner = 0;
  uint64_t vec_len = 0;
  uint64_t taps = 0;
  uint64_t iters = 0;
  uint64_t nnz_per_row = 0;
};
Dims dims_for(std::string_view kernel, uint64_t wss);

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

struct BenchSpec {
  std::string kernel;   // registry name: mmm, ewmm, ...
  std::string backend;  // cpu_naive | cpu_opt | sim_accel
  uint64_t wss = 1ull << 20;
  uint32_t repetitions = 5;  // >= 5
  uint32_t warmups = 2;
  uint64_t seed = 42;
  bool with_direct_baseline = false;
};

struct BenchReport {
  BenchSpec spec;
  std::vector<TimingRecord> records;  // one per repetition, warmups excluded
  TimingRecord median{};
  double direct_t3 = 0.0;  // seconds; 0 when not measured
  double penalty_pct = 0.0;
  double portability = 0.0;
  double overhead_pct = 0.0;
};

/// Deterministically generated inputs for one kernel invocation, staged into
/// the context's unified memory (zero-copy dispatch). The buffers must stay
/// alive while the object is in flight.
struct StagedInvocation {
  ComputeObject object;
  std::vector<runtime::UnifiedBuffer> buffers;
};
Result<StagedInvocation> stage_inputs(runtime::ParentContext& ctx,
                                      std::string_view kernel, uint64_t wss,
                                      uint64_t seed);

/// Run one spec through an initialized context. The kernel must resolve via
/// the context's configuration alias; an unregistered kernel fails with
/// ErrNoResource before any timing.
Result<BenchReport> run_bench(runtime::ParentContext& ctx,
                              const BenchSpec& spec);

/// Configuration text with the standard alias list and one platform entry.
std::string standard_config_json(std::string_view backend,
                                 uint32_t replicas = 1,
                                 std::string_view kernels_dir = "",
                                 uint64_t sim_t2_ns = 0,
                                 uint64_t sim_t3_ns = 0,
                                 uint32_t func_repl = 1);

/// Median of the direct in-process invocation time of the same kernel
/// variant on identical inputs (the baseline of the portability score).
double direct_t3_median(std::string_view kernel, bool optimized, uint64_t wss,
                        uint64_t seed, uint32_t repetitions, uint32_t warmups);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// CSV columns, fixed: kernel,backend,wss,reps,t1_s,t2_s,t3_s,t4_s,
/// direct_t3_s,penalty_pct,portability,overhead_pct
StatusCode emit_csv(const std::vector<BenchReport>& reports,
                    const std::string& path);
StatusCode emit_json(const std::vector<BenchReport>& reports,
                     const std::string& path);
std::string reports_to_json(const std::vector<BenchReport>& reports);

double median_of(std::vector<double> v);

}  // namespace halo::bench

#endif  // HALO_BENCH_BENCH_HPP
