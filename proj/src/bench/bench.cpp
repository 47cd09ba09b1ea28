// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/bench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "halo/kernels/kernels.hpp"

namespace halo::bench {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double perf_penalty(double t3_variant, double t3_baseline) {
  return (t3_variant - t3_baseline) / t3_baseline * 100.0;
}

double portability_score(double t3_baseline, double t3_agnostic) {
  double s = t3_baseline / t3_agnostic;
  return std::clamp(s, 0.0, 1.0);
}

double overhead_ratio(double t1, double t4) { return t1 / t4 * 100.0; }

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Dims dims_for(std::string_view kernel, uint64_t wss) {
  Dims d;
  auto sq = [&](uint64_t denom) {
    return std::max<uint64_t>(
        2, static_cast<uint64_t>(std::sqrt(static_cast<double>(wss) /
                                           static_cast<double>(denom))));
  };
  if (kernel == "mmm" || kernel == "ewmm" || kernel == "ewmd") {
    d.rows = d.cols = d.inner = sq(24);
  } else if (kernel == "smmm") {
    d.rows = d.cols = d.inner = sq(16);
    d.nnz_per_row = 8;
  } else if (kernel == "mvm") {
    d.rows = d.cols = sq(8);
  } else if (kernel == "js") {
    d.rows = d.cols = sq(8);
    d.iters = 10;
  } else if (kernel == "vdp") {
    d.vec_len = std::max<uint64_t>(4, wss / 16);
  } else if (kernel == "conv1d") {
    d.vec_len = std::max<uint64_t>(64, wss / 16);
    d.taps = 31;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Deterministic inputs. Argument order matches the registry signatures; the
// same arrays feed both the dispatched and the direct path.
// ---------------------------------------------------------------------------

namespace {

struct InputArray {
  MpixType kind = MpixType::Float64;
  std::vector<double> f64;
  std::vector<uint64_t> u64;

  const void* data() const {
    return kind == MpixType::Float64
               ? static_cast<const void*>(f64.data())
               : static_cast<const void*>(u64.data());
  }
  uint64_t count() const {
    return kind == MpixType::Float64 ? f64.size() : u64.size();
  }
  uint64_t bytes() const { return count() * 8; }
};

std::vector<InputArray> build_inputs(std::string_view kernel, uint64_t wss,
                                     uint64_t seed) {
  std::mt19937_64 gen(seed ^ 0x9E3779B97F4A7C15ull);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_real_distribution<double> safe(0.5, 1.5);
  Dims d = dims_for(kernel, wss);
  std::vector<InputArray> in;

  auto f64s = [&](uint64_t n, auto& dist) {
    InputArray a;
    a.kind = MpixType::Float64;
    a.f64.resize(n);
    for (auto& x : a.f64) x = dist(gen);
    return a;
  };
  auto u64s = [&](std::initializer_list<uint64_t> v) {
    InputArray a;
    a.kind = MpixType::Uint64;
    a.u64.assign(v);
    return a;
  };

  if (kernel == "mmm") {
    in.push_back(u64s({d.rows, d.inner, d.cols}));
    in.push_back(f64s(d.rows * d.inner, uni));
    in.push_back(f64s(d.inner * d.cols, uni));
  } else if (kernel == "ewmm") {
    in.push_back(u64s({d.rows, d.cols}));
    in.push_back(f64s(d.rows * d.cols, uni));
    in.push_back(f64s(d.rows * d.cols, uni));
  } else if (kernel == "ewmd") {
    in.push_back(u64s({d.rows, d.cols}));
    in.push_back(f64s(d.rows * d.cols, uni));
    in.push_back(f64s(d.rows * d.cols, safe));  // divisors away from zero
  } else if (kernel == "smmm") {
    uint64_t n = d.rows;
    uint64_t per = std::min<uint64_t>(d.nnz_per_row, n);
    InputArray row_ptr, col_idx, values;
    row_ptr.kind = col_idx.kind = MpixType::Uint64;
    values.kind = MpixType::Float64;
    row_ptr.u64.resize(n + 1, 0);
    std::uniform_int_distribution<uint64_t> col(0, n - 1);
    for (uint64_t i = 0; i < n; ++i) {
      std::vector<uint64_t> cols;
      while (cols.size() < per) {
        uint64_t c = col(gen);
        if (std::find(cols.begin(), cols.end(), c) == cols.end())
          cols.push_back(c);
      }
      std::sort(cols.begin(), cols.end());
      for (uint64_t c : cols) {
        col_idx.u64.push_back(c);
        values.f64.push_back(uni(gen));
      }
      row_ptr.u64[i + 1] = col_idx.u64.size();
    }
    in.push_back(u64s({n, n, n}));
    in.push_back(std::move(row_ptr));
    in.push_back(std::move(col_idx));
    in.push_back(std::move(values));
    in.push_back(f64s(n * n, uni));
  } else if (kernel == "mvm") {
    in.push_back(u64s({d.rows, d.cols}));
    in.push_back(f64s(d.rows * d.cols, uni));
    in.push_back(f64s(d.cols, uni));
  } else if (kernel == "vdp") {
    in.push_back(f64s(d.vec_len, uni));
    in.push_back(f64s(d.vec_len, uni));
  } else if (kernel == "js") {
    uint64_t n = d.rows;
    InputArray a = f64s(n * n, uni);
    // Strict diagonal dominance keeps the sweep contractive.
    for (uint64_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (uint64_t j = 0; j < n; ++j)
        if (j != i) sum += std::fabs(a.f64[i * n + j]);
      a.f64[i * n + i] = sum + 1.0;
    }
    in.push_back(u64s({n, d.iters}));
    in.push_back(std::move(a));
    in.push_back(f64s(n, uni));
    InputArray tol;
    tol.kind = MpixType::Float64;
    tol.f64 = {0.0};
    in.push_back(std::move(tol));
  } else if (kernel == "conv1d") {
    in.push_back(f64s(d.vec_len, uni));
    in.push_back(f64s(d.taps, uni));
  }
  return in;
}

// Bump-allocator emit target for the direct path.
struct DirectEmit {
  std::vector<std::byte> arena;
  size_t used = 0;
};

extern "C" void* direct_emit(halo_kern_ctx* raw, uint8_t, uint8_t,
                             uint32_t elem_size, uint64_t elem_count) {
  auto* ctx = reinterpret_cast<DirectEmit*>(raw);
  size_t need = (elem_size * elem_count + 63) & ~size_t{63};
  if (ctx->used + need > ctx->arena.size())
    ctx->arena.resize(std::max(ctx->arena.size() * 2, ctx->used + need));
  void* p = ctx->arena.data() + ctx->used;
  ctx->used += need;
  return p;
}

}  // namespace

double direct_t3_median(std::string_view kernel, bool optimized, uint64_t wss,
                        uint64_t seed, uint32_t repetitions,
                        uint32_t warmups) {
  halo_kernel_fn fn = kern::kernel_entry(kernel, optimized);
  if (!fn) return 0.0;
  auto inputs = build_inputs(kernel, wss, seed);

  std::vector<halo_kern_arg> args;
  for (const auto& a : inputs) {
    halo_kern_arg k{};
    k.is_float = a.kind == MpixType::Float64;
    k.is_signed = k.is_float;
    k.elem_size = 8;
    k.elem_count = a.count();
    k.data = a.data();
    k.mut = nullptr;
    args.push_back(k);
  }

  DirectEmit emit;
  halo_kern_env env{reinterpret_cast<halo_kern_ctx*>(&emit), direct_emit};
  std::vector<double> t3;
  for (uint32_t i = 0; i < warmups + repetitions; ++i) {
    emit.used = 0;
    auto t0 = Clock::now();
    fn(&env, args.data(), static_cast<uint32_t>(args.size()));
    auto t1 = Clock::now();
    if (i >= warmups)
      t3.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  return median_of(std::move(t3));
}

Result<StagedInvocation> stage_inputs(runtime::ParentContext& ctx,
                                      std::string_view kernel, uint64_t wss,
                                      uint64_t seed) {
  using R = Result<StagedInvocation>;
  auto inputs = build_inputs(kernel, wss, seed);
  if (inputs.empty()) return R::failure(StatusCode::ErrBadArgument);
  StagedInvocation staged;
  for (const auto& a : inputs) {
    auto buf = ctx.alloc_mem(a.bytes());
    if (!buf.ok()) return R::failure(buf.status);
    std::memcpy(buf.value.data.data(), a.data(), a.bytes());
    auto arg = buf.value.as_argument(a.kind, 0, a.bytes());
    if (!arg.ok()) return R::failure(arg.status);
    staged.object.args.push_back(std::move(arg.value));
    staged.buffers.push_back(buf.value);
  }
  return R::success(std::move(staged));
}

Result<BenchReport> run_bench(runtime::ParentContext& ctx,
                              const BenchSpec& spec) {
  using R = Result<BenchReport>;
  if (spec.repetitions < 5) return R::failure(StatusCode::ErrBadArgument);
  const kern::KernelInfo* info = kern::kernel_by_name(spec.kernel);
  if (!info) return R::failure(StatusCode::ErrBadArgument);

  // Claim first: an unregistered kernel fails here, before any timing.
  auto cr = ctx.claim(info->alias);
  if (!cr.ok()) return R::failure(cr.status);

  auto staged = stage_inputs(ctx, spec.kernel, spec.wss, spec.seed);
  if (!staged.ok()) return R::failure(staged.status);

  BenchReport report;
  report.spec = spec;
  for (uint32_t i = 0; i < spec.warmups + spec.repetitions; ++i) {
    StatusCode st = ctx.send(staged.value.object, cr.value, /*tag=*/7);
    if (st != StatusCode::Ok) return R::failure(st);
    auto rsp = ctx.recv(cr.value, 7);
    if (!rsp.ok()) return R::failure(rsp.status);
    if (!is_success(rsp.value.status()))
      return R::failure(rsp.value.status());
    if (i >= spec.warmups) report.records.push_back(rsp.value.timing());
  }
  ctx.free(cr.value);

  std::vector<double> t1, t2, t3, t4;
  for (const auto& r : report.records) {
    t1.push_back(r.t1);
    t2.push_back(r.t2);
    t3.push_back(r.t3);
    t4.push_back(r.t4);
  }
  report.median.t1 = median_of(t1);
  report.median.t2 = median_of(t2);
  report.median.t3 = median_of(t3);
  report.median.t4 = median_of(t4);
  report.overhead_pct = overhead_ratio(report.median.t1, report.median.t4);

  if (spec.with_direct_baseline) {
    bool optimized = spec.backend.rfind("cpu_opt", 0) == 0;
    report.direct_t3 =
        direct_t3_median(spec.kernel, optimized, spec.wss, spec.seed,
                         spec.repetitions, spec.warmups);
    if (report.direct_t3 > 0.0 && report.median.t3 > 0.0) {
      report.penalty_pct = perf_penalty(report.median.t3, report.direct_t3);
      report.portability = portability_score(report.direct_t3, report.median.t3);
    }
  }
  return R::success(std::move(report));
}

std::string standard_config_json(std::string_view backend, uint32_t replicas,
                                 std::string_view kernels_dir,
                                 uint64_t sim_t2_ns, uint64_t sim_t3_ns,
                                 uint32_t func_repl) {
  json funcs = json::array();
  for (const auto& k : kern::kernel_table()) {
    char fid[24];
    snprintf(fid, sizeof(fid), "%llX",
             static_cast<unsigned long long>(k.sw_fid));
    funcs.push_back({{"func_alias", std::string(k.alias)},
                     {"sw_fid", fid},
                     {"func_repl", std::to_string(func_repl)},
                     {"platform_id", "rr_scat"}});
    if (!k.alt_alias.empty())
      funcs.push_back({{"func_alias", std::string(k.alt_alias)},
                       {"sw_fid", fid},
                       {"func_repl", std::to_string(func_repl)},
                       {"platform_id", "rr_scat"}});
  }
  json platform{{"backend_id", std::string(backend)},
                {"replicas", std::to_string(replicas)}};
  if (!kernels_dir.empty()) platform["kernels_dir"] = std::string(kernels_dir);
  if (sim_t2_ns) platform["sim_t2_ns"] = sim_t2_ns;
  if (sim_t3_ns) platform["sim_t3_ns"] = sim_t3_ns;
  json root{{"host_list", json::array({json{{"host_name", "localhost"},
                                            {"port", "8000"},
                                            {"mode", "ads_accel"},
                                            {"max_slots", "1"}}})},
            {"func_list", funcs},
            {"platform_list", json::array({platform})}};
  return root.dump(2);
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

static json report_to_json(const BenchReport& r) {
  json recs = json::array();
  for (const auto& t : r.records)
    recs.push_back({{"t1", t.t1}, {"t2", t.t2}, {"t3", t.t3}, {"t4", t.t4}});
  return json{{"kernel", r.spec.kernel},
              {"backend", r.spec.backend},
              {"wss", r.spec.wss},
              {"reps", r.spec.repetitions},
              {"warmups", r.spec.warmups},
              {"records", recs},
              {"t1_s", r.median.t1},
              {"t2_s", r.median.t2},
              {"t3_s", r.median.t3},
              {"t4_s", r.median.t4},
              {"direct_t3_s", r.direct_t3},
              {"penalty_pct", r.penalty_pct},
              {"portability", r.portability},
              {"overhead_pct", r.overhead_pct}};
}

std::string reports_to_json(const std::vector<BenchReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return arr.dump(2);
}

StatusCode emit_json(const std::vector<BenchReport>& reports,
                     const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) return StatusCode::ErrNoResource;
  out << reports_to_json(reports) << "\n";
  return out.good() ? StatusCode::Ok : StatusCode::ErrNoResource;
}

StatusCode emit_csv(const std::vector<BenchReport>& reports,
                    const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) return StatusCode::ErrNoResource;
  out << "kernel,backend,wss,reps,t1_s,t2_s,t3_s,t4_s,direct_t3_s,"
         "penalty_pct,portability,overhead_pct\n";
  char line[512];
  for (const auto& r : reports) {
    snprintf(line, sizeof(line),
             "%s,%s,%llu,%u,%.9f,%.9f,%.9f,%.9f,%.9f,%.4f,%.4f,%.6f\n",
             r.spec.kernel.c_str(), r.spec.backend.c_str(),
             static_cast<unsigned long long>(r.spec.wss), r.spec.repetitions,
             r.median.t1, r.median.t2, r.median.t3, r.median.t4, r.direct_t3,
             r.penalty_pct, r.portability, r.overhead_pct);
    out << line;
  }
  return out.good() ? StatusCode::Ok : StatusCode::ErrNoResource;
}

}  // namespace halo::bench
