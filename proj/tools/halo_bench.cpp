// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// Benchmark harness CLI: per-kernel runs, the full sweep matrix, and a
// multithreaded stress mode exercising the runtime agent's thread safety.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>
#include <vector>

#include "halo/bench/bench.hpp"
#include "halo/kernels/kernels.hpp"
#include "halo/runtime/context.hpp"

using halo::StatusCode;

namespace {

std::unique_ptr<halo::runtime::ParentContext> make_context(
    const std::string& config_path, const std::string& backend,
    uint32_t replicas) {
  if (!config_path.empty()) {
    auto ctx = halo::runtime::ParentContext::initialize(config_path);
    if (!ctx.ok()) return nullptr;
    return std::move(ctx.value);
  }
  auto text = halo::bench::standard_config_json(backend, replicas);
  auto cfg = halo::config::parse_config(text);
  if (!cfg.ok()) return nullptr;
  auto ctx = halo::runtime::ParentContext::initialize_with(std::move(cfg.value));
  if (!ctx.ok()) return nullptr;
  return std::move(ctx.value);
}

void print_report(const halo::bench::BenchReport& r) {
  std::printf(
      "%-7s %-10s wss=%-10llu t1=%.6fs t2=%.6fs t3=%.6fs t4=%.6fs "
      "overhead=%.5f%%",
      r.spec.kernel.c_str(), r.spec.backend.c_str(),
      static_cast<unsigned long long>(r.spec.wss), r.median.t1, r.median.t2,
      r.median.t3, r.median.t4, r.overhead_pct);
  if (r.direct_t3 > 0.0)
    std::printf(" direct_t3=%.6fs score=%.3f", r.direct_t3, r.portability);
  std::printf("\n");
}

int write_outputs(const std::vector<halo::bench::BenchReport>& reports,
                  const std::string& json_path, const std::string& csv_path) {
  if (!json_path.empty() &&
      halo::bench::emit_json(reports, json_path) != StatusCode::Ok) {
    std::fprintf(stderr, "cannot write %s\n", json_path.c_str());
    return 1;
  }
  if (!csv_path.empty() &&
      halo::bench::emit_csv(reports, csv_path) != StatusCode::Ok) {
    std::fprintf(stderr, "cannot write %s\n", csv_path.c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"halo-bench: benchmark harness and metrics calculator"};
  app.require_subcommand(1);

  std::string kernel = "mmm", backend = "cpu_opt", config_path;
  uint64_t wss = 1ull << 26;
  uint32_t reps = 5, warmups = 2;
  uint64_t seed = 42;
  bool baseline = false;
  std::string json_path, csv_path;

  auto* run = app.add_subcommand("run", "run one kernel/backend/wss point");
  run->add_option("--kernel", kernel, "kernel name (mmm, ewmm, ...)");
  run->add_option("--backend", backend, "backend id");
  run->add_option("--wss", wss, "working-set size in bytes");
  run->add_option("--reps", reps, "timed repetitions (>= 5)");
  run->add_option("--warmups", warmups, "untimed warmups");
  run->add_option("--seed", seed, "input generator seed");
  run->add_option("--config", config_path, "explicit config file");
  run->add_flag("--baseline", baseline, "also time the direct call");
  run->add_option("--json", json_path, "write JSON report");
  run->add_option("--csv", csv_path, "write CSV report");

  std::vector<uint64_t> wss_list;
  auto* sweep = app.add_subcommand("sweep", "full kernel x wss matrix");
  sweep->add_option("--backend", backend, "backend id");
  sweep->add_option("--wss", wss_list,
                    "working-set sizes (default 1,4,16,64,256 MB)");
  sweep->add_option("--reps", reps, "timed repetitions");
  sweep->add_option("--warmups", warmups, "untimed warmups");
  sweep->add_option("--config", config_path, "explicit config file");
  sweep->add_flag("--baseline", baseline, "also time the direct calls");
  sweep->add_option("--json", json_path, "write JSON report");
  sweep->add_option("--csv", csv_path, "write CSV report");

  uint32_t threads = 8;
  uint64_t ops = 100;
  auto* stress = app.add_subcommand(
      "stress", "multithreaded send/recv soak on one context");
  stress->add_option("--threads", threads, "worker threads");
  stress->add_option("--ops", ops, "operations per thread");
  stress->add_option("--backend", backend, "backend id");
  stress->add_option("--config", config_path, "explicit config file");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    auto ctx = make_context(config_path, backend, 1);
    if (!ctx) {
      std::fprintf(stderr, "initialization failed\n");
      return 1;
    }
    halo::bench::BenchSpec spec{kernel, backend, wss, reps,
                                warmups, seed, baseline};
    auto rep = halo::bench::run_bench(*ctx, spec);
    ctx->finalize();
    if (!rep.ok()) {
      std::fprintf(stderr, "bench failed: %s\n",
                   halo::status_name(rep.status));
      return 1;
    }
    print_report(rep.value);
    return write_outputs({rep.value}, json_path, csv_path);
  }

  if (sweep->parsed()) {
    if (wss_list.empty())
      wss_list = {1ull << 20, 1ull << 22, 1ull << 24, 1ull << 26, 1ull << 28};
    auto ctx = make_context(config_path, backend, 1);
    if (!ctx) {
      std::fprintf(stderr, "initialization failed\n");
      return 1;
    }
    std::vector<halo::bench::BenchReport> reports;
    for (const auto& k : halo::kern::kernel_table()) {
      for (uint64_t w : wss_list) {
        halo::bench::BenchSpec spec{std::string(k.name), backend, w,
                                    reps,  warmups, seed, baseline};
        auto rep = halo::bench::run_bench(*ctx, spec);
        if (!rep.ok()) {
          std::fprintf(stderr, "%s wss=%llu failed: %s\n", k.name.data(),
                       static_cast<unsigned long long>(w),
                       halo::status_name(rep.status));
          ctx->finalize();
          return 1;
        }
        print_report(rep.value);
        reports.push_back(std::move(rep.value));
      }
    }
    ctx->finalize();
    return write_outputs(reports, json_path, csv_path);
  }

  // stress
  auto ctx = make_context(config_path, backend, 1);
  if (!ctx) {
    std::fprintf(stderr, "initialization failed\n");
    return 1;
  }
  std::atomic<uint64_t> completed{0}, failed{0};
  std::vector<std::thread> workers;
  for (uint32_t t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      auto cr = ctx->claim("VDP");
      if (!cr.ok()) {
        failed.fetch_add(ops);
        return;
      }
      std::vector<double> x{1.0, 2.0, 3.0}, y{4.0, 5.0, 6.0};
      halo::ComputeObject obj;
      obj.args.push_back(halo::Argument::inline_array<double>(
                             halo::MpixType::Float64, x)
                             .value);
      obj.args.push_back(halo::Argument::inline_array<double>(
                             halo::MpixType::Float64, y)
                             .value);
      int32_t tag = static_cast<int32_t>(t + 1);
      for (uint64_t i = 0; i < ops; ++i) {
        if (ctx->send(obj, cr.value, tag) != StatusCode::Ok) {
          failed.fetch_add(1);
          continue;
        }
        auto rsp = ctx->recv(cr.value, tag);
        if (!rsp.ok() || !halo::is_success(rsp.value.status())) {
          failed.fetch_add(1);
          continue;
        }
        auto out = rsp.value.arg_f64(0);
        if (out.ok() && out.value.size() == 1 && out.value[0] == 32.0)
          completed.fetch_add(1);
        else
          failed.fetch_add(1);
      }
      ctx->free(cr.value);
    });
  }
  for (auto& w : workers) w.join();
  auto stats = ctx->debug_stats();
  ctx->finalize();
  std::printf(
      "stress: threads=%u ops=%llu completed=%llu failed=%llu "
      "req=%llu rsp=%llu\n",
      threads, static_cast<unsigned long long>(ops),
      static_cast<unsigned long long>(completed.load()),
      static_cast<unsigned long long>(failed.load()),
      static_cast<unsigned long long>(stats.requests_sent),
      static_cast<unsigned long long>(stats.responses_received));
  bool ok = completed.load() == static_cast<uint64_t>(threads) * ops &&
            failed.load() == 0;
  return ok ? 0 : 1;
}
