// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hardware-agnostic host program. Everything hardware-specific lives behind
// the configuration file: this source names no device, vendor or backend.
// Retargeting the run means editing the config, not this file.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "halo/bench/bench.hpp"
#include "halo/kernels/kernels.hpp"
#include "halo/runtime/context.hpp"

using halo::StatusCode;

int main(int argc, char** argv) {
  CLI::App app{"halo-app: config-driven host program"};

  std::string alias = "MMM", config_path, out_path;
  uint64_t wss = 1ull << 18;
  uint64_t seed = 42;
  int32_t tag = 20;
  app.add_option("--alias", alias, "configured function alias");
  app.add_option("--config", config_path, "config file (or $HALO_CONFIG)");
  app.add_option("--wss", wss, "working-set size in bytes");
  app.add_option("--seed", seed, "input generator seed");
  app.add_option("--tag", tag, "transmission tag");
  app.add_option("--out", out_path, "write the result record to this file");
  CLI11_PARSE(app, argc, argv);

  auto ctx_r = halo::runtime::ParentContext::initialize(config_path);
  if (!ctx_r.ok()) {
    std::fprintf(stderr, "initialize failed: %s\n",
                 halo::status_name(ctx_r.status));
    return 1;
  }
  auto& ctx = *ctx_r.value;

  const halo::kern::KernelInfo* info = nullptr;
  for (const auto& k : halo::kern::kernel_table())
    if (k.alias == alias || k.alt_alias == alias) info = &k;
  if (!info) {
    std::fprintf(stderr, "unknown alias %s\n", alias.c_str());
    return 1;
  }

  auto cr = ctx.claim(alias);
  if (!cr.ok()) {
    std::fprintf(stderr, "claim failed: %s\n", halo::status_name(cr.status));
    return 1;
  }

  auto staged = halo::bench::stage_inputs(ctx, info->name, wss, seed);
  if (!staged.ok()) {
    std::fprintf(stderr, "staging failed: %s\n",
                 halo::status_name(staged.status));
    return 1;
  }

  if (ctx.send(staged.value.object, cr.value, tag) != StatusCode::Ok) {
    std::fprintf(stderr, "send failed\n");
    return 1;
  }
  auto rsp = ctx.recv(cr.value, tag);
  if (!rsp.ok() || !halo::is_success(rsp.value.status())) {
    std::fprintf(stderr, "recv failed: %s\n",
                 halo::status_name(rsp.ok() ? rsp.value.status() : rsp.status));
    return 1;
  }

  nlohmann::json record{{"alias", alias},
                        {"kernel", std::string(info->name)},
                        {"wss", wss},
                        {"seed", seed},
                        {"status", halo::status_name(rsp.value.status())},
                        {"t1_s", rsp.value.timing().t1},
                        {"t2_s", rsp.value.timing().t2},
                        {"t3_s", rsp.value.timing().t3},
                        {"t4_s", rsp.value.timing().t4}};

  const auto& args = rsp.value.object().args;
  if (!args.empty()) {
    auto values = rsp.value.arg_f64(args.size() - 1);
    if (values.ok()) {
      double sum = 0.0;
      for (double v : values.value) sum += v;
      record["result_count"] = values.value.size();
      record["result_sum"] = sum;
      if (values.value.size() <= 65536) {
        nlohmann::json arr = nlohmann::json::array();
        for (double v : values.value) arr.push_back(v);
        record["values"] = std::move(arr);
      }
    }
  }

  ctx.free(cr.value);
  ctx.finalize();

  std::string text = record.dump(2);
  if (out_path.empty()) {
    std::printf("%s\n", text.c_str());
  } else {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) {
      std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
      return 1;
    }
    out << text << "\n";
  }
  return 0;
}
