// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// Virtualization agent daemon: encapsulates one backend runtime and its
// kernel repository behind an IPC endpoint.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <string>
#include <vector>

#include "halo/vagent/agent.hpp"

namespace {
halo::vagent::VirtAgent* g_agent = nullptr;

void handle_signal(int) {
  if (g_agent) g_agent->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"halo-vagent: virtualization agent"};

  halo::vagent::VirtAgent::Options opts;
  app.add_option("--backend", opts.backend_id, "backend instance id")
      ->required();
  app.add_option("--endpoint", opts.endpoint, "listening socket path")
      ->required();
  app.add_option("--kernels", opts.kernel_dirs,
                 "directory of .ha kernel packages (repeatable)");
  app.add_option("--sim-t2-ns", opts.sim_t2_ns,
                 "artificial offload latency (sim backends)");
  app.add_option("--sim-t3-ns", opts.sim_t3_ns,
                 "artificial kernel latency (sim backends)");
  app.add_flag("--exit-on-disconnect", opts.exit_on_disconnect,
               "stop when the last client disconnects");
  CLI11_PARSE(app, argc, argv);

  halo::vagent::VirtAgent agent(opts);
  g_agent = &agent;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  if (agent.start() != halo::StatusCode::Ok) {
    std::fprintf(stderr,
                 "{\"event\":\"error\",\"backend\":\"%s\",\"endpoint\":\"%s\"}\n",
                 opts.backend_id.c_str(), opts.endpoint.c_str());
    return 1;
  }
  std::printf(
      "{\"event\":\"ready\",\"backend\":\"%s\",\"endpoint\":\"%s\","
      "\"kernels\":%zu}\n",
      opts.backend_id.c_str(), opts.endpoint.c_str(),
      agent.repository().size());
  std::fflush(stdout);

  agent.wait();
  return 0;
}
