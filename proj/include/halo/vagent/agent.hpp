// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// The virtualization agent: a three-thread, three-stage pipeline behind one
// listening endpoint.
//
//   stage 1, network manager   accepts connections, reads envelope frames,
//                              deserializes bodies into objects
//   stage 2, system services   answers everything resolvable without
//                              hardware intervention (manifest and metrics
//                              queries, claim/buffer/free bookkeeping)
//   stage 3, device services   drives the device manager, executes kernels,
//                              serializes replies
//
// Stages are connected by bounded single-producer/single-consumer queues and
// every accepted envelope is tracked as a transaction chain until its reply
// is sent. Malformed envelopes are dropped (or answered with an error) and
// never take the agent down.

#ifndef HALO_VAGENT_AGENT_HPP
#define HALO_VAGENT_AGENT_HPP

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include "halo/ipc/channel.hpp"
#include "halo/ipc/content_store.hpp"
#include "halo/ipc/spsc_queue.hpp"
#include "halo/vagent/device_manager.hpp"
#include "halo/vagent/kernel_repository.hpp"

namespace halo::vagent {

/// Per-transaction processing record: one timestamp per pipeline stage.
/// Short-circuited requests (answered by the system services) complete with
/// executed == serviced.
struct TransactionChain {
  uint64_t transaction_id = 0;
  MsgType msg_type = MsgType::Shutdown;
  std::chrono::steady_clock::time_point received{};
  std::chrono::steady_clock::time_point decoded{};
  std::chrono::steady_clock::time_point serviced{};
  std::chrono::steady_clock::time_point executed{};
  std::chrono::steady_clock::time_point replied{};
  bool completed = false;
};

struct AgentCounters {
  uint64_t requests_received = 0;
  uint64_t responses_sent = 0;
  uint64_t exec_invocations = 0;
  uint64_t manifest_queries = 0;
  uint64_t dropped_frames = 0;
};

class VirtAgent {
 public:
  struct Options {
    std::string backend_id;  ///< instance token, e.g. "cpu_opt#0"
    std::string endpoint;    ///< listening socket path
    std::vector<std::string> kernel_dirs;  ///< directories of *.ha packages
    uint64_t sim_t2_ns = 0;
    uint64_t sim_t3_ns = 0;
    bool exit_on_disconnect = false;
  };

  explicit VirtAgent(Options opts);
  ~VirtAgent();

  /// Bind the endpoint, load kernel packages, start the pipeline threads.
  StatusCode start();
  /// Request a graceful stop and join the pipeline.
  void stop();
  /// Block until the agent stops (shutdown message or last client gone).
  void wait();

  bool running() const { return running_.load(); }
  KernelRepository& repository() { return repo_; }
  const Options& options() const { return opts_; }

  AgentCounters counters() const;
  std::vector<TransactionChain> chains() const;

 private:
  struct Connection;
  struct WorkItem;

  void network_stage();
  void service_stage();
  void device_stage();

  void push_q12(std::unique_ptr<WorkItem> item);
  void push_q23(std::unique_ptr<WorkItem> item);
  ipc::ContentStore* attachment(uint64_t app_id);
  void reply(WorkItem& item, MsgType type, StatusCode status,
             std::span<const std::byte> body);
  void finish_chain(WorkItem& item, bool short_circuit);
  std::string metrics_json() const;

  Options opts_;
  std::unique_ptr<ipc::Listener> listener_;
  std::vector<std::shared_ptr<Connection>> connections_;
  std::map<uint64_t, std::unique_ptr<ipc::ContentStore>> attachments_;

  KernelRepository repo_;
  DeviceManager device_;
  std::map<uint64_t, const LoadedKernel*> cr_bindings_;

  ipc::SpscQueue<std::unique_ptr<WorkItem>> q12_{4096};
  ipc::SpscQueue<std::unique_ptr<WorkItem>> q23_{4096};
  std::counting_semaphore<1 << 30> sem12_{0};
  std::counting_semaphore<1 << 30> sem23_{0};

  std::thread t_network_, t_service_, t_device_;
  std::atomic<bool> running_{false};
  std::atomic<bool> stopping_{false};

  mutable std::mutex stats_mu_;
  AgentCounters counters_;
  std::map<uint64_t, TransactionChain> chains_;
};

}  // namespace halo::vagent

#endif  // HALO_VAGENT_AGENT_HPP
