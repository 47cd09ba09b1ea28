// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// The runtime agent: per-parent-rank duo-thread agent implementing the
// application interface and bridging to the virtualization agents.
//
// Thread layout: public calls run on application threads and only convert
// synchronous calls into queue submissions; a thin pump thread moves
// submissions and completions over two bounded lock-free SPSC queues; the
// proactor thread owns every IPC endpoint, the content store and all
// resource tables. Blocking calls block only the calling thread.

#ifndef HALO_RUNTIME_CONTEXT_HPP
#define HALO_RUNTIME_CONTEXT_HPP

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include "halo/config.hpp"
#include "halo/ipc/channel.hpp"
#include "halo/ipc/content_store.hpp"
#include "halo/ipc/spsc_queue.hpp"
#include "halo/runtime/round_robin.hpp"
#include "halo/types.hpp"
#include "halo/wire.hpp"

namespace halo::runtime {

/// Host fail-safe callback: takes the request object, returns the result
/// object. Runs on the context's fail-safe executor thread.
using FailsafeFn = std::function<ComputeObject(const ComputeObject&)>;

enum class CommMode : uint8_t { Native = 0, Legacy = 1 };

/// Communicator token. Only the default (native) communicator is meaningful
/// in v1; the legacy route of the mode demultiplexer is present but returns
/// ErrBadArgument ("unsupported in v1").
struct MpixComm {
  CommMode mode = CommMode::Native;
};
inline constexpr MpixComm kCommWorld{};
inline constexpr MpixComm kCommLegacy{CommMode::Legacy};

/// Unified-memory allocation backed by the content store. Arguments built
/// on top of it dispatch with zero payload copies.
struct UnifiedBuffer {
  uint64_t store_handle = 0;
  uint64_t region_id = 0;
  uint64_t offset = 0;
  std::span<std::byte> data;

  /// External-view argument over [elem 0, count) of this buffer.
  Result<Argument> as_argument(MpixType kind, uint64_t byte_offset,
                               uint64_t byte_length) const;
};

class ParentContext;

namespace detail {
struct StoreGate {
  std::mutex mu;
  ipc::ContentStore* store = nullptr;
};
}  // namespace detail

/// A result delivered by recv: the compute-object plus its timing record.
/// Result payloads stay in the content store; arg_view() borrows them
/// without copying, copy_out() copies them out. Destroying the object (or
/// finalizing the context) releases the backing allocations; views must not
/// outlive either.
class ReceivedObject {
 public:
  ReceivedObject() = default;
  ReceivedObject(ReceivedObject&&) noexcept;
  ReceivedObject& operator=(ReceivedObject&&) noexcept;
  ReceivedObject(const ReceivedObject&) = delete;
  ReceivedObject& operator=(const ReceivedObject&) = delete;
  ~ReceivedObject();

  const ComputeObject& object() const { return object_; }
  const TimingRecord& timing() const { return timing_; }
  StatusCode status() const { return object_.status; }

  /// Zero-copy view of argument i's payload (inline or external).
  Result<std::span<const std::byte>> arg_view(size_t i) const;
  /// Copy argument i's payload into dst (dst must be large enough).
  StatusCode copy_out(size_t i, std::span<std::byte> dst) const;
  /// Convenience: argument i as a float64 span.
  Result<std::span<const double>> arg_f64(size_t i) const;
  Result<std::span<const uint64_t>> arg_u64(size_t i) const;

 private:
  friend class ParentContext;
  ComputeObject object_;
  TimingRecord timing_{};
  std::shared_ptr<detail::StoreGate> gate_;
  std::vector<uint64_t> handles_;
  void release_handles();
};

struct RecvOptions {
  int timeout_ms = -1;  ///< -1: HALO_RECV_TIMEOUT_MS or the 30 s default
};

struct DebugStats {
  uint64_t store_used_bytes = 0;
  uint64_t store_live_handles = 0;
  uint64_t requests_sent = 0;
  uint64_t responses_received = 0;
  uint64_t outstanding_transactions = 0;
  uint64_t live_crs = 0;
};

struct FinalizeReport {
  uint64_t leaked_bytes = 0;
  uint64_t leaked_handles = 0;
  bool transactions_paired = false;
};

/// One application parent rank. Construction attaches (spawning when
/// necessary) the virtualization agents named by the configuration's
/// platform_list; every resource created through this context is invisible
/// to any other context.
class ParentContext {
 public:
  /// Build a context from a config file path (HALO_CONFIG when empty).
  static Result<std::unique_ptr<ParentContext>> initialize(
      const std::string& config_path = "");
  static Result<std::unique_ptr<ParentContext>> initialize_with(
      config::HaloConfig cfg);

  ~ParentContext();
  ParentContext(const ParentContext&) = delete;
  ParentContext& operator=(const ParentContext&) = delete;

  uint64_t app_id() const { return app_id_; }
  const config::HaloConfig& config() const { return cfg_; }

  /// Claim a child rank for a configured alias. When no registered kernel
  /// matches, a non-null failsafe still yields a usable CR in fail-safe
  /// mode; a null one yields ErrNoResource.
  Result<ChildRank> claim(std::string_view func_alias,
                          FailsafeFn failsafe = nullptr,
                          const KernelAttributes* overrides = nullptr);

  /// Allocate an internal buffer of type_size x vector_size bytes,
  /// framework-associated when assoc is rank 0. Associating a buffer with a
  /// FUNCTION CR makes that CR stateful.
  Result<ChildRank> create_buffer(ChildRank assoc, bool is_signed,
                                  bool is_float, uint32_t type_size,
                                  uint64_t vector_size);

  /// Unified memory; zero-copy dispatch path.
  Result<UnifiedBuffer> alloc_mem(uint64_t size);

  /// Asynchronously dispatch an invocation; the result object returns to
  /// this rank's mailbox under (dst, tag).
  StatusCode send(const ComputeObject& payload, ChildRank dst, int32_t tag,
                  MpixComm comm = kCommWorld);
  /// Single-input shortcut: one raw buffer, no compute-object wrapping.
  StatusCode send(std::span<const std::byte> raw, MpixType datatype,
                  ChildRank dst, int32_t tag, MpixComm comm = kCommWorld);
  /// As send(), but the result is delivered to the parent rank identified
  /// by fwd_app_id (mailbox key: framework rank 0).
  StatusCode send_fwd(const ComputeObject& payload, ChildRank dst, int32_t tag,
                      uint64_t fwd_app_id, MpixComm comm = kCommWorld);

  /// Block (this thread only) until a result with matching (src, tag)
  /// exists; same-tag results drain in FIFO order, distinct tags out of
  /// order.
  Result<ReceivedObject> recv(ChildRank src, int32_t tag,
                              RecvOptions opts = {},
                              MpixComm comm = kCommWorld);
  /// Receive and copy the final payload argument into out.
  Result<ReceivedObject> recv_into(std::span<std::byte> out, ChildRank src,
                                   int32_t tag, RecvOptions opts = {},
                                   MpixComm comm = kCommWorld);

  StatusCode free(ChildRank rank);
  StatusCode finalize();

  /// Mutable view of an internal buffer (framework-managed memory).
  Result<std::span<std::byte>> buffer_view(ChildRank buffer);

  // Introspection (tests, benchmarks).
  DebugStats debug_stats();
  const FinalizeReport& finalize_report() const { return finalize_report_; }
  std::vector<std::string> backend_instances();
  Result<std::string> query_metrics(size_t instance_index);
  bool cr_stateful(ChildRank rank);

 private:
  ParentContext() = default;

  struct Op;
  struct AgentLink;
  struct CrRecord;
  struct BufferRecord;
  struct MailboxItem;
  struct PendingExec;
  struct Waiter;
  struct Inbound;

  StatusCode submit(std::shared_ptr<Op> op);
  StatusCode start(config::HaloConfig cfg);
  void pump_thread();
  void proactor_thread();

  // Proactor-side helpers (only ever called on the proactor thread).
  void pr_handle_op(std::shared_ptr<Op> op);
  void pr_handle_envelope(size_t link_idx, const MessageEnvelope& env);
  void pr_expire(std::chrono::steady_clock::time_point now);
  void pr_deliver(uint64_t txn, ExecReply reply, double t4_seconds);
  void pr_deliver_local(MailboxItem item, ChildRank cr, int32_t tag);
  void pr_complete(std::shared_ptr<Op> op, StatusCode st);
  StatusCode pr_attach_agents();
  StatusCode pr_send_control(size_t link_idx, MsgType type,
                             const std::string& body, uint64_t txn,
                             int32_t tag = 0);
  void pr_finalize(std::shared_ptr<Op> op);
  void wake_proactor();

  uint64_t app_id_ = 0;
  uint32_t rank_id_ = 1;
  config::HaloConfig cfg_;
  std::unique_ptr<ipc::ContentStore> store_;
  std::shared_ptr<detail::StoreGate> gate_;

  // Application-thread intake; the pump drains it into q1.
  std::mutex intake_mu_;
  std::condition_variable pump_cv_;
  std::deque<std::shared_ptr<Op>> intake_;
  bool pump_wake_ = false;

  ipc::SpscQueue<std::shared_ptr<Op>> q1_{1024};  // pump -> proactor
  ipc::SpscQueue<std::shared_ptr<Op>> q2_{1024};  // proactor -> pump
  int proactor_eventfd_ = -1;

  std::thread pump_;
  std::thread proactor_;
  std::thread failsafe_worker_;
  bool started_ = false;
  std::atomic<bool> stopping_{false};
  std::atomic<bool> finalized_{false};

  // Fail-safe executor.
  std::mutex failsafe_mu_;
  std::condition_variable failsafe_cv_;
  std::deque<std::function<void()>> failsafe_jobs_;

  // Cross-context delivery inbox (send_fwd); guarded by inbox_mu_.
  std::mutex inbox_mu_;
  std::deque<Inbound> inbox_;

  // ---- proactor-owned state ----
  std::vector<std::unique_ptr<AgentLink>> links_;
  std::map<uint64_t, CrRecord> cr_table_;
  std::map<uint64_t, BufferRecord> buffer_table_;
  std::vector<uint64_t> unified_;
  std::map<std::pair<uint64_t, int32_t>, std::deque<MailboxItem>> mailbox_;
  std::vector<Waiter> waiters_;
  std::map<uint64_t, PendingExec> pending_exec_;
  std::map<uint64_t, std::shared_ptr<Op>> pending_control_;
  std::map<uint64_t, RoundRobin> claim_rr_;
  uint64_t next_handle_ = 1;
  uint64_t next_txn_ = 1;
  uint64_t req_sent_ = 0;
  uint64_t rsp_received_ = 0;
  int default_recv_timeout_ms_ = 30000;

  FinalizeReport finalize_report_{};
};

}  // namespace halo::runtime

#endif  // HALO_RUNTIME_CONTEXT_HPP
