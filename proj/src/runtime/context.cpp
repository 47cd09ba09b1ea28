// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/runtime/context.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/eventfd.h>
#include <sys/wait.h>
#include <unistd.h>

#include <poll.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <random>

#include <json.hpp>

#include "halo/ipc/copy_counter.hpp"
#include "halo/vagent/manifest.hpp"

namespace halo::runtime {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

namespace {

std::string u64_hex(uint64_t v) {
  char buf[24];
  snprintf(buf, sizeof(buf), "%llX", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t env_u64(const char* name, uint64_t def) {
  const char* v = std::getenv(name);
  if (!v || !*v) return def;
  return strtoull(v, nullptr, 10);
}

std::string runtime_dir() {
  if (const char* d = std::getenv("HALO_RUNTIME_DIR")) return d;
  return "/tmp";
}

uint64_t fresh_app_id() {
  static std::atomic<uint64_t> salt{0};
  std::random_device rd;
  std::mt19937_64 gen(static_cast<uint64_t>(rd()) ^
                      (static_cast<uint64_t>(::getpid()) << 32) ^
                      salt.fetch_add(0x9E3779B97F4A7C15ull));
  uint64_t id = 0;
  while (id == 0) id = gen();
  return id;
}

// Process-local parent-rank registry: send_fwd delivery between contexts of
// the same job.
std::mutex g_registry_mu;
std::map<uint64_t, ParentContext*>& registry() {
  static std::map<uint64_t, ParentContext*> m;
  return m;
}

double to_seconds(uint64_t ns) { return static_cast<double>(ns) * 1e-9; }

}  // namespace

// ---------------------------------------------------------------------------
// Internal records
// ---------------------------------------------------------------------------

struct ParentContext::AgentLink {
  std::string instance_id;
  std::string endpoint;
  std::unique_ptr<ipc::Endpoint> ep;
  std::vector<vagent::KernelManifest> manifests;
  pid_t pid = 0;  // nonzero when this context spawned the agent
};

struct ParentContext::CrRecord {
  uint64_t handle = 0;
  KernelAttributes attrs;
  FailsafeFn failsafe;
  std::vector<size_t> replicas;  // link indices, registration order
  RoundRobin send_rr;
  bool stateful = false;
  uint64_t sw_fid = 0;
};

struct ParentContext::BufferRecord {
  uint64_t store_handle = 0;
  MpixType kind = MpixType::InternalUint8;
  uint64_t elem_count = 0;
  uint64_t assoc_cr = 0;
};

struct ParentContext::MailboxItem {
  ComputeObject object;
  TimingRecord timing;
  std::vector<uint64_t> handles;
};

struct ParentContext::PendingExec {
  uint64_t cr = 0;
  int32_t tag = 0;
  Clock::time_point submitted;
  uint64_t deliver_app = 0;  // 0: this rank
};

struct ParentContext::Op {
  enum class Kind {
    Claim,
    CreateBuffer,
    AllocMem,
    Send,
    Recv,
    Free,
    Finalize,
    Metrics,
    BufferView,
    Stats,
    Stateful,
  };
  Kind kind = Kind::Stats;

  std::binary_semaphore done{0};
  StatusCode status = StatusCode::Ok;

  // claim
  std::string alias;
  FailsafeFn failsafe;
  std::optional<KernelAttributes> overrides;
  ChildRank out_rank{};
  uint64_t claim_cr = 0;

  // create_buffer
  ChildRank assoc{};
  bool is_signed = false, is_float = false;
  uint32_t type_size = 0;
  uint64_t vector_size = 0;

  // alloc_mem
  uint64_t alloc_size = 0;
  UnifiedBuffer out_buffer;

  // send / send_fwd
  ComputeObject payload;
  ChildRank dst{};
  int32_t tag = 0;
  uint64_t fwd_app = 0;

  // recv
  ChildRank src{};
  int timeout_ms = -1;
  ReceivedObject out_received;

  // metrics / views / stats
  size_t instance_index = 0;
  std::string out_text;
  std::span<std::byte> out_span;
  DebugStats out_stats;
  bool out_flag = false;

  // proactor bookkeeping for multi-response control ops
  int awaiting = 0;
  Clock::time_point deadline;
  bool has_deadline = false;
  bool completed = false;  // proactor-only; guards double completion
};

struct ParentContext::Waiter {
  std::pair<uint64_t, int32_t> key;
  Clock::time_point deadline;
  std::shared_ptr<Op> op;
};

struct ParentContext::Inbound {
  uint64_t cr = 0;
  int32_t tag = 0;
  ComputeObject object;
  uint64_t t2_ns = 0;
  uint64_t t3_ns = 0;
  Clock::time_point submitted;
};

// ---------------------------------------------------------------------------
// ReceivedObject
// ---------------------------------------------------------------------------

ReceivedObject::ReceivedObject(ReceivedObject&& o) noexcept
    : object_(std::move(o.object_)),
      timing_(o.timing_),
      gate_(std::move(o.gate_)),
      handles_(std::move(o.handles_)) {
  o.handles_.clear();
}

ReceivedObject& ReceivedObject::operator=(ReceivedObject&& o) noexcept {
  if (this != &o) {
    release_handles();
    object_ = std::move(o.object_);
    timing_ = o.timing_;
    gate_ = std::move(o.gate_);
    handles_ = std::move(o.handles_);
    o.handles_.clear();
  }
  return *this;
}

ReceivedObject::~ReceivedObject() { release_handles(); }

void ReceivedObject::release_handles() {
  if (handles_.empty() || !gate_) return;
  std::lock_guard<std::mutex> g(gate_->mu);
  if (gate_->store)
    for (uint64_t h : handles_) gate_->store->release(h);
  handles_.clear();
}

Result<std::span<const std::byte>> ReceivedObject::arg_view(size_t i) const {
  using R = Result<std::span<const std::byte>>;
  if (i >= object_.args.size()) return R::failure(StatusCode::ErrBadArgument);
  const Argument& a = object_.args[i];
  if (a.storage() == ArgStorage::Inline)
    return R::success(a.inline_payload());
  if (a.storage() == ArgStorage::External) {
    if (!gate_) return R::failure(StatusCode::ErrBadHandle);
    std::lock_guard<std::mutex> g(gate_->mu);
    if (!gate_->store) return R::failure(StatusCode::ErrFinalized);
    auto v = gate_->store->view(a.external_ref().offset,
                                a.external_ref().length);
    if (!v.ok()) return R::failure(v.status);
    return R::success(std::span<const std::byte>(v.value));
  }
  return R::failure(StatusCode::ErrBadArgument);
}

StatusCode ReceivedObject::copy_out(size_t i, std::span<std::byte> dst) const {
  auto v = arg_view(i);
  if (!v.ok()) return v.status;
  if (dst.size() < v.value.size()) return StatusCode::ErrBadArgument;
  std::memcpy(dst.data(), v.value.data(), v.value.size());
  ipc::CopyCounter::add(v.value.size());
  return StatusCode::Ok;
}

Result<std::span<const double>> ReceivedObject::arg_f64(size_t i) const {
  using R = Result<std::span<const double>>;
  auto v = arg_view(i);
  if (!v.ok()) return R::failure(v.status);
  return R::success(std::span<const double>(
      reinterpret_cast<const double*>(v.value.data()), v.value.size() / 8));
}

Result<std::span<const uint64_t>> ReceivedObject::arg_u64(size_t i) const {
  using R = Result<std::span<const uint64_t>>;
  auto v = arg_view(i);
  if (!v.ok()) return R::failure(v.status);
  return R::success(std::span<const uint64_t>(
      reinterpret_cast<const uint64_t*>(v.value.data()), v.value.size() / 8));
}

Result<Argument> UnifiedBuffer::as_argument(MpixType kind,
                                            uint64_t byte_offset,
                                            uint64_t byte_length) const {
  if (byte_offset + byte_length > data.size())
    return Result<Argument>::failure(StatusCode::ErrBadArgument);
  return Argument::external(
      kind, ExternalRef{region_id, offset + byte_offset, byte_length});
}

// ---------------------------------------------------------------------------
// Lifecycle
// ---------------------------------------------------------------------------

Result<std::unique_ptr<ParentContext>> ParentContext::initialize(
    const std::string& config_path) {
  using R = Result<std::unique_ptr<ParentContext>>;
  std::string path = config_path;
  if (path.empty()) {
    if (const char* p = std::getenv("HALO_CONFIG")) path = p;
  }
  auto cfg = config::parse_config_file(path);
  if (!cfg.ok()) return R::failure(cfg.status);
  return initialize_with(std::move(cfg.value));
}

Result<std::unique_ptr<ParentContext>> ParentContext::initialize_with(
    config::HaloConfig cfg) {
  using R = Result<std::unique_ptr<ParentContext>>;
  auto ctx = std::unique_ptr<ParentContext>(new ParentContext());
  StatusCode st = ctx->start(std::move(cfg));
  if (st != StatusCode::Ok) return R::failure(st);
  return R::success(std::move(ctx));
}

StatusCode ParentContext::start(config::HaloConfig cfg) {
  cfg_ = std::move(cfg);
  if (cfg_.platform_list.empty())
    cfg_.platform_list.push_back(config::PlatformEntry{"cpu_naive", 1, "", "",
                                                       0, 0});
  app_id_ = fresh_app_id();
  default_recv_timeout_ms_ =
      static_cast<int>(env_u64("HALO_RECV_TIMEOUT_MS", 30000));

  uint64_t capacity = env_u64("HALO_SHM_CAPACITY_BYTES", 1ull << 30);
  auto store = ipc::ContentStore::create("halo." + u64_hex(app_id_), capacity);
  if (!store.ok()) return store.status;
  store_ = std::move(store.value);
  gate_ = std::make_shared<detail::StoreGate>();
  gate_->store = store_.get();

  proactor_eventfd_ = ::eventfd(0, EFD_CLOEXEC | EFD_NONBLOCK);
  if (proactor_eventfd_ < 0) return StatusCode::ErrNoResource;

  // The proactor owns agent attachment; wait for its verdict.
  struct InitGate {
    std::binary_semaphore sem{0};
    StatusCode status = StatusCode::Ok;
  } init_gate;

  proactor_ = std::thread([this, &init_gate] {
    init_gate.status = pr_attach_agents();
    StatusCode st = init_gate.status;
    init_gate.sem.release();
    if (st != StatusCode::Ok) return;
    proactor_thread();
  });
  init_gate.sem.acquire();
  if (init_gate.status != StatusCode::Ok) {
    proactor_.join();
    return init_gate.status;
  }

  pump_ = std::thread([this] { pump_thread(); });
  failsafe_worker_ = std::thread([this] {
    while (true) {
      std::function<void()> job;
      {
        std::unique_lock<std::mutex> lk(failsafe_mu_);
        failsafe_cv_.wait(lk, [this] {
          return stopping_.load() || !failsafe_jobs_.empty();
        });
        if (failsafe_jobs_.empty()) {
          if (stopping_.load()) return;
          continue;
        }
        job = std::move(failsafe_jobs_.front());
        failsafe_jobs_.pop_front();
      }
      job();
    }
  });

  {
    std::lock_guard<std::mutex> g(g_registry_mu);
    registry()[app_id_] = this;
  }
  started_ = true;
  return StatusCode::Ok;
}

ParentContext::~ParentContext() {
  if (!finalized_.load()) finalize();
  if (proactor_.joinable()) proactor_.join();
  if (pump_.joinable()) pump_.join();
  if (failsafe_worker_.joinable()) failsafe_worker_.join();
  if (proactor_eventfd_ >= 0) ::close(proactor_eventfd_);
}

// ---------------------------------------------------------------------------
// Application-side surface
// ---------------------------------------------------------------------------

StatusCode ParentContext::submit(std::shared_ptr<Op> op) {
  {
    std::lock_guard<std::mutex> g(intake_mu_);
    if (finalized_.load() && op->kind != Op::Kind::Finalize)
      return StatusCode::ErrFinalized;
    intake_.push_back(op);
    pump_wake_ = true;
  }
  pump_cv_.notify_all();
  op->done.acquire();
  return op->status;
}

Result<ChildRank> ParentContext::claim(std::string_view func_alias,
                                       FailsafeFn failsafe,
                                       const KernelAttributes* overrides) {
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::Claim;
  op->alias = func_alias;
  op->failsafe = std::move(failsafe);
  if (overrides) op->overrides = *overrides;
  StatusCode st = submit(op);
  if (!is_success(st)) return Result<ChildRank>::failure(st);
  return Result<ChildRank>::success(op->out_rank);
}

Result<ChildRank> ParentContext::create_buffer(ChildRank assoc, bool is_signed,
                                               bool is_float,
                                               uint32_t type_size,
                                               uint64_t vector_size) {
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::CreateBuffer;
  op->assoc = assoc;
  op->is_signed = is_signed;
  op->is_float = is_float;
  op->type_size = type_size;
  op->vector_size = vector_size;
  StatusCode st = submit(op);
  if (!is_success(st)) return Result<ChildRank>::failure(st);
  return Result<ChildRank>::success(op->out_rank);
}

Result<UnifiedBuffer> ParentContext::alloc_mem(uint64_t size) {
  if (size == 0) return Result<UnifiedBuffer>::failure(StatusCode::ErrBadArgument);
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::AllocMem;
  op->alloc_size = size;
  StatusCode st = submit(op);
  if (!is_success(st)) return Result<UnifiedBuffer>::failure(st);
  return Result<UnifiedBuffer>::success(op->out_buffer);
}

StatusCode ParentContext::send(const ComputeObject& payload, ChildRank dst,
                               int32_t tag, MpixComm comm) {
  if (comm.mode == CommMode::Legacy) {
    // Mode demultiplexer: the legacy runtime route is unsupported in v1.
    return StatusCode::ErrBadArgument;
  }
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::Send;
  op->payload = payload;
  op->dst = dst;
  op->tag = tag;
  return submit(op);
}

StatusCode ParentContext::send(std::span<const std::byte> raw,
                               MpixType datatype, ChildRank dst, int32_t tag,
                               MpixComm comm) {
  auto arg = Argument::inline_bytes(datatype, raw);
  if (!arg.ok()) return arg.status;
  ComputeObject obj;
  obj.args.push_back(std::move(arg.value));
  return send(obj, dst, tag, comm);
}

StatusCode ParentContext::send_fwd(const ComputeObject& payload, ChildRank dst,
                                   int32_t tag, uint64_t fwd_app_id,
                                   MpixComm comm) {
  if (comm.mode == CommMode::Legacy) return StatusCode::ErrBadArgument;
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::Send;
  op->payload = payload;
  op->dst = dst;
  op->tag = tag;
  op->fwd_app = fwd_app_id;
  return submit(op);
}

Result<ReceivedObject> ParentContext::recv(ChildRank src, int32_t tag,
                                           RecvOptions opts, MpixComm comm) {
  using R = Result<ReceivedObject>;
  if (comm.mode == CommMode::Legacy) return R::failure(StatusCode::ErrBadArgument);
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::Recv;
  op->src = src;
  op->tag = tag;
  op->timeout_ms = opts.timeout_ms;
  StatusCode st = submit(op);
  if (!is_success(st)) return R::failure(st);
  return R::success(std::move(op->out_received));
}

Result<ReceivedObject> ParentContext::recv_into(std::span<std::byte> out,
                                                ChildRank src, int32_t tag,
                                                RecvOptions opts,
                                                MpixComm comm) {
  auto r = recv(src, tag, opts, comm);
  if (!r.ok()) return r;
  const auto& args = r.value.object().args;
  if (!args.empty()) {
    StatusCode st = r.value.copy_out(args.size() - 1, out);
    if (st != StatusCode::Ok) return Result<ReceivedObject>::failure(st);
  }
  return r;
}

StatusCode ParentContext::free(ChildRank rank) {
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::Free;
  op->dst = rank;
  return submit(op);
}

StatusCode ParentContext::finalize() {
  bool expected = false;
  if (!finalized_.compare_exchange_strong(expected, true))
    return StatusCode::ErrFinalized;
  if (!started_) return StatusCode::ErrFinalized;
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::Finalize;
  {
    std::lock_guard<std::mutex> g(intake_mu_);
    intake_.push_back(op);
    pump_wake_ = true;
  }
  pump_cv_.notify_all();
  op->done.acquire();

  if (proactor_.joinable()) proactor_.join();
  if (pump_.joinable()) pump_.join();
  {
    std::lock_guard<std::mutex> g(failsafe_mu_);
    // wake the worker so it can observe stopping_
  }
  failsafe_cv_.notify_all();
  if (failsafe_worker_.joinable()) failsafe_worker_.join();

  {
    std::lock_guard<std::mutex> g(g_registry_mu);
    registry().erase(app_id_);
  }
  return op->status;
}

Result<std::span<std::byte>> ParentContext::buffer_view(ChildRank buffer) {
  using R = Result<std::span<std::byte>>;
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::BufferView;
  op->dst = buffer;
  StatusCode st = submit(op);
  if (!is_success(st)) return R::failure(st);
  return R::success(op->out_span);
}

DebugStats ParentContext::debug_stats() {
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::Stats;
  submit(op);
  return op->out_stats;
}

bool ParentContext::cr_stateful(ChildRank rank) {
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::Stateful;
  op->dst = rank;
  submit(op);
  return op->out_flag;
}

std::vector<std::string> ParentContext::backend_instances() {
  std::vector<std::string> out;
  // links_ is append-only after initialization and the list of instance ids
  // never changes, so reading the names through an op keeps it simple.
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::Metrics;
  op->instance_index = SIZE_MAX;  // sentinel: list instances
  submit(op);
  std::string text = op->out_text;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    if (nl > pos) out.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

Result<std::string> ParentContext::query_metrics(size_t instance_index) {
  using R = Result<std::string>;
  auto op = std::make_shared<Op>();
  op->kind = Op::Kind::Metrics;
  op->instance_index = instance_index;
  StatusCode st = submit(op);
  if (!is_success(st)) return R::failure(st);
  return R::success(op->out_text);
}

// ---------------------------------------------------------------------------
// Pump thread: intake -> q1, q2 -> completions
// ---------------------------------------------------------------------------

void ParentContext::pump_thread() {
  while (true) {
    {
      std::unique_lock<std::mutex> lk(intake_mu_);
      pump_cv_.wait_for(lk, std::chrono::milliseconds(50),
                        [this] { return pump_wake_; });
      pump_wake_ = false;
    }
    bool moved = true;
    while (moved) {
      moved = false;
      {
        std::lock_guard<std::mutex> g(intake_mu_);
        while (!intake_.empty() && q1_.try_push(intake_.front())) {
          intake_.pop_front();
          moved = true;
        }
      }
      if (moved) wake_proactor();
      std::shared_ptr<Op> done;
      while (q2_.try_pop(done)) {
        bool was_finalize = done->kind == Op::Kind::Finalize;
        done->done.release();
        if (was_finalize) return;
        moved = true;
      }
    }
    if (stopping_.load()) {
      // Drain any completions that raced with shutdown.
      std::shared_ptr<Op> done;
      while (q2_.try_pop(done)) done->done.release();
      return;
    }
  }
}

void ParentContext::wake_proactor() {
  uint64_t one = 1;
  ssize_t n = ::write(proactor_eventfd_, &one, sizeof(one));
  (void)n;
}

// ---------------------------------------------------------------------------
// Proactor thread
// ---------------------------------------------------------------------------

namespace {

std::string resolve_vagent_path() {
  if (const char* p = std::getenv("HALO_VAGENT_PATH")) return p;
  std::error_code ec;
  auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    auto candidate = self.parent_path() / "halo-vagent";
    if (std::filesystem::exists(candidate, ec)) return candidate.string();
  }
  return "halo-vagent";
}

std::string default_kernels_root() {
  if (const char* p = std::getenv("HALO_KERNELS_DIR")) return p;
  std::error_code ec;
  auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (!ec) return (self.parent_path() / "ha").string();
  return "ha";
}

}  // namespace

StatusCode ParentContext::pr_attach_agents() {
  size_t link_idx = 0;
  for (const auto& entry : cfg_.platform_list) {
    for (uint32_t rep = 0; rep < entry.replicas; ++rep, ++link_idx) {
      auto link = std::make_unique<AgentLink>();
      link->instance_id = entry.backend_id + "#" + std::to_string(rep);
      if (!entry.endpoint.empty()) {
        link->endpoint = entry.endpoint;
        if (entry.replicas > 1)
          link->endpoint += "." + std::to_string(rep);
      } else {
        link->endpoint = runtime_dir() + "/halo." + u64_hex(app_id_) + "." +
                         std::to_string(link_idx) + ".sock";
      }

      auto ep = ipc::channel_connect(link->endpoint);
      if (!ep.ok()) {
        // Nothing listening: spawn the agent as a child process.
        std::string kernels = entry.kernels_dir.empty()
                                  ? default_kernels_root() + "/" +
                                        entry.backend_id
                                  : entry.kernels_dir;
        std::string exe = resolve_vagent_path();
        std::string t2 = std::to_string(entry.sim_t2_ns);
        std::string t3 = std::to_string(entry.sim_t3_ns);
        pid_t pid = ::fork();
        if (pid == 0) {
          ::dup2(STDERR_FILENO, STDOUT_FILENO);
          std::vector<const char*> argv = {
              exe.c_str(),           "--backend",
              link->instance_id.c_str(), "--endpoint",
              link->endpoint.c_str(),    "--kernels",
              kernels.c_str(),           "--exit-on-disconnect"};
          if (entry.sim_t2_ns) {
            argv.push_back("--sim-t2-ns");
            argv.push_back(t2.c_str());
          }
          if (entry.sim_t3_ns) {
            argv.push_back("--sim-t3-ns");
            argv.push_back(t3.c_str());
          }
          argv.push_back(nullptr);
          ::execvp(exe.c_str(), const_cast<char* const*>(argv.data()));
          ::_exit(127);
        }
        if (pid < 0) return StatusCode::ErrNoResource;
        link->pid = pid;

        auto give_up = Clock::now() + std::chrono::seconds(5);
        while (Clock::now() < give_up) {
          ep = ipc::channel_connect(link->endpoint);
          if (ep.ok()) break;
          std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        if (!ep.ok()) return StatusCode::ErrNoResource;
      }
      link->ep = std::move(ep.value);

      // Cache the agent's kernel manifests.
      MessageEnvelope q;
      q.msg_type = MsgType::ManifestQuery;
      q.transaction_id = next_txn_++;
      q.app_id = app_id_;
      q.src = rank_id_;
      q.dst = 1000 + static_cast<uint32_t>(link_idx);
      if (link->ep->send(q) != StatusCode::Ok)
        return StatusCode::ErrNoResource;
      req_sent_++;

      bool got = false;
      auto give_up = Clock::now() + std::chrono::seconds(5);
      while (Clock::now() < give_up) {
        auto rsp = link->ep->recv(200);
        if (!rsp.ok()) {
          if (rsp.status == StatusCode::ErrTimeout) continue;
          return StatusCode::ErrNoResource;
        }
        if (rsp.value.msg_type != MsgType::ManifestRsp ||
            rsp.value.transaction_id != q.transaction_id)
          continue;
        rsp_received_++;
        if (rsp.value.body_length > 0) {
          auto body = store_->get(rsp.value.body_handle);
          if (body.ok()) {
            auto manifests = vagent::manifest_list_from_json(std::string_view(
                reinterpret_cast<const char*>(body.value.data()),
                rsp.value.body_length));
            if (manifests.ok()) link->manifests = std::move(manifests.value);
            store_->release(rsp.value.body_handle);
          }
        }
        got = true;
        break;
      }
      if (!got) return StatusCode::ErrNoResource;
      links_.push_back(std::move(link));
    }
  }
  return links_.empty() ? StatusCode::ErrNoResource : StatusCode::Ok;
}

void ParentContext::proactor_thread() {
  while (!stopping_.load()) {
    // Poll timeout: the nearest waiter or control deadline, capped at 100ms.
    auto now = Clock::now();
    int timeout = 100;
    auto consider = [&](Clock::time_point d) {
      auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(d - now)
                    .count();
      timeout = std::min<int>(timeout, std::max<int>(0, static_cast<int>(ms)));
    };
    for (const auto& w : waiters_) consider(w.deadline);
    for (const auto& [txn, op] : pending_control_)
      if (op->has_deadline) consider(op->deadline);

    std::vector<pollfd> pfds;
    pfds.push_back({proactor_eventfd_, POLLIN, 0});
    for (auto& l : links_) pfds.push_back({l->ep->fd(), POLLIN, 0});
    ::poll(pfds.data(), pfds.size(), timeout);

    if (pfds[0].revents & POLLIN) {
      uint64_t drain;
      while (::read(proactor_eventfd_, &drain, sizeof(drain)) > 0) {
      }
    }

    // Queue submissions from the pump.
    std::shared_ptr<Op> op;
    while (q1_.try_pop(op)) pr_handle_op(std::move(op));

    // Cross-context and fail-safe deliveries.
    {
      std::unique_lock<std::mutex> lk(inbox_mu_);
      while (!inbox_.empty()) {
        Inbound ib = std::move(inbox_.front());
        inbox_.pop_front();
        lk.unlock();
        auto arrival = Clock::now();
        MailboxItem item;
        item.object = std::move(ib.object);
        item.timing.t2 = to_seconds(ib.t2_ns);
        item.timing.t3 = to_seconds(ib.t3_ns);
        item.timing.t4 = std::chrono::duration<double>(arrival - ib.submitted)
                             .count();
        item.timing.t1 =
            std::max(0.0, item.timing.t4 - item.timing.t2 - item.timing.t3);
        pr_deliver_local(std::move(item), ChildRank{ib.cr}, ib.tag);
        lk.lock();
      }
    }

    // Agent traffic.
    for (size_t i = 1; i < pfds.size(); ++i) {
      if (!(pfds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      while (true) {
        auto env = links_[i - 1]->ep->recv(0);
        if (!env.ok()) break;
        pr_handle_envelope(i - 1, env.value);
      }
    }

    pr_expire(Clock::now());
  }
}

void ParentContext::pr_complete(std::shared_ptr<Op> op, StatusCode st) {
  if (op->completed) return;
  op->completed = true;
  op->status = st;
  while (!q2_.try_push(op)) std::this_thread::yield();
  {
    std::lock_guard<std::mutex> g(intake_mu_);
    pump_wake_ = true;
  }
  pump_cv_.notify_all();
}

StatusCode ParentContext::pr_send_control(size_t link_idx, MsgType type,
                                          const std::string& body,
                                          uint64_t txn, int32_t tag) {
  MessageEnvelope env;
  env.msg_type = type;
  env.transaction_id = txn;
  env.app_id = app_id_;
  env.src = rank_id_;
  env.dst = 1000 + static_cast<uint32_t>(link_idx);
  env.tag = tag;
  if (!body.empty()) {
    auto h = store_->put(
        std::as_bytes(std::span(body.data(), body.size())));
    if (!h.ok()) return h.status;
    env.body_handle = h.value;
    env.body_length = static_cast<uint32_t>(body.size());
  }
  StatusCode st = links_[link_idx]->ep->send(env);
  if (st == StatusCode::Ok && is_request(type)) req_sent_++;
  return st;
}

// ---------------------------------------------------------------------------
// Operation handling (proactor)
// ---------------------------------------------------------------------------

void ParentContext::pr_handle_op(std::shared_ptr<Op> op) {
  switch (op->kind) {
    case Op::Kind::Claim: {
      auto attrs = config::resolve_alias(
          cfg_, op->alias, op->overrides ? &*op->overrides : nullptr);

      std::vector<size_t> candidates;
      if (attrs.ok()) {
        for (size_t i = 0; i < links_.size(); ++i) {
          for (const auto& m : links_[i]->manifests) {
            if (m.attributes.satisfies(attrs.value)) {
              candidates.push_back(i);
              break;
            }
          }
        }
      }

      if (candidates.empty()) {
        // No matching kernel anywhere: fail-safe mode keeps the claim
        // usable when the host supplied a callback.
        if (!op->failsafe) {
          pr_complete(std::move(op), StatusCode::ErrNoResource);
          return;
        }
        CrRecord cr;
        cr.handle = next_handle_++;
        if (attrs.ok()) {
          cr.attrs = attrs.value;
          cr.sw_fid = attrs.value.sw_fid;
        }
        cr.failsafe = std::move(op->failsafe);
        op->out_rank = ChildRank{cr.handle};
        cr_table_[cr.handle] = std::move(cr);
        pr_complete(std::move(op), StatusCode::Ok);
        return;
      }

      uint32_t repl = 1;
      if (const auto* entry = cfg_.find_alias(op->alias))
        repl = entry->func_repl;
      size_t count = std::min<size_t>(repl, candidates.size());
      auto pick = claim_rr_[attrs.value.sw_fid].recommend(
          std::span<const size_t>(candidates));
      size_t start = pick.value;

      CrRecord cr;
      cr.handle = next_handle_++;
      cr.attrs = attrs.value;
      cr.sw_fid = attrs.value.sw_fid;
      cr.failsafe = std::move(op->failsafe);
      for (size_t i = 0; i < count; ++i)
        cr.replicas.push_back(candidates[(start + i) % candidates.size()]);
      op->out_rank = ChildRank{cr.handle};
      op->claim_cr = cr.handle;

      std::string body =
          std::string("{\"cr\":\"") + u64_hex(cr.handle) +
          "\",\"attributes\":" +
          vagent::attributes_to_json_text(cr.attrs) + "}";
      op->awaiting = static_cast<int>(cr.replicas.size());
      op->deadline = Clock::now() + std::chrono::seconds(5);
      op->has_deadline = true;
      cr_table_[cr.handle] = std::move(cr);

      bool sent_any = false;
      for (size_t link : cr_table_[op->claim_cr].replicas) {
        uint64_t txn = next_txn_++;
        if (pr_send_control(link, MsgType::ClaimReq, body, txn) ==
            StatusCode::Ok) {
          pending_control_[txn] = op;
          sent_any = true;
        } else {
          op->awaiting--;
        }
      }
      if (!sent_any) {
        cr_table_.erase(op->claim_cr);
        pr_complete(std::move(op), StatusCode::ErrNoResource);
      }
      return;
    }

    case Op::Kind::CreateBuffer: {
      uint64_t assoc = op->assoc.handle;
      if (assoc != 0) {
        auto it = cr_table_.find(assoc);
        if (it == cr_table_.end()) {
          pr_complete(std::move(op), StatusCode::ErrBadHandle);
          return;
        }
      }
      if (op->vector_size == 0 ||
          (op->type_size != 1 && op->type_size != 2 && op->type_size != 4 &&
           op->type_size != 8) ||
          (op->is_float && op->type_size < 4)) {
        pr_complete(std::move(op), StatusCode::ErrBadArgument);
        return;
      }
      MpixType kind;
      if (op->is_float) {
        kind = op->type_size == 4 ? MpixType::InternalFloat32
                                  : MpixType::InternalFloat64;
      } else {
        switch (op->type_size) {
          case 1: kind = op->is_signed ? MpixType::InternalInt8 : MpixType::InternalUint8; break;
          case 2: kind = op->is_signed ? MpixType::InternalInt16 : MpixType::InternalUint16; break;
          case 4: kind = op->is_signed ? MpixType::InternalInt32 : MpixType::InternalUint32; break;
          default: kind = op->is_signed ? MpixType::InternalInt64 : MpixType::InternalUint64; break;
        }
      }
      auto h = store_->alloc(static_cast<uint64_t>(op->type_size) *
                             op->vector_size);
      if (!h.ok()) {
        pr_complete(std::move(op), h.status);
        return;
      }
      BufferRecord rec;
      rec.store_handle = h.value;
      rec.kind = kind;
      rec.elem_count = op->vector_size;
      rec.assoc_cr = assoc;
      uint64_t handle = next_handle_++;
      buffer_table_[handle] = rec;
      if (assoc != 0) cr_table_[assoc].stateful = true;
      op->out_rank = ChildRank{handle};

      if (links_.empty()) {
        pr_complete(std::move(op), StatusCode::Ok);
        return;
      }
      std::string body = std::string("{\"buffer\":\"") + u64_hex(handle) +
                         "\",\"store_handle\":\"" + u64_hex(rec.store_handle) +
                         "\",\"kind\":" +
                         std::to_string(static_cast<int>(kind)) +
                         ",\"elem_count\":\"" + u64_hex(rec.elem_count) +
                         "\",\"assoc_cr\":\"" + u64_hex(assoc) + "\"}";
      op->awaiting = 0;
      op->deadline = Clock::now() + std::chrono::seconds(5);
      op->has_deadline = true;
      for (size_t link = 0; link < links_.size(); ++link) {
        uint64_t txn = next_txn_++;
        if (pr_send_control(link, MsgType::BufCreateReq, body, txn) ==
            StatusCode::Ok) {
          pending_control_[txn] = op;
          op->awaiting++;
        }
      }
      if (op->awaiting == 0) pr_complete(std::move(op), StatusCode::Ok);
      return;
    }

    case Op::Kind::AllocMem: {
      auto h = store_->alloc(op->alloc_size);
      if (!h.ok()) {
        pr_complete(std::move(op), h.status);
        return;
      }
      auto off = store_->offset_of(h.value);
      auto view = store_->get(h.value);
      op->out_buffer.store_handle = h.value;
      op->out_buffer.region_id = app_id_;
      op->out_buffer.offset = off.value;
      op->out_buffer.data = view.value;
      unified_.push_back(h.value);
      pr_complete(std::move(op), StatusCode::Ok);
      return;
    }

    case Op::Kind::Send: {
      auto it = cr_table_.find(op->dst.handle);
      if (it == cr_table_.end()) {
        pr_complete(std::move(op), StatusCode::ErrBadHandle);
        return;
      }
      if (op->fwd_app != 0 && op->fwd_app != app_id_) {
        std::lock_guard<std::mutex> g(g_registry_mu);
        if (!registry().contains(op->fwd_app)) {
          pr_complete(std::move(op), StatusCode::ErrBadHandle);
          return;
        }
      }
      CrRecord& cr = it->second;
      ComputeObject object = std::move(op->payload);
      object.app_id = app_id_;
      object.tag = op->tag;
      object.status = StatusCode::Ok;
      if (object.function_id == 0) object.function_id = cr.sw_fid;
      uint64_t deliver = (op->fwd_app == app_id_) ? 0 : op->fwd_app;

      if (cr.replicas.empty()) {
        // Fail-safe mode: the host callback stands in for the kernel.
        FailsafeFn fn = cr.failsafe;
        uint64_t cr_handle = cr.handle;
        int32_t tag = op->tag;
        auto submitted = Clock::now();
        auto job = [this, fn = std::move(fn), object = std::move(object),
                    cr_handle, tag, deliver, submitted]() mutable {
          ComputeObject result;
          auto t3_begin = Clock::now();
          StatusCode st;
          try {
            result = fn(object);
            st = StatusCode::FailsafeExecuted;
          } catch (...) {
            st = StatusCode::ErrKernelFault;
          }
          uint64_t t3_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                               Clock::now() - t3_begin)
                               .count();
          result.status = st;
          result.tag = tag;
          result.app_id = app_id_;
          Inbound ib;
          ib.cr = deliver == 0 ? cr_handle : 0;
          ib.tag = tag;
          ib.object = std::move(result);
          ib.t3_ns = t3_ns;
          ib.submitted = submitted;
          ParentContext* target = this;
          if (deliver != 0) {
            std::lock_guard<std::mutex> g(g_registry_mu);
            auto t = registry().find(deliver);
            if (t == registry().end()) return;  // destination went away
            target = t->second;
          }
          {
            std::lock_guard<std::mutex> g(target->inbox_mu_);
            target->inbox_.push_back(std::move(ib));
          }
          target->wake_proactor();
        };
        {
          std::lock_guard<std::mutex> g(failsafe_mu_);
          failsafe_jobs_.push_back(std::move(job));
        }
        failsafe_cv_.notify_all();
        pr_complete(std::move(op), StatusCode::Ok);
        return;
      }

      size_t link;
      if (cr.replicas.size() > 1 && !cr.stateful) {
        auto pick =
            cr.send_rr.recommend(std::span<const size_t>(cr.replicas));
        link = cr.replicas[pick.value];
      } else {
        link = cr.replicas.front();
      }

      auto bytes = exec_request_encode(cr.handle, object);
      auto h = store_->put(bytes);
      if (!h.ok()) {
        pr_complete(std::move(op), h.status);
        return;
      }
      MessageEnvelope env;
      env.msg_type = MsgType::ExecReq;
      env.transaction_id = next_txn_++;
      env.app_id = app_id_;
      env.src = rank_id_;
      env.dst = 1000 + static_cast<uint32_t>(link);
      env.tag = op->tag;
      env.body_handle = h.value;
      env.body_length = static_cast<uint32_t>(bytes.size());
      if (links_[link]->ep->send(env) != StatusCode::Ok) {
        store_->release(h.value);
        pr_complete(std::move(op), StatusCode::ErrNoResource);
        return;
      }
      req_sent_++;
      PendingExec pe;
      pe.cr = cr.handle;
      pe.tag = op->tag;
      pe.submitted = Clock::now();
      pe.deliver_app = deliver;
      pending_exec_[env.transaction_id] = pe;
      pr_complete(std::move(op), StatusCode::Ok);
      return;
    }

    case Op::Kind::Recv: {
      uint64_t src = op->src.handle;
      auto key = std::make_pair(src, op->tag);
      auto mb = mailbox_.find(key);
      bool known = src == 0 || cr_table_.contains(src);
      if (mb != mailbox_.end() && !mb->second.empty()) {
        MailboxItem item = std::move(mb->second.front());
        mb->second.pop_front();
        if (mb->second.empty()) mailbox_.erase(mb);
        op->out_received.object_ = std::move(item.object);
        op->out_received.timing_ = item.timing;
        op->out_received.gate_ = gate_;
        op->out_received.handles_ = std::move(item.handles);
        pr_complete(std::move(op), StatusCode::Ok);
        return;
      }
      if (!known) {
        pr_complete(std::move(op), StatusCode::ErrBadHandle);
        return;
      }
      int timeout =
          op->timeout_ms < 0 ? default_recv_timeout_ms_ : op->timeout_ms;
      Waiter w;
      w.key = key;
      w.deadline = Clock::now() + std::chrono::milliseconds(timeout);
      w.op = std::move(op);
      waiters_.push_back(std::move(w));
      return;
    }

    case Op::Kind::Free: {
      uint64_t handle = op->dst.handle;
      if (handle == 0) {
        pr_complete(std::move(op), StatusCode::ErrBadHandle);
        return;
      }
      if (auto buf = buffer_table_.find(handle); buf != buffer_table_.end()) {
        store_->release(buf->second.store_handle);
        buffer_table_.erase(buf);
        std::string body = "{\"cr\":\"" + u64_hex(handle) + "\"}";
        op->awaiting = 0;
        op->deadline = Clock::now() + std::chrono::seconds(5);
        op->has_deadline = true;
        for (size_t link = 0; link < links_.size(); ++link) {
          uint64_t txn = next_txn_++;
          if (pr_send_control(link, MsgType::FreeReq, body, txn) ==
              StatusCode::Ok) {
            pending_control_[txn] = op;
            op->awaiting++;
          }
        }
        if (op->awaiting == 0) pr_complete(std::move(op), StatusCode::Ok);
        return;
      }
      auto it = cr_table_.find(handle);
      if (it == cr_table_.end()) {
        pr_complete(std::move(op), StatusCode::ErrBadHandle);
        return;
      }
      // Drop queued results addressed to this CR.
      for (auto mb = mailbox_.begin(); mb != mailbox_.end();) {
        if (mb->first.first == handle) {
          for (auto& item : mb->second)
            for (uint64_t h : item.handles) store_->release(h);
          mb = mailbox_.erase(mb);
        } else {
          ++mb;
        }
      }
      std::vector<size_t> replicas = it->second.replicas;
      cr_table_.erase(it);
      if (replicas.empty()) {
        pr_complete(std::move(op), StatusCode::Ok);
        return;
      }
      std::string body = "{\"cr\":\"" + u64_hex(handle) + "\"}";
      op->awaiting = 0;
      op->deadline = Clock::now() + std::chrono::seconds(5);
      op->has_deadline = true;
      for (size_t link : replicas) {
        uint64_t txn = next_txn_++;
        if (pr_send_control(link, MsgType::FreeReq, body, txn) ==
            StatusCode::Ok) {
          pending_control_[txn] = op;
          op->awaiting++;
        }
      }
      if (op->awaiting == 0) pr_complete(std::move(op), StatusCode::Ok);
      return;
    }

    case Op::Kind::Metrics: {
      if (op->instance_index == SIZE_MAX) {
        std::string text;
        for (const auto& l : links_) text += l->instance_id + "\n";
        op->out_text = std::move(text);
        pr_complete(std::move(op), StatusCode::Ok);
        return;
      }
      if (op->instance_index >= links_.size()) {
        pr_complete(std::move(op), StatusCode::ErrBadArgument);
        return;
      }
      uint64_t txn = next_txn_++;
      op->awaiting = 1;
      op->deadline = Clock::now() + std::chrono::seconds(5);
      op->has_deadline = true;
      if (pr_send_control(op->instance_index, MsgType::ManifestQuery,
                          "{\"what\":\"metrics\"}", txn) != StatusCode::Ok) {
        pr_complete(std::move(op), StatusCode::ErrNoResource);
        return;
      }
      pending_control_[txn] = op;
      return;
    }

    case Op::Kind::BufferView: {
      auto it = buffer_table_.find(op->dst.handle);
      if (it == buffer_table_.end()) {
        pr_complete(std::move(op), StatusCode::ErrBadHandle);
        return;
      }
      auto v = store_->get(it->second.store_handle);
      if (!v.ok()) {
        pr_complete(std::move(op), v.status);
        return;
      }
      op->out_span = v.value;
      pr_complete(std::move(op), StatusCode::Ok);
      return;
    }

    case Op::Kind::Stats: {
      auto s = store_->stats();
      op->out_stats.store_used_bytes = s.used_bytes;
      op->out_stats.store_live_handles = s.live_handles;
      op->out_stats.requests_sent = req_sent_;
      op->out_stats.responses_received = rsp_received_;
      op->out_stats.outstanding_transactions =
          pending_exec_.size() + pending_control_.size();
      op->out_stats.live_crs = cr_table_.size();
      pr_complete(std::move(op), StatusCode::Ok);
      return;
    }

    case Op::Kind::Stateful: {
      auto it = cr_table_.find(op->dst.handle);
      op->out_flag = it != cr_table_.end() && it->second.stateful;
      pr_complete(std::move(op), StatusCode::Ok);
      return;
    }

    case Op::Kind::Finalize:
      pr_finalize(std::move(op));
      return;
  }
}

// ---------------------------------------------------------------------------
// Envelope handling (proactor)
// ---------------------------------------------------------------------------

void ParentContext::pr_handle_envelope(size_t link_idx,
                                       const MessageEnvelope& env) {
  (void)link_idx;
  if (env.app_id != app_id_) return;

  switch (env.msg_type) {
    case MsgType::ExecRsp: {
      rsp_received_++;
      auto pe = pending_exec_.find(env.transaction_id);
      if (pe == pending_exec_.end()) return;

      ExecReply reply;
      reply.status = StatusCode::ErrSerialization;
      if (env.body_length > 0) {
        auto body = store_->get(env.body_handle);
        if (body.ok()) {
          auto decoded = exec_reply_decode(std::span<const std::byte>(
              body.value.data(), env.body_length));
          if (decoded.ok()) reply = std::move(decoded.value);
          store_->release(env.body_handle);
        }
      }
      double t4 = std::chrono::duration<double>(Clock::now() -
                                                pe->second.submitted)
                      .count();
      pr_deliver(env.transaction_id, std::move(reply), t4);
      return;
    }
    case MsgType::ClaimRsp:
    case MsgType::BufCreateRsp:
    case MsgType::FreeRsp:
    case MsgType::ManifestRsp: {
      rsp_received_++;
      auto pc = pending_control_.find(env.transaction_id);
      if (pc == pending_control_.end()) {
        if (env.body_length > 0) store_->release(env.body_handle);
        return;
      }
      std::shared_ptr<Op> op = pc->second;
      pending_control_.erase(pc);

      StatusCode st = StatusCode::Ok;
      if (env.msg_type != MsgType::ManifestRsp) {
        uint32_t code = static_cast<uint32_t>(env.tag);
        st = code <= static_cast<uint32_t>(StatusCode::FailsafeExecuted)
                 ? static_cast<StatusCode>(code)
                 : StatusCode::ErrSerialization;
      } else if (env.body_length > 0) {
        auto body = store_->get(env.body_handle);
        if (body.ok()) {
          op->out_text.assign(
              reinterpret_cast<const char*>(body.value.data()),
              env.body_length);
          store_->release(env.body_handle);
        }
      }

      if (!is_success(st) && op->status == StatusCode::Ok) op->status = st;
      if (--op->awaiting <= 0) {
        StatusCode final_st =
            op->status == StatusCode::Ok ? StatusCode::Ok : op->status;
        if (op->kind == Op::Kind::Claim && final_st != StatusCode::Ok)
          cr_table_.erase(op->claim_cr);
        op->status = StatusCode::Ok;  // pr_complete sets the final value
        pr_complete(std::move(op), final_st);
      }
      return;
    }
    default:
      return;
  }
}

void ParentContext::pr_deliver(uint64_t txn, ExecReply reply,
                               double t4_seconds) {
  auto pe = pending_exec_.find(txn);
  if (pe == pending_exec_.end()) return;
  PendingExec info = pe->second;
  pending_exec_.erase(pe);

  MailboxItem item;
  item.object = std::move(reply.object);
  item.object.status = reply.status;
  item.handles = std::move(reply.out_handles);
  item.timing.t2 = to_seconds(reply.t2_ns);
  item.timing.t3 = to_seconds(reply.t3_ns);
  item.timing.t4 = t4_seconds;
  item.timing.t1 = std::max(0.0, t4_seconds - item.timing.t2 - item.timing.t3);

  if (info.deliver_app == 0) {
    pr_deliver_local(std::move(item), ChildRank{info.cr}, info.tag);
    return;
  }

  // Forwarded result: materialize external payloads inline so the receiving
  // rank never touches this context's store, then hand the item over.
  ComputeObject packed;
  packed.function_id = item.object.function_id;
  packed.app_id = item.object.app_id;
  packed.tag = item.object.tag;
  packed.status = item.object.status;
  for (const auto& a : item.object.args) {
    if (a.storage() == ArgStorage::External) {
      auto v = store_->view(a.external_ref().offset, a.external_ref().length);
      if (v.ok()) {
        auto inl = Argument::inline_bytes(
            a.kind(), std::span<const std::byte>(v.value));
        ipc::CopyCounter::add(v.value.size());
        if (inl.ok()) packed.args.push_back(std::move(inl.value));
      }
    } else {
      packed.args.push_back(a);
    }
  }
  for (uint64_t h : item.handles) store_->release(h);

  Inbound ib;
  ib.cr = 0;
  ib.tag = info.tag;
  ib.object = std::move(packed);
  ib.t2_ns = reply.t2_ns;
  ib.t3_ns = reply.t3_ns;
  ib.submitted = info.submitted;
  {
    std::lock_guard<std::mutex> g(g_registry_mu);
    auto t = registry().find(info.deliver_app);
    if (t == registry().end()) return;
    {
      std::lock_guard<std::mutex> g2(t->second->inbox_mu_);
      t->second->inbox_.push_back(std::move(ib));
    }
    t->second->wake_proactor();
  }
}

void ParentContext::pr_deliver_local(MailboxItem item, ChildRank cr,
                                     int32_t tag) {
  auto key = std::make_pair(cr.handle, tag);
  for (size_t i = 0; i < waiters_.size(); ++i) {
    if (waiters_[i].key != key) continue;
    std::shared_ptr<Op> op = std::move(waiters_[i].op);
    waiters_.erase(waiters_.begin() + static_cast<long>(i));
    op->out_received.object_ = std::move(item.object);
    op->out_received.timing_ = item.timing;
    op->out_received.gate_ = gate_;
    op->out_received.handles_ = std::move(item.handles);
    pr_complete(std::move(op), StatusCode::Ok);
    return;
  }
  mailbox_[key].push_back(std::move(item));
}

void ParentContext::pr_expire(Clock::time_point now) {
  for (size_t i = 0; i < waiters_.size();) {
    if (waiters_[i].deadline <= now) {
      std::shared_ptr<Op> op = std::move(waiters_[i].op);
      waiters_.erase(waiters_.begin() + static_cast<long>(i));
      pr_complete(std::move(op), StatusCode::ErrTimeout);
    } else {
      ++i;
    }
  }
  for (auto it = pending_control_.begin(); it != pending_control_.end();) {
    std::shared_ptr<Op> op = it->second;
    if (op->has_deadline && op->deadline <= now) {
      // Remove every transaction that still points at this op so a straggler
      // response cannot touch it again.
      for (auto jt = pending_control_.begin(); jt != pending_control_.end();) {
        if (jt->second == op && jt != it)
          jt = pending_control_.erase(jt);
        else
          ++jt;
      }
      it = pending_control_.erase(it);
      if (op->kind == Op::Kind::Claim) cr_table_.erase(op->claim_cr);
      pr_complete(std::move(op), StatusCode::ErrTimeout);
      it = pending_control_.begin();  // iterators invalidated by the sweep
    } else {
      ++it;
    }
  }
}

// ---------------------------------------------------------------------------
// Finalize (proactor)
// ---------------------------------------------------------------------------

void ParentContext::pr_finalize(std::shared_ptr<Op> op) {
  // Drain in-flight invocations so byte accounting can settle.
  auto grace = Clock::now() + std::chrono::seconds(5);
  while (!pending_exec_.empty() && Clock::now() < grace) {
    std::vector<pollfd> pfds;
    for (auto& l : links_) pfds.push_back({l->ep->fd(), POLLIN, 0});
    if (pfds.empty()) break;
    ::poll(pfds.data(), pfds.size(), 50);
    for (size_t i = 0; i < pfds.size(); ++i) {
      if (!(pfds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      while (true) {
        auto env = links_[i]->ep->recv(0);
        if (!env.ok()) break;
        pr_handle_envelope(i, env.value);
      }
    }
  }

  // Everything still parked gets the finalized error.
  for (auto& w : waiters_) pr_complete(std::move(w.op), StatusCode::ErrFinalized);
  waiters_.clear();
  for (auto& [txn, pending] : pending_control_)
    pr_complete(std::move(pending), StatusCode::ErrFinalized);
  pending_control_.clear();

  // Release every allocation this context still owns.
  for (auto& [key, items] : mailbox_)
    for (auto& item : items)
      for (uint64_t h : item.handles) store_->release(h);
  mailbox_.clear();
  for (auto& [handle, rec] : buffer_table_) store_->release(rec.store_handle);
  buffer_table_.clear();
  for (uint64_t h : unified_) store_->release(h);
  unified_.clear();
  cr_table_.clear();

  auto stats = store_->stats();
  finalize_report_.leaked_bytes = stats.used_bytes;
  finalize_report_.leaked_handles = stats.live_handles;
  finalize_report_.transactions_paired =
      pending_exec_.empty() && req_sent_ == rsp_received_;

  // Stop owned agents; external endpoints just close.
  for (auto& l : links_) {
    if (l->pid != 0) {
      MessageEnvelope bye;
      bye.msg_type = MsgType::Shutdown;
      bye.transaction_id = next_txn_++;
      bye.app_id = app_id_;
      bye.src = rank_id_;
      l->ep->send(bye);
    }
  }
  for (auto& l : links_) {
    if (l->pid == 0) continue;
    auto give_up = Clock::now() + std::chrono::seconds(3);
    while (Clock::now() < give_up) {
      int status = 0;
      pid_t r = ::waitpid(l->pid, &status, WNOHANG);
      if (r == l->pid) {
        l->pid = 0;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (l->pid != 0) {
      ::kill(l->pid, SIGKILL);
      ::waitpid(l->pid, nullptr, 0);
    }
  }
  links_.clear();

  {
    std::lock_guard<std::mutex> g(gate_->mu);
    gate_->store = nullptr;
  }
  store_.reset();

  stopping_.store(true);
  pr_complete(std::move(op), StatusCode::Ok);
}

}  // namespace halo::runtime
