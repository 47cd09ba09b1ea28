// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/vagent/agent.hpp"

#include <poll.h>

#include <cstdlib>

#include <json.hpp>

namespace halo::vagent {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

uint64_t hex_to_u64(const json& j) {
  if (!j.is_string()) return 0;
  return strtoull(j.get<std::string>().c_str(), nullptr, 16);
}

std::string u64_to_hex(uint64_t v) {
  char buf[24];
  snprintf(buf, sizeof(buf), "%llX", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

struct VirtAgent::Connection {
  std::unique_ptr<ipc::Endpoint> ep;
  std::mutex send_mu;

  StatusCode send(const MessageEnvelope& e) {
    std::lock_guard<std::mutex> g(send_mu);
    return ep->send(e);
  }
};

struct VirtAgent::WorkItem {
  MessageEnvelope env;
  std::shared_ptr<Connection> conn;
  ipc::ContentStore* store = nullptr;
  std::vector<std::byte> control_body;  // small JSON bodies, copied out
  ExecRequest exec;
  StatusCode decode_status = StatusCode::Ok;
  TransactionChain chain;
  bool poison = false;
};

VirtAgent::VirtAgent(Options opts)
    : opts_(std::move(opts)),
      device_(DeviceManager::Options{opts_.sim_t2_ns, opts_.sim_t3_ns}) {}

VirtAgent::~VirtAgent() { stop(); }

StatusCode VirtAgent::start() {
  auto listener = ipc::Listener::bind(opts_.endpoint);
  if (!listener.ok()) return listener.status;
  listener_ = std::move(listener.value);

  for (const auto& dir : opts_.kernel_dirs) repo_.register_directory(dir);

  running_.store(true);
  stopping_.store(false);
  t_network_ = std::thread([this] { network_stage(); });
  t_service_ = std::thread([this] { service_stage(); });
  t_device_ = std::thread([this] { device_stage(); });
  return StatusCode::Ok;
}

void VirtAgent::stop() {
  stopping_.store(true);
  wait();
}

void VirtAgent::wait() {
  if (t_network_.joinable()) t_network_.join();
  if (t_service_.joinable()) t_service_.join();
  if (t_device_.joinable()) t_device_.join();
  running_.store(false);
}

AgentCounters VirtAgent::counters() const {
  std::lock_guard<std::mutex> g(stats_mu_);
  return counters_;
}

std::vector<TransactionChain> VirtAgent::chains() const {
  std::lock_guard<std::mutex> g(stats_mu_);
  std::vector<TransactionChain> out;
  out.reserve(chains_.size());
  for (const auto& [id, c] : chains_) out.push_back(c);
  return out;
}

ipc::ContentStore* VirtAgent::attachment(uint64_t app_id) {
  auto it = attachments_.find(app_id);
  if (it != attachments_.end()) return it->second.get();
  auto store = ipc::ContentStore::attach("halo." + u64_to_hex(app_id));
  if (!store.ok()) return nullptr;
  auto* ptr = store.value.get();
  attachments_[app_id] = std::move(store.value);
  return ptr;
}

void VirtAgent::push_q12(std::unique_ptr<WorkItem> item) {
  while (!q12_.try_push(std::move(item))) std::this_thread::yield();
  sem12_.release();
}

void VirtAgent::push_q23(std::unique_ptr<WorkItem> item) {
  while (!q23_.try_push(std::move(item))) std::this_thread::yield();
  sem23_.release();
}

// ---------------------------------------------------------------------------
// Stage 1: network manager
// ---------------------------------------------------------------------------

void VirtAgent::network_stage() {
  bool had_connection = false;
  bool poison_sent = false;

  auto send_poison = [&] {
    if (poison_sent) return;
    auto p = std::make_unique<WorkItem>();
    p->poison = true;
    push_q12(std::move(p));
    poison_sent = true;
  };

  while (true) {
    if (stopping_.load()) {
      send_poison();
      break;
    }
    if (opts_.exit_on_disconnect && had_connection && connections_.empty()) {
      stopping_.store(true);
      continue;
    }

    std::vector<pollfd> pfds;
    pfds.push_back({listener_->fd(), POLLIN, 0});
    for (auto& c : connections_) pfds.push_back({c->ep->fd(), POLLIN, 0});
    int rc = ::poll(pfds.data(), pfds.size(), 20);
    if (rc < 0 && errno != EINTR) break;
    if (rc <= 0) continue;

    if (pfds[0].revents & POLLIN) {
      auto ep = listener_->accept(0);
      if (ep.ok()) {
        auto conn = std::make_shared<Connection>();
        conn->ep = std::move(ep.value);
        connections_.push_back(std::move(conn));
        had_connection = true;
      }
    }

    for (size_t i = 1; i < pfds.size(); ++i) {
      if (!(pfds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      auto conn = connections_[i - 1];
      auto env = conn->ep->recv(0);
      auto now = Clock::now();
      if (!env.ok()) {
        if (env.status == StatusCode::ErrSerialization) {
          std::lock_guard<std::mutex> g(stats_mu_);
          counters_.dropped_frames++;
        } else if (conn->ep->closed() || env.status != StatusCode::ErrTimeout) {
          connections_.erase(connections_.begin() +
                             static_cast<long>(i - 1));
          break;  // pollfd indices are stale now; re-poll
        }
        continue;
      }

      if (env.value.msg_type == MsgType::Shutdown) {
        stopping_.store(true);
        continue;
      }

      auto item = std::make_unique<WorkItem>();
      item->env = env.value;
      item->conn = conn;
      item->chain.transaction_id = env.value.transaction_id;
      item->chain.msg_type = env.value.msg_type;
      item->chain.received = now;
      item->store = attachment(env.value.app_id);

      // Deserialize the body into object form, then give the body slot back.
      if (env.value.body_length > 0 && item->store) {
        auto body = item->store->get(env.value.body_handle);
        if (!body.ok()) {
          item->decode_status = StatusCode::ErrBadHandle;
        } else {
          std::span<const std::byte> bytes(body.value.data(),
                                           env.value.body_length);
          if (env.value.msg_type == MsgType::ExecReq) {
            auto req = exec_request_decode(bytes);
            if (req.ok())
              item->exec = std::move(req.value);
            else
              item->decode_status = req.status;
          } else {
            item->control_body.assign(bytes.begin(), bytes.end());
          }
          item->store->release(env.value.body_handle);
        }
      } else if (env.value.body_length > 0 && !item->store) {
        item->decode_status = StatusCode::ErrNoResource;
      }
      item->chain.decoded = Clock::now();

      if (is_request(env.value.msg_type)) {
        std::lock_guard<std::mutex> g(stats_mu_);
        counters_.requests_received++;
      }
      push_q12(std::move(item));
    }
  }
}

// ---------------------------------------------------------------------------
// Replies and chain bookkeeping
// ---------------------------------------------------------------------------

void VirtAgent::reply(WorkItem& item, MsgType type, StatusCode status,
                      std::span<const std::byte> body) {
  MessageEnvelope rsp;
  rsp.msg_type = type;
  rsp.transaction_id = item.env.transaction_id;
  rsp.app_id = item.env.app_id;
  rsp.src = item.env.dst;
  rsp.dst = item.env.src;
  rsp.tag = item.env.tag;

  if (type != MsgType::ExecRsp) rsp.tag = static_cast<int32_t>(status);

  if (!body.empty() && item.store) {
    auto h = item.store->put(body);
    if (h.ok()) {
      rsp.body_handle = h.value;
      rsp.body_length = static_cast<uint32_t>(body.size());
    }
  }
  item.conn->send(rsp);
  item.chain.replied = Clock::now();
  std::lock_guard<std::mutex> g(stats_mu_);
  counters_.responses_sent++;
}

void VirtAgent::finish_chain(WorkItem& item, bool short_circuit) {
  if (short_circuit) item.chain.executed = item.chain.serviced;
  item.chain.completed = true;
  std::lock_guard<std::mutex> g(stats_mu_);
  if (chains_.size() > 65536) chains_.erase(chains_.begin());
  chains_[item.chain.transaction_id] = item.chain;
}

std::string VirtAgent::metrics_json() const {
  std::lock_guard<std::mutex> g(stats_mu_);
  json j{{"backend", opts_.backend_id},
         {"exec_invocations", counters_.exec_invocations},
         {"requests_received", counters_.requests_received},
         {"responses_sent", counters_.responses_sent},
         {"manifest_queries", counters_.manifest_queries},
         {"dropped_frames", counters_.dropped_frames},
         {"kernels", repo_.size()}};
  return j.dump();
}

// ---------------------------------------------------------------------------
// Stage 2: system services
// ---------------------------------------------------------------------------

void VirtAgent::service_stage() {
  while (true) {
    sem12_.acquire();
    std::unique_ptr<WorkItem> item;
    if (!q12_.try_pop(item)) continue;
    if (item->poison) {
      push_q23(std::move(item));
      break;
    }
    item->chain.serviced = Clock::now();

    if (item->env.msg_type == MsgType::ManifestQuery) {
      {
        std::lock_guard<std::mutex> g(stats_mu_);
        counters_.manifest_queries++;
      }
      std::string what = "manifest";
      if (!item->control_body.empty()) {
        json q = json::parse(item->control_body, nullptr, false);
        if (q.is_object() && q.contains("what") && q.at("what").is_string())
          what = q.at("what").get<std::string>();
      }
      std::string text = what == "metrics"
                             ? metrics_json()
                             : manifest_list_to_json(repo_.manifests());
      reply(*item, MsgType::ManifestRsp, StatusCode::Ok,
            std::as_bytes(std::span(text.data(), text.size())));
      finish_chain(*item, /*short_circuit=*/true);
      continue;
    }

    // Everything else involves device-side state and flows to stage 3.
    push_q23(std::move(item));
  }
}

// ---------------------------------------------------------------------------
// Stage 3: device services
// ---------------------------------------------------------------------------

void VirtAgent::device_stage() {
  while (true) {
    sem23_.acquire();
    std::unique_ptr<WorkItem> item;
    if (!q23_.try_pop(item)) continue;
    if (item->poison) break;

    switch (item->env.msg_type) {
      case MsgType::ClaimReq: {
        StatusCode st = item->decode_status;
        if (st == StatusCode::Ok) {
          json q = json::parse(item->control_body, nullptr, false);
          if (!q.is_object() || !q.contains("cr") ||
              !q.contains("attributes")) {
            st = StatusCode::ErrSerialization;
          } else {
            auto attrs = attributes_from_json_text(q.at("attributes").dump());
            if (!attrs.ok()) {
              st = attrs.status;
            } else {
              auto found = repo_.lookup(attrs.value);
              if (found.ok())
                cr_bindings_[hex_to_u64(q.at("cr"))] = found.value;
              st = found.status;
            }
          }
        }
        item->chain.executed = Clock::now();
        reply(*item, MsgType::ClaimRsp, st, {});
        finish_chain(*item, false);
        break;
      }
      case MsgType::BufCreateReq: {
        StatusCode st = item->decode_status;
        if (st == StatusCode::Ok) {
          json q = json::parse(item->control_body, nullptr, false);
          if (!q.is_object() || !q.contains("buffer") ||
              !q.contains("store_handle")) {
            st = StatusCode::ErrSerialization;
          } else {
            DeviceManager::BufferRecord rec;
            rec.store_handle = hex_to_u64(q.at("store_handle"));
            rec.kind = static_cast<MpixType>(q.value("kind", 20));
            rec.elem_count = hex_to_u64(q.value("elem_count", "0"));
            device_.register_buffer(hex_to_u64(q.at("buffer")), rec);
          }
        }
        item->chain.executed = Clock::now();
        reply(*item, MsgType::BufCreateRsp, st, {});
        finish_chain(*item, false);
        break;
      }
      case MsgType::FreeReq: {
        StatusCode st = item->decode_status;
        if (st == StatusCode::Ok) {
          json q = json::parse(item->control_body, nullptr, false);
          uint64_t cr = q.is_object() ? hex_to_u64(q.value("cr", "0")) : 0;
          bool erased = cr_bindings_.erase(cr) > 0 || device_.forget_buffer(cr);
          st = erased ? StatusCode::Ok : StatusCode::ErrBadHandle;
        }
        item->chain.executed = Clock::now();
        reply(*item, MsgType::FreeRsp, st, {});
        finish_chain(*item, false);
        break;
      }
      case MsgType::ExecReq: {
        ExecReply body;
        body.cr = item->exec.cr;
        if (item->decode_status != StatusCode::Ok) {
          body.status = item->decode_status;
        } else if (!item->store) {
          body.status = StatusCode::ErrNoResource;
        } else {
          auto bind = cr_bindings_.find(item->exec.cr);
          const LoadedKernel* kernel = nullptr;
          if (bind != cr_bindings_.end()) {
            kernel = bind->second;
          } else {
            KernelAttributes attrs;
            attrs.sw_fid = item->exec.object.function_id;
            auto found = repo_.lookup(attrs);
            if (found.ok()) kernel = found.value;
          }
          if (!kernel) {
            body.status = StatusCode::ErrBadHandle;
          } else {
            auto outcome =
                device_.execute(*kernel, item->exec.object, *item->store);
            body.status = outcome.status;
            body.t2_ns = outcome.t2_ns;
            body.t3_ns = outcome.t3_ns;
            body.out_handles = std::move(outcome.out_handles);
            body.object = std::move(outcome.result);
            if (outcome.invoked) {
              std::lock_guard<std::mutex> g(stats_mu_);
              counters_.exec_invocations++;
            }
          }
        }
        item->chain.executed = Clock::now();
        auto bytes = exec_reply_encode(body);
        reply(*item, MsgType::ExecRsp, body.status, bytes);
        finish_chain(*item, false);
        break;
      }
      default: {
        // Unpaired or unexpected types are dropped with an error reply when
        // a response type exists.
        item->chain.executed = Clock::now();
        if (is_request(item->env.msg_type)) {
          reply(*item, response_for(item->env.msg_type),
                StatusCode::ErrBadArgument, {});
        }
        finish_chain(*item, false);
        break;
      }
    }
  }
}

}  // namespace halo::vagent
