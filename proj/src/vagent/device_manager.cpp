// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/vagent/device_manager.hpp"

#include <chrono>
#include <cstring>
#include <thread>

namespace halo::vagent {

namespace {

using Clock = std::chrono::steady_clock;

uint64_t ns_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count();
}

void inject_latency(uint64_t ns) {
  if (ns == 0) return;
  auto until = Clock::now() + std::chrono::nanoseconds(ns);
  if (ns >= 200'000) {
    std::this_thread::sleep_until(until);
  } else {
    while (Clock::now() < until) {
    }
  }
}

bool traits_compatible(MpixType a, MpixType b) {
  auto ta = mpixtype_traits(a);
  auto tb = mpixtype_traits(b);
  if (!ta.ok() || !tb.ok()) return false;
  return ta.value.is_float == tb.value.is_float &&
         ta.value.is_signed == tb.value.is_signed &&
         ta.value.element_size == tb.value.element_size;
}

// Emission context handed to kernels through the C ABI.
struct EmitCtx {
  ipc::ContentStore* store = nullptr;
  uint64_t region_id = 0;
  std::vector<uint64_t> handles;
  std::vector<Argument> args;
  bool failed = false;
};

extern "C" void* emit_trampoline(halo_kern_ctx* raw, uint8_t is_float,
                                 uint8_t is_signed, uint32_t elem_size,
                                 uint64_t elem_count) {
  auto* ctx = reinterpret_cast<EmitCtx*>(raw);
  MpixType kind;
  if (is_float) {
    kind = elem_size == 4 ? MpixType::Float32 : MpixType::Float64;
  } else {
    switch (elem_size) {
      case 1: kind = is_signed ? MpixType::Int8 : MpixType::Uint8; break;
      case 2: kind = is_signed ? MpixType::Int16 : MpixType::Uint16; break;
      case 4: kind = is_signed ? MpixType::Int32 : MpixType::Uint32; break;
      default: kind = is_signed ? MpixType::Int64 : MpixType::Uint64; break;
    }
  }
  uint64_t bytes = elem_count * elem_size;
  auto h = ctx->store->alloc(bytes);
  if (!h.ok()) {
    ctx->failed = true;
    return nullptr;
  }
  auto off = ctx->store->offset_of(h.value);
  auto view = ctx->store->get(h.value);
  auto arg = Argument::external(
      kind, ExternalRef{ctx->region_id, off.value, bytes});
  if (!off.ok() || !view.ok() || !arg.ok()) {
    ctx->store->release(h.value);
    ctx->failed = true;
    return nullptr;
  }
  ctx->handles.push_back(h.value);
  ctx->args.push_back(std::move(arg.value));
  return view.value.data();
}

}  // namespace

ExecOutcome DeviceManager::execute(const LoadedKernel& kernel,
                                   const ComputeObject& request,
                                   ipc::ContentStore& store) {
  ExecOutcome out;

  // Signature gate: argument count and element traits must match the
  // manifest before anything runs.
  const auto& sig = kernel.manifest.signature;
  if (!sig.empty() || !request.args.empty()) {
    if (request.args.size() != sig.size()) {
      out.status = StatusCode::ErrBadArgument;
      return out;
    }
    for (size_t i = 0; i < sig.size(); ++i) {
      if (!traits_compatible(request.args[i].kind(), sig[i])) {
        out.status = StatusCode::ErrBadArgument;
        return out;
      }
    }
  }

  // Stage inputs into the backend's working memory. Inline and external
  // payloads are copied into the arena (the t2 offload transfer); internal
  // buffers stay in place and may be mutated by the kernel.
  auto t2_begin = Clock::now();
  std::vector<halo_kern_arg> kargs(request.args.size());
  uint64_t arena_need = 0;
  for (const auto& a : request.args)
    if (a.storage() != ArgStorage::Internal) arena_need += (a.byte_length() + 63) & ~63ull;
  if (arena_.size() < arena_need) arena_.resize(arena_need);

  uint64_t arena_off = 0;
  for (size_t i = 0; i < request.args.size(); ++i) {
    const Argument& a = request.args[i];
    halo_kern_arg& k = kargs[i];
    k.is_float = a.is_float();
    k.is_signed = a.is_signed();
    k.elem_size = a.element_size();
    k.elem_count = a.element_count();
    k.mut = nullptr;

    switch (a.storage()) {
      case ArgStorage::Inline: {
        std::byte* dst = arena_.data() + arena_off;
        std::memcpy(dst, a.inline_payload().data(), a.byte_length());
        arena_off += (a.byte_length() + 63) & ~63ull;
        k.data = dst;
        break;
      }
      case ArgStorage::External: {
        const auto& ref = a.external_ref();
        auto v = store.view(ref.offset, ref.length);
        if (!v.ok()) {
          out.status = StatusCode::ErrBadArgument;
          return out;
        }
        std::byte* dst = arena_.data() + arena_off;
        std::memcpy(dst, v.value.data(), ref.length);
        arena_off += (ref.length + 63) & ~63ull;
        k.data = dst;
        break;
      }
      case ArgStorage::Internal: {
        auto it = buffers_.find(a.internal_handle());
        if (it == buffers_.end()) {
          out.status = StatusCode::ErrBadHandle;
          return out;
        }
        if (it->second.elem_count != a.element_count() ||
            !traits_compatible(it->second.kind, a.kind())) {
          out.status = StatusCode::ErrBadArgument;
          return out;
        }
        auto v = store.get(it->second.store_handle);
        if (!v.ok()) {
          out.status = StatusCode::ErrBadHandle;
          return out;
        }
        k.data = v.value.data();
        k.mut = v.value.data();
        break;
      }
    }
  }
  inject_latency(opts_.sim_t2_ns);
  auto t2_end = Clock::now();
  out.t2_ns = ns_between(t2_begin, t2_end);

  // Invoke.
  EmitCtx emit_ctx;
  emit_ctx.store = &store;
  emit_ctx.region_id = request.app_id;
  halo_kern_env env{reinterpret_cast<halo_kern_ctx*>(&emit_ctx),
                    emit_trampoline};

  out.invoked = true;
  int32_t rc = 2;
  auto t3_begin = Clock::now();
  try {
    rc = kernel.entry(&env, kargs.data(),
                      static_cast<uint32_t>(kargs.size()));
  } catch (...) {
    rc = 2;
  }
  inject_latency(opts_.sim_t3_ns);
  auto t3_end = Clock::now();
  out.t3_ns = ns_between(t3_begin, t3_end);

  if (rc != HALO_KERN_OK || emit_ctx.failed) {
    for (uint64_t h : emit_ctx.handles) store.release(h);
    out.status = (rc == HALO_KERN_BAD_ARGS && !emit_ctx.failed)
                     ? StatusCode::ErrBadArgument
                     : StatusCode::ErrKernelFault;
    if (rc == HALO_KERN_BAD_ARGS) out.invoked = false;
    return out;
  }

  out.result.function_id = request.function_id;
  out.result.app_id = request.app_id;
  out.result.tag = request.tag;
  out.result.status = StatusCode::Ok;
  out.result.args = std::move(emit_ctx.args);
  out.out_handles = std::move(emit_ctx.handles);
  out.status = StatusCode::Ok;
  return out;
}

}  // namespace halo::vagent
