// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/wire.hpp"

#include <cstring>

#include "halo/ipc/copy_counter.hpp"

namespace halo {

namespace {

constexpr size_t kObjectHeaderSize = 24;
constexpr size_t kArgHeaderSize = 1 + 8;  // kind octet + u64 length

constexpr uint8_t kStorageShift = 6;
constexpr uint8_t kTypeMask = 0x3F;

}  // namespace

std::vector<std::byte> compute_object_encode(const ComputeObject& o) {
  std::vector<std::byte> out;
  out.reserve(kObjectHeaderSize + o.args.size() * 32);
  wire::put<uint64_t>(out, o.function_id);
  wire::put<uint64_t>(out, o.app_id);
  wire::put<int32_t>(out, o.tag);
  wire::put<uint8_t>(out, static_cast<uint8_t>(o.status));
  wire::put<uint8_t>(out, 0);
  wire::put<uint16_t>(out, static_cast<uint16_t>(o.args.size()));

  for (const Argument& a : o.args) {
    uint8_t kind = static_cast<uint8_t>(a.kind()) & kTypeMask;
    kind |= static_cast<uint8_t>(a.storage()) << kStorageShift;
    wire::put<uint8_t>(out, kind);
    switch (a.storage()) {
      case ArgStorage::Inline: {
        auto p = a.inline_payload();
        wire::put<uint64_t>(out, p.size());
        out.insert(out.end(), p.begin(), p.end());
        ipc::CopyCounter::add(p.size());
        break;
      }
      case ArgStorage::External: {
        wire::put<uint64_t>(out, 24);
        wire::put<uint64_t>(out, a.external_ref().region_id);
        wire::put<uint64_t>(out, a.external_ref().offset);
        wire::put<uint64_t>(out, a.external_ref().length);
        break;
      }
      case ArgStorage::Internal: {
        wire::put<uint64_t>(out, 16);
        wire::put<uint64_t>(out, a.internal_handle());
        wire::put<uint64_t>(out, a.element_count());
        break;
      }
    }
  }
  return out;
}

Result<ComputeObject> compute_object_decode(std::span<const std::byte> in) {
  using R = Result<ComputeObject>;
  if (in.size() < kObjectHeaderSize) return R::failure(StatusCode::ErrSerialization);

  ComputeObject o;
  o.function_id = wire::get<uint64_t>(in, 0);
  o.app_id = wire::get<uint64_t>(in, 8);
  o.tag = wire::get<int32_t>(in, 16);
  uint8_t st = wire::get<uint8_t>(in, 20);
  if (st > static_cast<uint8_t>(StatusCode::FailsafeExecuted))
    return R::failure(StatusCode::ErrSerialization);
  o.status = static_cast<StatusCode>(st);
  uint16_t argc = wire::get<uint16_t>(in, 22);

  size_t off = kObjectHeaderSize;
  o.args.reserve(argc);
  for (uint16_t i = 0; i < argc; ++i) {
    if (in.size() - off < kArgHeaderSize)
      return R::failure(StatusCode::ErrSerialization);
    uint8_t kind_octet = wire::get<uint8_t>(in, off);
    uint64_t len = wire::get<uint64_t>(in, off + 1);
    off += kArgHeaderSize;
    if (in.size() - off < len) return R::failure(StatusCode::ErrSerialization);

    auto type = static_cast<MpixType>(kind_octet & kTypeMask);
    auto storage = static_cast<ArgStorage>(kind_octet >> kStorageShift);
    std::span<const std::byte> payload = in.subspan(off, len);
    off += len;

    Result<Argument> arg = Result<Argument>::failure(StatusCode::ErrSerialization);
    switch (storage) {
      case ArgStorage::Inline:
        arg = Argument::inline_bytes(type, payload);
        ipc::CopyCounter::add(payload.size());
        break;
      case ArgStorage::External: {
        if (len != 24) return R::failure(StatusCode::ErrSerialization);
        ExternalRef ref{wire::get<uint64_t>(payload, 0),
                        wire::get<uint64_t>(payload, 8),
                        wire::get<uint64_t>(payload, 16)};
        arg = Argument::external(type, ref);
        break;
      }
      case ArgStorage::Internal: {
        if (len != 16) return R::failure(StatusCode::ErrSerialization);
        arg = Argument::internal(type, wire::get<uint64_t>(payload, 0),
                                 wire::get<uint64_t>(payload, 8));
        break;
      }
      default:
        return R::failure(StatusCode::ErrSerialization);
    }
    if (!arg.ok()) return R::failure(StatusCode::ErrSerialization);
    o.args.push_back(std::move(arg.value));
  }
  if (off != in.size()) return R::failure(StatusCode::ErrSerialization);
  return R::success(std::move(o));
}

uint64_t inline_payload_bytes(const ComputeObject& o) {
  uint64_t n = 0;
  for (const auto& a : o.args)
    if (a.storage() == ArgStorage::Inline) n += a.inline_payload().size();
  return n;
}

bool is_request(MsgType t) {
  switch (t) {
    case MsgType::ClaimReq:
    case MsgType::ExecReq:
    case MsgType::BufCreateReq:
    case MsgType::FreeReq:
    case MsgType::ManifestQuery:
      return true;
    default:
      return false;
  }
}

MsgType response_for(MsgType req) {
  switch (req) {
    case MsgType::ClaimReq: return MsgType::ClaimRsp;
    case MsgType::ExecReq: return MsgType::ExecRsp;
    case MsgType::BufCreateReq: return MsgType::BufCreateRsp;
    case MsgType::FreeReq: return MsgType::FreeRsp;
    case MsgType::ManifestQuery: return MsgType::ManifestRsp;
    default: return MsgType::Shutdown;
  }
}

std::vector<std::byte> exec_request_encode(uint64_t cr,
                                           const ComputeObject& object) {
  std::vector<std::byte> out;
  wire::put<uint64_t>(out, cr);
  auto obj = compute_object_encode(object);
  out.insert(out.end(), obj.begin(), obj.end());
  return out;
}

Result<ExecRequest> exec_request_decode(std::span<const std::byte> in) {
  using R = Result<ExecRequest>;
  if (in.size() < 8) return R::failure(StatusCode::ErrSerialization);
  ExecRequest req;
  req.cr = wire::get<uint64_t>(in, 0);
  auto obj = compute_object_decode(in.subspan(8));
  if (!obj.ok()) return R::failure(obj.status);
  req.object = std::move(obj.value);
  return R::success(std::move(req));
}

std::vector<std::byte> exec_reply_encode(const ExecReply& r) {
  std::vector<std::byte> out;
  wire::put<uint64_t>(out, r.cr);
  wire::put<uint8_t>(out, static_cast<uint8_t>(r.status));
  for (int i = 0; i < 7; ++i) wire::put<uint8_t>(out, 0);
  wire::put<uint64_t>(out, r.t2_ns);
  wire::put<uint64_t>(out, r.t3_ns);
  wire::put<uint32_t>(out, static_cast<uint32_t>(r.out_handles.size()));
  wire::put<uint32_t>(out, 0);
  for (uint64_t h : r.out_handles) wire::put<uint64_t>(out, h);
  if (is_success(r.status)) {
    auto obj = compute_object_encode(r.object);
    out.insert(out.end(), obj.begin(), obj.end());
  }
  return out;
}

Result<ExecReply> exec_reply_decode(std::span<const std::byte> in) {
  using R = Result<ExecReply>;
  constexpr size_t kFixed = 8 + 8 + 8 + 8 + 8;
  if (in.size() < kFixed) return R::failure(StatusCode::ErrSerialization);
  ExecReply r;
  r.cr = wire::get<uint64_t>(in, 0);
  uint8_t st = wire::get<uint8_t>(in, 8);
  if (st > static_cast<uint8_t>(StatusCode::FailsafeExecuted))
    return R::failure(StatusCode::ErrSerialization);
  r.status = static_cast<StatusCode>(st);
  r.t2_ns = wire::get<uint64_t>(in, 16);
  r.t3_ns = wire::get<uint64_t>(in, 24);
  uint32_t count = wire::get<uint32_t>(in, 32);
  size_t off = kFixed;
  if (in.size() - off < static_cast<size_t>(count) * 8)
    return R::failure(StatusCode::ErrSerialization);
  for (uint32_t i = 0; i < count; ++i, off += 8)
    r.out_handles.push_back(wire::get<uint64_t>(in, off));
  if (is_success(r.status)) {
    auto obj = compute_object_decode(in.subspan(off));
    if (!obj.ok()) return R::failure(obj.status);
    r.object = std::move(obj.value);
  } else if (off != in.size()) {
    return R::failure(StatusCode::ErrSerialization);
  }
  return R::success(std::move(r));
}

void envelope_encode(const MessageEnvelope& e, std::byte out[kEnvelopeSize]) {
  wire::put_at<uint32_t>(out + 0, e.magic);
  wire::put_at<uint16_t>(out + 4, e.version);
  wire::put_at<uint16_t>(out + 6, static_cast<uint16_t>(e.msg_type));
  wire::put_at<uint64_t>(out + 8, e.transaction_id);
  wire::put_at<uint64_t>(out + 16, e.app_id);
  wire::put_at<uint32_t>(out + 24, e.src);
  wire::put_at<uint32_t>(out + 28, e.dst);
  wire::put_at<int32_t>(out + 32, e.tag);
  wire::put_at<uint32_t>(out + 36, e.body_length);
  wire::put_at<uint64_t>(out + 40, e.body_handle);
}

Result<MessageEnvelope> envelope_decode(std::span<const std::byte> in) {
  using R = Result<MessageEnvelope>;
  if (in.size() != kEnvelopeSize) return R::failure(StatusCode::ErrSerialization);
  MessageEnvelope e;
  e.magic = wire::get<uint32_t>(in, 0);
  e.version = wire::get<uint16_t>(in, 4);
  uint16_t mt = wire::get<uint16_t>(in, 6);
  if (e.magic != kEnvelopeMagic || e.version != kProtocolVersion ||
      mt < static_cast<uint16_t>(MsgType::ClaimReq) ||
      mt > static_cast<uint16_t>(MsgType::Shutdown))
    return R::failure(StatusCode::ErrSerialization);
  e.msg_type = static_cast<MsgType>(mt);
  e.transaction_id = wire::get<uint64_t>(in, 8);
  e.app_id = wire::get<uint64_t>(in, 16);
  e.src = wire::get<uint32_t>(in, 24);
  e.dst = wire::get<uint32_t>(in, 28);
  e.tag = wire::get<int32_t>(in, 32);
  e.body_length = wire::get<uint32_t>(in, 36);
  e.body_handle = wire::get<uint64_t>(in, 40);
  return R::success(e);
}

}  // namespace halo
