// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/types.hpp"

namespace halo {

const char* status_name(StatusCode s) {
  switch (s) {
    case StatusCode::Ok: return "OK";
    case StatusCode::ErrNoResource: return "ERR_NO_RESOURCE";
    case StatusCode::ErrBadHandle: return "ERR_BAD_HANDLE";
    case StatusCode::ErrBadArgument: return "ERR_BAD_ARGUMENT";
    case StatusCode::ErrSerialization: return "ERR_SERIALIZATION";
    case StatusCode::ErrTimeout: return "ERR_TIMEOUT";
    case StatusCode::ErrKernelFault: return "ERR_KERNEL_FAULT";
    case StatusCode::ErrFinalized: return "ERR_FINALIZED";
    case StatusCode::FailsafeExecuted: return "FAILSAFE_EXECUTED";
  }
  return "UNKNOWN";
}

bool is_valid_type(MpixType t) {
  uint8_t v = static_cast<uint8_t>(t);
  return v <= 9 || (v >= 16 && v <= 25) || v == 32;
}

BufferClass buffer_class(MpixType t) {
  uint8_t v = static_cast<uint8_t>(t);
  if (v <= 9) return BufferClass::External;
  if (v >= 16 && v <= 25) return BufferClass::Internal;
  return BufferClass::Object;
}

Result<TypeTraits> mpixtype_traits(MpixType t) {
  if (!is_valid_type(t) || t == MpixType::ComputeObject)
    return Result<TypeTraits>::failure(StatusCode::ErrBadArgument);
  uint8_t base = static_cast<uint8_t>(t) & 0x0F;  // strip the internal bit
  TypeTraits tr;
  switch (base) {
    case 0: tr = {false, true, 1}; break;   // int8
    case 1: tr = {false, true, 2}; break;   // int16
    case 2: tr = {false, true, 4}; break;   // int32
    case 3: tr = {false, true, 8}; break;   // int64
    case 4: tr = {false, false, 1}; break;  // uint8
    case 5: tr = {false, false, 2}; break;  // uint16
    case 6: tr = {false, false, 4}; break;  // uint32
    case 7: tr = {false, false, 8}; break;  // uint64
    case 8: tr = {true, true, 4}; break;    // float32
    case 9: tr = {true, true, 8}; break;    // float64
    default:
      return Result<TypeTraits>::failure(StatusCode::ErrBadArgument);
  }
  return Result<TypeTraits>::success(tr);
}

MpixType to_internal(MpixType t) {
  if (buffer_class(t) == BufferClass::External)
    return static_cast<MpixType>(static_cast<uint8_t>(t) + 16);
  return t;
}

MpixType to_external(MpixType t) {
  if (buffer_class(t) == BufferClass::Internal)
    return static_cast<MpixType>(static_cast<uint8_t>(t) - 16);
  return t;
}

KernelAttributes KernelAttributes::merged(const KernelAttributes& o) const {
  KernelAttributes r = *this;
  if (o.vid != kWildcard32) r.vid = o.vid;
  if (o.pid != kWildcard32) r.pid = o.pid;
  if (o.ss_vid != kWildcard32) r.ss_vid = o.ss_vid;
  if (o.ss_pid != kWildcard32) r.ss_pid = o.ss_pid;
  if (o.sw_pid != kWildcard64) r.sw_pid = o.sw_pid;
  if (o.sw_vid != kWildcard64) r.sw_vid = o.sw_vid;
  if (o.sw_fid != kWildcard64) r.sw_fid = o.sw_fid;
  if (o.sw_verid != kWildcard64) r.sw_verid = o.sw_verid;
  return r;
}

bool KernelAttributes::satisfies(const KernelAttributes& q) const {
  auto m32 = [](uint32_t field, uint32_t query) {
    return query == kWildcard32 || field == kWildcard32 || field == query;
  };
  auto m64 = [](uint64_t field, uint64_t query) {
    return query == kWildcard64 || field == kWildcard64 || field == query;
  };
  return m32(vid, q.vid) && m32(pid, q.pid) && m32(ss_vid, q.ss_vid) &&
         m32(ss_pid, q.ss_pid) && m64(sw_pid, q.sw_pid) &&
         m64(sw_vid, q.sw_vid) && m64(sw_fid, q.sw_fid) &&
         m64(sw_verid, q.sw_verid);
}

Result<Argument> Argument::inline_bytes(MpixType kind,
                                        std::span<const std::byte> payload) {
  if (buffer_class(kind) != BufferClass::External)
    return Result<Argument>::failure(StatusCode::ErrBadArgument);
  auto tr = mpixtype_traits(kind);
  if (!tr.ok()) return Result<Argument>::failure(tr.status);
  if (payload.size() % tr.value.element_size != 0)
    return Result<Argument>::failure(StatusCode::ErrBadArgument);
  Argument a;
  a.kind_ = kind;
  a.storage_ = ArgStorage::Inline;
  a.traits_ = tr.value;
  a.element_count_ = payload.size() / tr.value.element_size;
  a.inline_bytes_.assign(payload.begin(), payload.end());
  return Result<Argument>::success(std::move(a));
}

Result<Argument> Argument::external(MpixType kind, ExternalRef ref) {
  if (buffer_class(kind) != BufferClass::External)
    return Result<Argument>::failure(StatusCode::ErrBadArgument);
  auto tr = mpixtype_traits(kind);
  if (!tr.ok()) return Result<Argument>::failure(tr.status);
  if (ref.length % tr.value.element_size != 0)
    return Result<Argument>::failure(StatusCode::ErrBadArgument);
  Argument a;
  a.kind_ = kind;
  a.storage_ = ArgStorage::External;
  a.traits_ = tr.value;
  a.element_count_ = ref.length / tr.value.element_size;
  a.external_ = ref;
  return Result<Argument>::success(std::move(a));
}

Result<Argument> Argument::internal(MpixType kind, uint64_t handle,
                                    uint64_t element_count) {
  MpixType k = to_internal(kind);
  if (buffer_class(k) != BufferClass::Internal || handle == 0)
    return Result<Argument>::failure(StatusCode::ErrBadArgument);
  auto tr = mpixtype_traits(k);
  if (!tr.ok()) return Result<Argument>::failure(tr.status);
  Argument a;
  a.kind_ = k;
  a.storage_ = ArgStorage::Internal;
  a.traits_ = tr.value;
  a.element_count_ = element_count;
  a.internal_handle_ = handle;
  return Result<Argument>::success(std::move(a));
}

bool Argument::operator==(const Argument& o) const {
  if (kind_ != o.kind_ || storage_ != o.storage_ ||
      element_count_ != o.element_count_)
    return false;
  switch (storage_) {
    case ArgStorage::Inline: return inline_bytes_ == o.inline_bytes_;
    case ArgStorage::External: return external_ == o.external_;
    case ArgStorage::Internal: return internal_handle_ == o.internal_handle_;
  }
  return false;
}

bool ComputeObject::stateful() const {
  for (const auto& a : args)
    if (a.storage() == ArgStorage::Internal) return true;
  return false;
}

}  // namespace halo
