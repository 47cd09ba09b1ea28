// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bit-exact wire formats of the framework. Two records cross process
// boundaries: the encoded compute-object (body payload, length-prefixed TLV
// per argument) and the fixed 48-byte message envelope of the agent
// interoperability protocol. Layouts are little-endian and documented in
// docs/protocol.md; changes here are protocol changes.

#ifndef HALO_WIRE_HPP
#define HALO_WIRE_HPP

#include <bit>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "halo/types.hpp"

namespace halo {

// ============================================================================
// Compute-object encoding
// ============================================================================
//
//   header (24 bytes): function_id u64 | app_id u64 | tag i32 | status u8 |
//                      reserved u8 | arg_count u16
//   per argument:      kind u8 | length u64 | payload[length]
//
// The kind octet packs the datatype code in bits 0-5 and the storage mode in
// bits 6-7 (0 inline, 1 external view, 2 internal handle). The length prefix
// makes unknown future variants skippable.

std::vector<std::byte> compute_object_encode(const ComputeObject& o);
Result<ComputeObject> compute_object_decode(std::span<const std::byte> bytes);

/// Sum of inline-argument payload bytes in an object (the bytes a marshaling
/// copy actually moves; external views and internal handles contribute 0).
uint64_t inline_payload_bytes(const ComputeObject& o);

// ============================================================================
// Message envelope
// ============================================================================

enum class MsgType : uint16_t {
  ClaimReq = 1,
  ClaimRsp = 2,
  ExecReq = 3,
  ExecRsp = 4,
  BufCreateReq = 5,
  BufCreateRsp = 6,
  FreeReq = 7,
  FreeRsp = 8,
  ManifestQuery = 9,
  ManifestRsp = 10,
  Shutdown = 11,
};

bool is_request(MsgType t);
/// Response type paired with a request type (ClaimReq -> ClaimRsp, ...).
MsgType response_for(MsgType req);

inline constexpr uint32_t kEnvelopeMagic = 0x4F4C4148u;  // "HALO" LE
inline constexpr uint16_t kProtocolVersion = 1;
inline constexpr size_t kEnvelopeSize = 48;

/// Fixed-size header of every agent-interoperability message. Bodies never
/// travel in the envelope: body_handle references the application context's
/// shared-memory content store and body_length is its byte length (0 when
/// the message carries no body).
///
/// Layout (48 bytes, little-endian):
///   0  u32 magic        4  u16 version      6  u16 msg_type
///   8  u64 transaction_id                  16  u64 app_id
///  24  u32 src         28  u32 dst         32  i32 tag
///  36  u32 body_length 40  u64 body_handle
struct MessageEnvelope {
  uint32_t magic = kEnvelopeMagic;
  uint16_t version = kProtocolVersion;
  MsgType msg_type = MsgType::Shutdown;
  uint64_t transaction_id = 0;
  uint64_t app_id = 0;
  uint32_t src = 0;
  uint32_t dst = 0;
  int32_t tag = 0;
  uint32_t body_length = 0;
  uint64_t body_handle = 0;

  bool operator==(const MessageEnvelope&) const = default;
};

void envelope_encode(const MessageEnvelope& e, std::byte out[kEnvelopeSize]);
Result<MessageEnvelope> envelope_decode(std::span<const std::byte> bytes);

// ============================================================================
// Execution bodies
// ============================================================================

/// EXEC_REQ body: child-rank handle followed by the encoded request object.
std::vector<std::byte> exec_request_encode(uint64_t cr,
                                           const ComputeObject& object);
struct ExecRequest {
  uint64_t cr = 0;
  ComputeObject object;
};
Result<ExecRequest> exec_request_decode(std::span<const std::byte> bytes);

/// EXEC_RSP body: status + agent-measured t2/t3 + the content-store handles
/// backing the result arguments (ownership passes to the receiver) + the
/// encoded result object (present only on success).
struct ExecReply {
  uint64_t cr = 0;
  StatusCode status = StatusCode::Ok;
  uint64_t t2_ns = 0;
  uint64_t t3_ns = 0;
  std::vector<uint64_t> out_handles;
  ComputeObject object;
};
std::vector<std::byte> exec_reply_encode(const ExecReply& r);
Result<ExecReply> exec_reply_decode(std::span<const std::byte> bytes);

// Little-endian scalar put/get helpers shared by the codecs.
namespace wire {

template <typename T>
void put_at(std::byte* out, T v) {
  auto u = [&] {
    if constexpr (sizeof(T) == 1) return static_cast<uint8_t>(v);
    else if constexpr (sizeof(T) == 2) return std::bit_cast<uint16_t>(v);
    else if constexpr (sizeof(T) == 4) return std::bit_cast<uint32_t>(v);
    else return std::bit_cast<uint64_t>(v);
  }();
  for (size_t i = 0; i < sizeof(T); ++i)
    out[i] = std::byte{static_cast<uint8_t>(u >> (8 * i))};
}

template <typename T>
void put(std::vector<std::byte>& out, T v) {
  size_t n = out.size();
  out.resize(n + sizeof(T));
  put_at(out.data() + n, v);
}

template <typename T>
T get(std::span<const std::byte> in, size_t off) {
  using U = std::conditional_t<
      sizeof(T) == 1, uint8_t,
      std::conditional_t<sizeof(T) == 2, uint16_t,
                         std::conditional_t<sizeof(T) == 4, uint32_t, uint64_t>>>;
  U u = 0;
  for (size_t i = 0; i < sizeof(T); ++i)
    u |= static_cast<U>(std::to_integer<uint8_t>(in[off + i])) << (8 * i);
  return std::bit_cast<T>(u);
}

}  // namespace wire

}  // namespace halo

#endif  // HALO_WIRE_HPP
