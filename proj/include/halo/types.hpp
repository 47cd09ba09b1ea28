// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// Core domain types shared by the application library, the runtime agent and
// the virtualization agents: datatype enumeration, type-erased arguments, the
// unified compute-object, kernel attributes, rank handles and timing records.

#ifndef HALO_TYPES_HPP
#define HALO_TYPES_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "halo/status.hpp"

namespace halo {

// ============================================================================
// Datatype enumeration
// ============================================================================

/// Element/datatype codes. Values 0-9 describe PR-managed (external) data,
/// 16-25 are the same scalar families for framework-managed internal buffers
/// (base code + 16), 32 tags a nested compute-object. Values are frozen; the
/// low 6 bits travel inside the argument TLV kind tag.
enum class MpixType : uint8_t {
  Int8 = 0,
  Int16 = 1,
  Int32 = 2,
  Int64 = 3,
  Uint8 = 4,
  Uint16 = 5,
  Uint32 = 6,
  Uint64 = 7,
  Float32 = 8,
  Float64 = 9,

  InternalInt8 = 16,
  InternalInt16 = 17,
  InternalInt32 = 18,
  InternalInt64 = 19,
  InternalUint8 = 20,
  InternalUint16 = 21,
  InternalUint32 = 22,
  InternalUint64 = 23,
  InternalFloat32 = 24,
  InternalFloat64 = 25,

  ComputeObject = 32,
};

enum class BufferClass : uint8_t {
  External = 0,  ///< PR-managed memory (inline bytes or unified-memory view)
  Internal = 1,  ///< framework-managed buffer, referenced by handle
  Object = 2,    ///< nested compute-object
};

struct TypeTraits {
  bool is_float = false;
  bool is_signed = false;
  uint32_t element_size = 0;
};

bool is_valid_type(MpixType t);
BufferClass buffer_class(MpixType t);

/// Canonical (is_float, is_signed, element_size) triple of a datatype.
/// Internal-buffer variants report the triple of their element type.
/// ComputeObject has no element triple and yields ErrBadArgument.
Result<TypeTraits> mpixtype_traits(MpixType t);

/// Internal <-> external counterpart of the same scalar family.
MpixType to_internal(MpixType t);
MpixType to_external(MpixType t);

// ============================================================================
// Rank handles
// ============================================================================

/// Opaque handle to a claimed virtual accelerator resource or internal
/// buffer. Handle 0 addresses the framework itself and is never returned by
/// a successful claim.
struct ChildRank {
  uint64_t handle = 0;

  constexpr bool is_framework() const { return handle == 0; }
  constexpr auto operator<=>(const ChildRank&) const = default;
};

inline constexpr ChildRank kFrameworkRank{0};

// ============================================================================
// Kernel attributes
// ============================================================================

inline constexpr uint32_t kWildcard32 = 0xFFFFFFFFu;
inline constexpr uint64_t kWildcard64 = ~0ull;

/// The 8-field attribute tuple driving kernel selection. Hardware ids are
/// 32-bit, software ids 64-bit; the all-ones sentinel in any field matches
/// anything. sw_fid is the primary lookup key and is never wildcard in a
/// registered manifest.
struct KernelAttributes {
  uint32_t vid = kWildcard32;     ///< HW vendor id
  uint32_t pid = kWildcard32;     ///< HW product id
  uint32_t ss_vid = kWildcard32;  ///< HW sub-system vendor id
  uint32_t ss_pid = kWildcard32;  ///< HW sub-system product id
  uint64_t sw_pid = kWildcard64;  ///< SW product id
  uint64_t sw_vid = kWildcard64;  ///< SW vendor id
  uint64_t sw_fid = kWildcard64;  ///< SW function id
  uint64_t sw_verid = kWildcard64;  ///< SW version id

  bool operator==(const KernelAttributes&) const = default;

  /// Field-wise merge: non-wildcard fields of `overrides` win.
  KernelAttributes merged(const KernelAttributes& overrides) const;

  /// True when every non-wildcard field of `query` equals the corresponding
  /// field of this tuple (wildcards in the query match anything).
  bool satisfies(const KernelAttributes& query) const;
};

// ============================================================================
// Arguments and the unified compute-object
// ============================================================================

enum class ArgStorage : uint8_t {
  Inline = 0,    ///< payload bytes travel inside the encoded object
  External = 1,  ///< payload lives in a named shared region (unified memory)
  Internal = 2,  ///< payload is a framework-managed buffer handle
};

/// View descriptor into a named shared-memory region.
struct ExternalRef {
  uint64_t region_id = 0;
  uint64_t offset = 0;
  uint64_t length = 0;

  bool operator==(const ExternalRef&) const = default;
};

/// One type-erased kernel argument. Construction validates the invariants
/// (element_size x element_count == payload length, internal handles are
/// nonzero), so a constructed Argument is always dispatchable.
class Argument {
 public:
  Argument() = default;

  static Result<Argument> inline_bytes(MpixType kind,
                                       std::span<const std::byte> payload);
  static Result<Argument> external(MpixType kind, ExternalRef ref);
  static Result<Argument> internal(MpixType kind, uint64_t handle,
                                   uint64_t element_count);

  /// Convenience: inline argument from a typed array.
  template <typename T>
  static Result<Argument> inline_array(MpixType kind, std::span<const T> v) {
    return inline_bytes(kind, std::as_bytes(v));
  }

  MpixType kind() const { return kind_; }
  ArgStorage storage() const { return storage_; }
  bool is_signed() const { return traits_.is_signed; }
  bool is_float() const { return traits_.is_float; }
  uint32_t element_size() const { return traits_.element_size; }
  uint64_t element_count() const { return element_count_; }
  uint64_t byte_length() const { return element_count_ * traits_.element_size; }

  std::span<const std::byte> inline_payload() const { return inline_bytes_; }
  const ExternalRef& external_ref() const { return external_; }
  uint64_t internal_handle() const { return internal_handle_; }

  bool operator==(const Argument& o) const;

 private:
  MpixType kind_ = MpixType::Uint8;
  ArgStorage storage_ = ArgStorage::Inline;
  TypeTraits traits_{};
  uint64_t element_count_ = 0;
  std::vector<std::byte> inline_bytes_;
  ExternalRef external_{};
  uint64_t internal_handle_ = 0;
};

/// The unified, type-erased RPC payload: a function id, ordered arguments, a
/// tag and a status, bundled into one marshalable record. Objects whose
/// arguments are all external-class are stateless invocations; any internal
/// buffer argument makes the invocation stateful.
struct ComputeObject {
  /// 0 means "use the child rank's bound function".
  uint64_t function_id = 0;
  uint64_t app_id = 0;
  int32_t tag = 0;
  StatusCode status = StatusCode::Ok;
  std::vector<Argument> args;

  bool stateful() const;
  bool operator==(const ComputeObject&) const = default;
};

// ============================================================================
// Timing
// ============================================================================

/// Per-invocation timing decomposition, all in seconds on monotonic clocks:
/// t1 framework/IPC overhead, t2 offload into the device memory space,
/// t3 kernel execution, t4 total round trip (t4 = t1 + t2 + t3).
struct TimingRecord {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
  double t4 = 0.0;
};

}  // namespace halo

#endif  // HALO_TYPES_HPP
