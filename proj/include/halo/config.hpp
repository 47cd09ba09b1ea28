// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// Unified configuration file: the legacy host file merged with the
// accelerator resource manifest. Three sections: host_list (hosts),
// func_list (child-rank definitions keyed by alias) and platform_list
// (backend agents to attach and the recommendation-strategy settings).
// UTF-8 JSON; id strings are hexadecimal. See docs/protocol.md for the
// schema.

#ifndef HALO_CONFIG_HPP
#define HALO_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "halo/types.hpp"

namespace halo::config {

struct HostEntry {
  std::string host_name;
  uint16_t port = 0;
  std::string mode;  // "ads_accel" is the only mode in v1
  uint32_t max_slots = 1;
};

struct FuncEntry {
  std::string func_alias;  // unique within func_list
  uint64_t sw_fid = 0;
  uint32_t func_repl = 1;  // backing-replica count for the CR
  std::string platform_id = "rr_scat";
  std::optional<KernelAttributes> overrides;
};

/// One virtualization agent to attach (or spawn). `replicas` launches that
/// many instances of the same backend; endpoint/kernels_dir default to
/// derived paths when empty. sim_* latencies only apply to the sim_accel
/// backend.
struct PlatformEntry {
  std::string backend_id;
  uint32_t replicas = 1;
  std::string endpoint;
  std::string kernels_dir;
  uint64_t sim_t2_ns = 0;
  uint64_t sim_t3_ns = 0;
};

struct HaloConfig {
  std::vector<HostEntry> host_list;
  std::vector<FuncEntry> func_list;
  std::vector<PlatformEntry> platform_list;
  /// Unknown keys are preserved here as warnings, not errors.
  std::vector<std::string> warnings;

  const FuncEntry* find_alias(std::string_view alias) const;
};

/// Filled on parse failure: human-readable message plus 1-based line/column
/// when the position is known.
struct ConfigError {
  std::string message;
  int line = 0;
  int column = 0;
};

Result<HaloConfig> parse_config(std::string_view text,
                                ConfigError* err = nullptr);
Result<HaloConfig> parse_config_file(const std::string& path,
                                     ConfigError* err = nullptr);

/// Resolve an alias to the attribute tuple used for kernel lookup. Runtime
/// overrides replace static fields field-wise; fields specified nowhere stay
/// wildcard. An absent alias is an error unless the overrides supply a
/// sw_fid of their own.
Result<KernelAttributes> resolve_alias(
    const HaloConfig& cfg, std::string_view alias,
    const KernelAttributes* runtime_overrides = nullptr);

/// Hex id field codec ("12345" -> 0x12345, "*" -> wildcard).
Result<uint64_t> parse_id64(std::string_view s);
Result<uint32_t> parse_id32(std::string_view s);

}  // namespace halo::config

#endif  // HALO_CONFIG_HPP
