// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HALO_VAGENT_MANIFEST_HPP
#define HALO_VAGENT_MANIFEST_HPP

#include <map>
#include <string>
#include <vector>

#include "halo/types.hpp"

namespace halo::vagent {

/// Kernel specification carried inside a *.ha package and answered to
/// manifest queries: selection attributes, the module entry symbol, the
/// backend the binary targets, the expected argument kinds and free-form
/// metadata. (sw_fid, sw_verid, backend_id) is unique within a repository.
struct KernelManifest {
  KernelAttributes attributes;
  std::string entry_symbol;
  std::string backend_id;
  std::vector<MpixType> signature;
  std::map<std::string, std::string> metadata;

  bool operator==(const KernelManifest&) const = default;
};

Result<KernelManifest> manifest_from_json(std::string_view text);
std::string manifest_to_json(const KernelManifest& m);

/// Codec for a whole repository listing (manifest-query responses).
std::string manifest_list_to_json(const std::vector<KernelManifest>& v);
Result<std::vector<KernelManifest>> manifest_list_from_json(
    std::string_view text);

/// Signature element names used in manifests ("f64", "u32", ...).
Result<MpixType> type_from_name(std::string_view name);
std::string_view type_name(MpixType t);

/// Attribute-tuple JSON codec shared by manifests, claim bodies and config
/// overrides (hex-string ids, "*" for wildcard).
std::string attributes_to_json_text(const KernelAttributes& a);
Result<KernelAttributes> attributes_from_json_text(std::string_view text);

}  // namespace halo::vagent

#endif  // HALO_VAGENT_MANIFEST_HPP
