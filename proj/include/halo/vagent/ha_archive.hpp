// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// *.ha kernel packages: a ustar-format archive holding `manifest.json` (the
// kernel specification) and `kernel.module` (the loadable binary).

#ifndef HALO_VAGENT_HA_ARCHIVE_HPP
#define HALO_VAGENT_HA_ARCHIVE_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "halo/status.hpp"
#include "halo/vagent/manifest.hpp"

namespace halo::vagent {

struct ArchiveMember {
  std::string name;
  std::vector<std::byte> bytes;
};

StatusCode archive_write(const std::string& path,
                         const std::vector<ArchiveMember>& members);
Result<std::vector<ArchiveMember>> archive_read(const std::string& path);

/// A parsed kernel package. `load` validates that the manifest parses; the
/// entry symbol is resolved at registration time.
struct HaPackage {
  KernelManifest manifest;
  std::vector<std::byte> module_bytes;

  static Result<HaPackage> load(const std::string& path);
  StatusCode save(const std::string& path) const;
};

}  // namespace halo::vagent

#endif  // HALO_VAGENT_HA_ARCHIVE_HPP
