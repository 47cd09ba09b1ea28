// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HALO_VAGENT_KERNEL_REPOSITORY_HPP
#define HALO_VAGENT_KERNEL_REPOSITORY_HPP

#include <memory>
#include <string>
#include <vector>

#include "halo/kernels/abi.h"
#include "halo/vagent/ha_archive.hpp"
#include "halo/vagent/manifest.hpp"

namespace halo::vagent {

struct LoadedKernel {
  KernelManifest manifest;
  halo_kernel_fn entry = nullptr;
};

/// Per-agent kernel repository. Packages load eagerly at registration: the
/// module is written out, dlopen'ed and its entry symbol resolved before the
/// kernel becomes visible to queries. Registration and lookup are not
/// thread-safe; the agent confines them to its service stage.
class KernelRepository {
 public:
  KernelRepository();
  ~KernelRepository();
  KernelRepository(const KernelRepository&) = delete;
  KernelRepository& operator=(const KernelRepository&) = delete;

  /// Rejects manifests with wildcard sw_fid, unresolvable entry symbols and
  /// duplicate (sw_fid, sw_verid, backend_id) triples.
  Result<const LoadedKernel*> register_package(const HaPackage& pkg);

  /// In-process registration (tests, fail-safe harnesses).
  Result<const LoadedKernel*> register_entry(KernelManifest manifest,
                                             halo_kernel_fn entry);

  /// All *.ha files in a directory, sorted by name. Returns the number
  /// registered; individual failures are reported through `errors`.
  size_t register_directory(const std::string& dir,
                            std::vector<std::string>* errors = nullptr);

  /// Unique manifest matching every non-wildcard field of `attrs`; among
  /// several version matches the highest sw_verid wins. The query's sw_fid
  /// must be concrete.
  Result<const LoadedKernel*> lookup(const KernelAttributes& attrs) const;

  std::vector<KernelManifest> manifests() const;
  size_t size() const { return kernels_.size(); }

 private:
  struct DlHandle;
  std::vector<std::unique_ptr<LoadedKernel>> kernels_;
  std::vector<std::unique_ptr<DlHandle>> handles_;
  std::string scratch_dir_;
};

}  // namespace halo::vagent

#endif  // HALO_VAGENT_KERNEL_REPOSITORY_HPP
