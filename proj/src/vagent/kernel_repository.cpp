// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/vagent/kernel_repository.hpp"

#include <dlfcn.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace halo::vagent {

namespace fs = std::filesystem;

struct KernelRepository::DlHandle {
  void* dl = nullptr;
  std::string path;

  ~DlHandle() {
    if (dl) dlclose(dl);
    if (!path.empty()) ::unlink(path.c_str());
  }
};

KernelRepository::KernelRepository() {
  const char* tmp = std::getenv("TMPDIR");
  char tmpl[256];
  snprintf(tmpl, sizeof(tmpl), "%s/halo-ha-XXXXXX", tmp ? tmp : "/tmp");
  if (char* d = mkdtemp(tmpl)) scratch_dir_ = d;
}

KernelRepository::~KernelRepository() {
  handles_.clear();  // unlinks extracted modules first
  if (!scratch_dir_.empty()) ::rmdir(scratch_dir_.c_str());
}

Result<const LoadedKernel*> KernelRepository::register_entry(
    KernelManifest manifest, halo_kernel_fn entry) {
  using R = Result<const LoadedKernel*>;
  if (!entry || manifest.attributes.sw_fid == kWildcard64 ||
      manifest.attributes.sw_fid == 0)
    return R::failure(StatusCode::ErrBadArgument);
  for (const auto& k : kernels_) {
    if (k->manifest.attributes.sw_fid == manifest.attributes.sw_fid &&
        k->manifest.attributes.sw_verid == manifest.attributes.sw_verid &&
        k->manifest.backend_id == manifest.backend_id)
      return R::failure(StatusCode::ErrBadArgument);
  }
  auto k = std::make_unique<LoadedKernel>();
  k->manifest = std::move(manifest);
  k->entry = entry;
  kernels_.push_back(std::move(k));
  return R::success(kernels_.back().get());
}

Result<const LoadedKernel*> KernelRepository::register_package(
    const HaPackage& pkg) {
  using R = Result<const LoadedKernel*>;
  if (pkg.module_bytes.empty() || scratch_dir_.empty())
    return R::failure(StatusCode::ErrBadArgument);

  // Write the module out and load it eagerly; a bad entry symbol fails the
  // registration rather than the first invocation.
  char path[512];
  snprintf(path, sizeof(path), "%s/mod-%zu.so", scratch_dir_.c_str(),
           handles_.size());
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return R::failure(StatusCode::ErrNoResource);
    out.write(reinterpret_cast<const char*>(pkg.module_bytes.data()),
              static_cast<std::streamsize>(pkg.module_bytes.size()));
    if (!out.good()) return R::failure(StatusCode::ErrNoResource);
  }

  auto handle = std::make_unique<DlHandle>();
  handle->path = path;
  handle->dl = dlopen(path, RTLD_NOW | RTLD_LOCAL);
  if (!handle->dl) return R::failure(StatusCode::ErrBadArgument);

  void* sym = dlsym(handle->dl, pkg.manifest.entry_symbol.c_str());
  if (!sym) return R::failure(StatusCode::ErrBadArgument);

  auto res =
      register_entry(pkg.manifest, reinterpret_cast<halo_kernel_fn>(sym));
  if (res.ok()) handles_.push_back(std::move(handle));
  return res;
}

size_t KernelRepository::register_directory(const std::string& dir,
                                            std::vector<std::string>* errors) {
  std::error_code ec;
  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(dir, ec))
    if (e.is_regular_file() && e.path().extension() == ".ha")
      paths.push_back(e.path().string());
  std::sort(paths.begin(), paths.end());

  size_t count = 0;
  for (const auto& p : paths) {
    auto pkg = HaPackage::load(p);
    if (!pkg.ok()) {
      if (errors) errors->push_back(p + ": unreadable package");
      continue;
    }
    auto r = register_package(pkg.value);
    if (!r.ok()) {
      if (errors) errors->push_back(p + ": registration failed");
      continue;
    }
    ++count;
  }
  return count;
}

Result<const LoadedKernel*> KernelRepository::lookup(
    const KernelAttributes& attrs) const {
  using R = Result<const LoadedKernel*>;
  if (attrs.sw_fid == kWildcard64)
    return R::failure(StatusCode::ErrBadArgument);
  const LoadedKernel* best = nullptr;
  for (const auto& k : kernels_) {
    if (!k->manifest.attributes.satisfies(attrs)) continue;
    if (!best ||
        k->manifest.attributes.sw_verid > best->manifest.attributes.sw_verid)
      best = k.get();
  }
  if (!best) return R::failure(StatusCode::ErrNoResource);
  return R::success(best);
}

std::vector<KernelManifest> KernelRepository::manifests() const {
  std::vector<KernelManifest> out;
  out.reserve(kernels_.size());
  for (const auto& k : kernels_) out.push_back(k->manifest);
  return out;
}

}  // namespace halo::vagent
