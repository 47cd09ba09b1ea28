// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0
//
// Kernel package tool: builds and inspects *.ha archives.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <vector>

#include "halo/kernels/kernels.hpp"
#include "halo/vagent/ha_archive.hpp"

namespace {

std::vector<std::byte> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::byte> bytes;
  if (!in) return bytes;
  in.seekg(0, std::ios::end);
  bytes.resize(static_cast<size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  return bytes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"halo-pack: build and inspect .ha kernel packages"};
  app.require_subcommand(1);

  // build-kernel: manifest fields come from the built-in kernel registry.
  std::string kernel, backend, module_path, out_path;
  auto* build = app.add_subcommand(
      "build-kernel", "package a registry kernel module into a .ha archive");
  build->add_option("--kernel", kernel, "registry kernel name")->required();
  build->add_option("--backend", backend, "backend id")->required();
  build->add_option("--module", module_path, "compiled module (.so)")
      ->required();
  build->add_option("--out", out_path, "output .ha path")->required();

  // pack: explicit manifest file.
  std::string manifest_path;
  auto* pack = app.add_subcommand("pack", "package an explicit manifest");
  pack->add_option("--manifest", manifest_path, "manifest.json")->required();
  pack->add_option("--module", module_path, "compiled module (.so)")
      ->required();
  pack->add_option("--out", out_path, "output .ha path")->required();

  std::string list_path;
  auto* list = app.add_subcommand("list", "show a package's manifest");
  list->add_option("package", list_path, ".ha path")->required();

  CLI11_PARSE(app, argc, argv);

  if (build->parsed()) {
    const auto* info = halo::kern::kernel_by_name(kernel);
    if (!info) {
      std::fprintf(stderr, "unknown kernel \"%s\"\n", kernel.c_str());
      return 1;
    }
    halo::vagent::HaPackage pkg;
    pkg.manifest.attributes.sw_fid = info->sw_fid;
    pkg.manifest.attributes.sw_verid = 1;
    pkg.manifest.attributes.sw_vid = 1;
    pkg.manifest.attributes.sw_pid = 1;
    pkg.manifest.entry_symbol = HALO_KERNEL_ENTRY_DEFAULT;
    pkg.manifest.backend_id = backend;
    for (char c : info->signature)
      pkg.manifest.signature.push_back(c == 'u' ? halo::MpixType::Uint64
                                                : halo::MpixType::Float64);
    pkg.manifest.metadata["name"] = std::string(info->name);
    pkg.manifest.metadata["alias"] = std::string(info->alias);
    pkg.module_bytes = slurp(module_path);
    if (pkg.module_bytes.empty()) {
      std::fprintf(stderr, "cannot read module %s\n", module_path.c_str());
      return 1;
    }
    if (pkg.save(out_path) != halo::StatusCode::Ok) {
      std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
      return 1;
    }
    return 0;
  }

  if (pack->parsed()) {
    auto mtext = slurp(manifest_path);
    auto manifest = halo::vagent::manifest_from_json(std::string_view(
        reinterpret_cast<const char*>(mtext.data()), mtext.size()));
    if (!manifest.ok()) {
      std::fprintf(stderr, "bad manifest %s\n", manifest_path.c_str());
      return 1;
    }
    halo::vagent::HaPackage pkg;
    pkg.manifest = std::move(manifest.value);
    pkg.module_bytes = slurp(module_path);
    if (pkg.module_bytes.empty() ||
        pkg.save(out_path) != halo::StatusCode::Ok) {
      std::fprintf(stderr, "packaging failed\n");
      return 1;
    }
    return 0;
  }

  auto pkg = halo::vagent::HaPackage::load(list_path);
  if (!pkg.ok()) {
    std::fprintf(stderr, "unreadable package %s\n", list_path.c_str());
    return 1;
  }
  std::cout << halo::vagent::manifest_to_json(pkg.value.manifest) << "\n"
            << "module bytes: " << pkg.value.module_bytes.size() << "\n";
  return 0;
}
