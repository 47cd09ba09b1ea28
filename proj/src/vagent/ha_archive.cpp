// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/vagent/ha_archive.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace halo::vagent {

namespace {

constexpr size_t kBlock = 512;

// Minimal ustar writer/reader covering regular files only.
struct TarHeader {
  char name[100];
  char mode[8];
  char uid[8];
  char gid[8];
  char size[12];
  char mtime[12];
  char chksum[8];
  char typeflag;
  char linkname[100];
  char magic[6];
  char version[2];
  char uname[32];
  char gname[32];
  char devmajor[8];
  char devminor[8];
  char prefix[155];
  char pad[12];
};
static_assert(sizeof(TarHeader) == kBlock);

void octal(char* dst, size_t width, uint64_t v) {
  snprintf(dst, width, "%0*llo", static_cast<int>(width - 1),
           static_cast<unsigned long long>(v));
}

void finish_header(TarHeader& h) {
  std::memset(h.chksum, ' ', sizeof(h.chksum));
  unsigned sum = 0;
  const unsigned char* p = reinterpret_cast<const unsigned char*>(&h);
  for (size_t i = 0; i < kBlock; ++i) sum += p[i];
  snprintf(h.chksum, sizeof(h.chksum), "%06o", sum);
  h.chksum[7] = ' ';
}

}  // namespace

StatusCode archive_write(const std::string& path,
                         const std::vector<ArchiveMember>& members) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return StatusCode::ErrNoResource;
  for (const auto& m : members) {
    if (m.name.size() >= 100) return StatusCode::ErrBadArgument;
    TarHeader h;
    std::memset(&h, 0, sizeof(h));
    std::memcpy(h.name, m.name.c_str(), m.name.size());
    octal(h.mode, sizeof(h.mode), 0644);
    octal(h.uid, sizeof(h.uid), 0);
    octal(h.gid, sizeof(h.gid), 0);
    octal(h.size, sizeof(h.size), m.bytes.size());
    octal(h.mtime, sizeof(h.mtime), 0);
    h.typeflag = '0';
    std::memcpy(h.magic, "ustar", 6);
    std::memcpy(h.version, "00", 2);
    finish_header(h);
    out.write(reinterpret_cast<const char*>(&h), kBlock);
    out.write(reinterpret_cast<const char*>(m.bytes.data()),
              static_cast<std::streamsize>(m.bytes.size()));
    size_t rem = m.bytes.size() % kBlock;
    if (rem) {
      char zeros[kBlock] = {};
      out.write(zeros, static_cast<std::streamsize>(kBlock - rem));
    }
  }
  char zeros[kBlock] = {};
  out.write(zeros, kBlock);
  out.write(zeros, kBlock);
  return out.good() ? StatusCode::Ok : StatusCode::ErrNoResource;
}

Result<std::vector<ArchiveMember>> archive_read(const std::string& path) {
  using R = Result<std::vector<ArchiveMember>>;
  std::ifstream in(path, std::ios::binary);
  if (!in) return R::failure(StatusCode::ErrNoResource);

  std::vector<ArchiveMember> members;
  while (true) {
    TarHeader h;
    if (!in.read(reinterpret_cast<char*>(&h), kBlock)) break;
    if (h.name[0] == '\0') break;  // terminator block
    if (std::memcmp(h.magic, "ustar", 5) != 0)
      return R::failure(StatusCode::ErrSerialization);
    uint64_t size = 0;
    if (sscanf(h.size, "%llo", reinterpret_cast<unsigned long long*>(&size)) !=
        1)
      return R::failure(StatusCode::ErrSerialization);
    ArchiveMember m;
    m.name.assign(h.name, strnlen(h.name, sizeof(h.name)));
    m.bytes.resize(size);
    if (size > 0 &&
        !in.read(reinterpret_cast<char*>(m.bytes.data()),
                 static_cast<std::streamsize>(size)))
      return R::failure(StatusCode::ErrSerialization);
    size_t rem = size % kBlock;
    if (rem) in.seekg(static_cast<std::streamoff>(kBlock - rem), std::ios::cur);
    if (h.typeflag == '0' || h.typeflag == '\0')
      members.push_back(std::move(m));
  }
  return R::success(std::move(members));
}

Result<HaPackage> HaPackage::load(const std::string& path) {
  using R = Result<HaPackage>;
  auto members = archive_read(path);
  if (!members.ok()) return R::failure(members.status);

  HaPackage pkg;
  bool have_manifest = false, have_module = false;
  for (auto& m : members.value) {
    if (m.name == "manifest.json") {
      auto parsed = manifest_from_json(std::string_view(
          reinterpret_cast<const char*>(m.bytes.data()), m.bytes.size()));
      if (!parsed.ok()) return R::failure(StatusCode::ErrBadArgument);
      pkg.manifest = std::move(parsed.value);
      have_manifest = true;
    } else if (m.name == "kernel.module") {
      pkg.module_bytes = std::move(m.bytes);
      have_module = true;
    }
  }
  if (!have_manifest || !have_module)
    return R::failure(StatusCode::ErrBadArgument);
  return R::success(std::move(pkg));
}

StatusCode HaPackage::save(const std::string& path) const {
  std::string manifest_text = manifest_to_json(manifest);
  std::vector<ArchiveMember> members(2);
  members[0].name = "manifest.json";
  members[0].bytes.resize(manifest_text.size());
  std::memcpy(members[0].bytes.data(), manifest_text.data(),
              manifest_text.size());
  members[1].name = "kernel.module";
  members[1].bytes = module_bytes;
  return archive_write(path, members);
}

}  // namespace halo::vagent
