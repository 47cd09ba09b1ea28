// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/vagent/manifest.hpp"

#include <json.hpp>

#include "halo/config.hpp"

namespace halo::vagent {

using nlohmann::json;

Result<MpixType> type_from_name(std::string_view name) {
  using R = Result<MpixType>;
  static const std::pair<std::string_view, MpixType> kNames[] = {
      {"i8", MpixType::Int8},     {"i16", MpixType::Int16},
      {"i32", MpixType::Int32},   {"i64", MpixType::Int64},
      {"u8", MpixType::Uint8},    {"u16", MpixType::Uint16},
      {"u32", MpixType::Uint32},  {"u64", MpixType::Uint64},
      {"f32", MpixType::Float32}, {"f64", MpixType::Float64},
  };
  for (auto& [n, t] : kNames)
    if (n == name) return R::success(t);
  return R::failure(StatusCode::ErrBadArgument);
}

std::string_view type_name(MpixType t) {
  switch (to_external(t)) {
    case MpixType::Int8: return "i8";
    case MpixType::Int16: return "i16";
    case MpixType::Int32: return "i32";
    case MpixType::Int64: return "i64";
    case MpixType::Uint8: return "u8";
    case MpixType::Uint16: return "u16";
    case MpixType::Uint32: return "u32";
    case MpixType::Uint64: return "u64";
    case MpixType::Float32: return "f32";
    case MpixType::Float64: return "f64";
    default: return "?";
  }
}

namespace {

std::string hex_or_star64(uint64_t v) {
  if (v == kWildcard64) return "*";
  char buf[24];
  snprintf(buf, sizeof(buf), "%llX", static_cast<unsigned long long>(v));
  return buf;
}

std::string hex_or_star32(uint32_t v) {
  return v == kWildcard32 ? "*" : hex_or_star64(v);
}

json attributes_to_json(const KernelAttributes& a) {
  return json{{"vid", hex_or_star32(a.vid)},
              {"pid", hex_or_star32(a.pid)},
              {"ss_vid", hex_or_star32(a.ss_vid)},
              {"ss_pid", hex_or_star32(a.ss_pid)},
              {"sw_pid", hex_or_star64(a.sw_pid)},
              {"sw_vid", hex_or_star64(a.sw_vid)},
              {"sw_fid", hex_or_star64(a.sw_fid)},
              {"sw_verid", hex_or_star64(a.sw_verid)}};
}

bool attributes_from_json(const json& j, KernelAttributes& out) {
  if (!j.is_object()) return false;
  auto f32 = [&](const char* key, uint32_t& v) {
    if (!j.contains(key)) return true;
    if (!j.at(key).is_string()) return false;
    auto r = config::parse_id32(j.at(key).get<std::string>());
    if (!r.ok()) return false;
    v = r.value;
    return true;
  };
  auto f64f = [&](const char* key, uint64_t& v) {
    if (!j.contains(key)) return true;
    if (!j.at(key).is_string()) return false;
    auto r = config::parse_id64(j.at(key).get<std::string>());
    if (!r.ok()) return false;
    v = r.value;
    return true;
  };
  return f32("vid", out.vid) && f32("pid", out.pid) &&
         f32("ss_vid", out.ss_vid) && f32("ss_pid", out.ss_pid) &&
         f64f("sw_pid", out.sw_pid) && f64f("sw_vid", out.sw_vid) &&
         f64f("sw_fid", out.sw_fid) && f64f("sw_verid", out.sw_verid);
}

json manifest_to_json_obj(const KernelManifest& m) {
  json sig = json::array();
  for (MpixType t : m.signature) sig.push_back(std::string(type_name(t)));
  json meta = json::object();
  for (auto& [k, v] : m.metadata) meta[k] = v;
  return json{{"attributes", attributes_to_json(m.attributes)},
              {"entry_symbol", m.entry_symbol},
              {"backend_id", m.backend_id},
              {"signature", sig},
              {"metadata", meta}};
}

Result<KernelManifest> manifest_from_json_obj(const json& j) {
  using R = Result<KernelManifest>;
  if (!j.is_object() || !j.contains("attributes") ||
      !j.contains("entry_symbol") || !j.contains("backend_id"))
    return R::failure(StatusCode::ErrBadArgument);
  KernelManifest m;
  if (!attributes_from_json(j.at("attributes"), m.attributes))
    return R::failure(StatusCode::ErrBadArgument);
  if (m.attributes.sw_fid == kWildcard64 || m.attributes.sw_fid == 0)
    return R::failure(StatusCode::ErrBadArgument);
  if (!j.at("entry_symbol").is_string() || !j.at("backend_id").is_string())
    return R::failure(StatusCode::ErrBadArgument);
  m.entry_symbol = j.at("entry_symbol").get<std::string>();
  m.backend_id = j.at("backend_id").get<std::string>();
  if (m.entry_symbol.empty() || m.backend_id.empty())
    return R::failure(StatusCode::ErrBadArgument);
  if (j.contains("signature")) {
    if (!j.at("signature").is_array())
      return R::failure(StatusCode::ErrBadArgument);
    for (const auto& s : j.at("signature")) {
      if (!s.is_string()) return R::failure(StatusCode::ErrBadArgument);
      auto t = type_from_name(s.get<std::string>());
      if (!t.ok()) return R::failure(StatusCode::ErrBadArgument);
      m.signature.push_back(t.value);
    }
  }
  if (j.contains("metadata") && j.at("metadata").is_object())
    for (auto it = j.at("metadata").begin(); it != j.at("metadata").end(); ++it)
      if (it.value().is_string())
        m.metadata[it.key()] = it.value().get<std::string>();
  return R::success(std::move(m));
}

}  // namespace

std::string attributes_to_json_text(const KernelAttributes& a) {
  return attributes_to_json(a).dump();
}

Result<KernelAttributes> attributes_from_json_text(std::string_view text) {
  using R = Result<KernelAttributes>;
  json j = json::parse(text, nullptr, false);
  KernelAttributes a;
  if (j.is_discarded() || !attributes_from_json(j, a))
    return R::failure(StatusCode::ErrSerialization);
  return R::success(a);
}

std::string manifest_to_json(const KernelManifest& m) {
  return manifest_to_json_obj(m).dump(2);
}

Result<KernelManifest> manifest_from_json(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    return Result<KernelManifest>::failure(StatusCode::ErrSerialization);
  return manifest_from_json_obj(j);
}

std::string manifest_list_to_json(const std::vector<KernelManifest>& v) {
  json arr = json::array();
  for (const auto& m : v) arr.push_back(manifest_to_json_obj(m));
  return arr.dump();
}

Result<std::vector<KernelManifest>> manifest_list_from_json(
    std::string_view text) {
  using R = Result<std::vector<KernelManifest>>;
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    return R::failure(StatusCode::ErrSerialization);
  std::vector<KernelManifest> out;
  for (const auto& e : j) {
    auto m = manifest_from_json_obj(e);
    if (!m.ok()) return R::failure(m.status);
    out.push_back(std::move(m.value));
  }
  return R::success(std::move(out));
}

}  // namespace halo::vagent
