// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#include "halo/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace halo::config {

using nlohmann::json;

namespace {

void fail(ConfigError* err, std::string msg, int line = 0, int col = 0) {
  if (err) *err = ConfigError{std::move(msg), line, col};
}

// nlohmann reports a byte offset; turn it into 1-based line/column.
void offset_to_linecol(std::string_view text, size_t byte, int& line,
                       int& col) {
  line = 1;
  col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      line++;
      col = 1;
    } else {
      col++;
    }
  }
}

Result<uint64_t> parse_hex(std::string_view s, uint64_t wildcard) {
  using R = Result<uint64_t>;
  if (s == "*") return R::success(wildcard);
  if (s.empty() || s.size() > 16) return R::failure(StatusCode::ErrBadArgument);
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc{} || p != s.data() + s.size())
    return R::failure(StatusCode::ErrBadArgument);
  return R::success(v);
}

// The reference configuration layout quotes scalar values ("port":"8000"),
// so every numeric field accepts a string or a JSON number.
bool get_u64(const json& j, uint64_t& out) {
  if (j.is_number_unsigned()) {
    out = j.get<uint64_t>();
    return true;
  }
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 10);
    if (ec != std::errc{} || p != s.data() + s.size()) return false;
    out = v;
    return true;
  }
  return false;
}

bool get_id64(const json& j, uint64_t& out) {
  if (j.is_number_unsigned()) {
    out = j.get<uint64_t>();
    return true;
  }
  if (j.is_string()) {
    auto r = parse_hex(j.get<std::string>(), kWildcard64);
    if (!r.ok()) return false;
    out = r.value;
    return true;
  }
  return false;
}

void warn_unknown(const json& obj, const std::set<std::string>& known,
                  const char* where, std::vector<std::string>& warnings) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.contains(it.key()))
      warnings.push_back(std::string("ignoring unknown key \"") + it.key() +
                         "\" in " + where);
  }
}

bool parse_attributes(const json& j, KernelAttributes& out, std::string& msg) {
  if (!j.is_object()) {
    msg = "overrides must be an object";
    return false;
  }
  auto id32 = [&](const char* key, uint32_t& field) {
    if (!j.contains(key)) return true;
    uint64_t v = 0;
    if (!get_id64(j.at(key), v) || (v != kWildcard64 && v > 0xFFFFFFFFull)) {
      msg = std::string("bad id in overrides field ") + key;
      return false;
    }
    field = v == kWildcard64 ? kWildcard32 : static_cast<uint32_t>(v);
    return true;
  };
  auto id64 = [&](const char* key, uint64_t& field) {
    if (!j.contains(key)) return true;
    if (!get_id64(j.at(key), field)) {
      msg = std::string("bad id in overrides field ") + key;
      return false;
    }
    return true;
  };
  return id32("vid", out.vid) && id32("pid", out.pid) &&
         id32("ss_vid", out.ss_vid) && id32("ss_pid", out.ss_pid) &&
         id64("sw_pid", out.sw_pid) && id64("sw_vid", out.sw_vid) &&
         id64("sw_fid", out.sw_fid) && id64("sw_verid", out.sw_verid);
}

}  // namespace

Result<uint64_t> parse_id64(std::string_view s) {
  return parse_hex(s, kWildcard64);
}

Result<uint32_t> parse_id32(std::string_view s) {
  using R = Result<uint32_t>;
  auto r = parse_hex(s, kWildcard64);
  if (!r.ok()) return R::failure(r.status);
  if (r.value == kWildcard64) return R::success(kWildcard32);
  if (r.value > 0xFFFFFFFFull) return R::failure(StatusCode::ErrBadArgument);
  return R::success(static_cast<uint32_t>(r.value));
}

const FuncEntry* HaloConfig::find_alias(std::string_view alias) const {
  for (const auto& f : func_list)
    if (f.func_alias == alias) return &f;
  return nullptr;
}

Result<HaloConfig> parse_config(std::string_view text, ConfigError* err) {
  using R = Result<HaloConfig>;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 0, col = 0;
    offset_to_linecol(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
    fail(err, e.what(), line, col);
    return R::failure(StatusCode::ErrBadArgument);
  }
  if (!root.is_object()) {
    fail(err, "top level must be a JSON object");
    return R::failure(StatusCode::ErrBadArgument);
  }

  HaloConfig cfg;
  warn_unknown(root, {"host_list", "func_list", "platform_list"}, "top level",
               cfg.warnings);

  for (const char* key : {"host_list", "func_list", "platform_list"}) {
    if (!root.contains(key) || !root.at(key).is_array()) {
      fail(err, std::string("missing or non-array section ") + key);
      return R::failure(StatusCode::ErrBadArgument);
    }
  }

  for (const auto& h : root.at("host_list")) {
    if (!h.is_object()) {
      fail(err, "host_list entries must be objects");
      return R::failure(StatusCode::ErrBadArgument);
    }
    warn_unknown(h, {"host_name", "port", "mode", "max_slots"}, "host entry",
                 cfg.warnings);
    HostEntry e;
    uint64_t port = 0, slots = 1;
    if (!h.contains("host_name") || !h.at("host_name").is_string() ||
        !h.contains("port") || !get_u64(h.at("port"), port) || port < 1 ||
        port > 65535) {
      fail(err, "host entry needs host_name and port in [1, 65535]");
      return R::failure(StatusCode::ErrBadArgument);
    }
    e.host_name = h.at("host_name").get<std::string>();
    e.port = static_cast<uint16_t>(port);
    e.mode = h.value("mode", std::string("ads_accel"));
    if (e.mode != "ads_accel") {
      fail(err, "unsupported host mode \"" + e.mode + "\"");
      return R::failure(StatusCode::ErrBadArgument);
    }
    if (h.contains("max_slots") &&
        (!get_u64(h.at("max_slots"), slots) || slots < 1)) {
      fail(err, "max_slots must be a positive count");
      return R::failure(StatusCode::ErrBadArgument);
    }
    e.max_slots = static_cast<uint32_t>(slots);
    cfg.host_list.push_back(std::move(e));
  }

  std::set<std::string> seen_aliases;
  for (const auto& f : root.at("func_list")) {
    if (!f.is_object()) {
      fail(err, "func_list entries must be objects");
      return R::failure(StatusCode::ErrBadArgument);
    }
    warn_unknown(f,
                 {"func_alias", "sw_fid", "func_repl", "platform_id",
                  "overrides"},
                 "func entry", cfg.warnings);
    FuncEntry e;
    if (!f.contains("func_alias") || !f.at("func_alias").is_string())
      {
        fail(err, "func entry needs a func_alias string");
        return R::failure(StatusCode::ErrBadArgument);
      }
    e.func_alias = f.at("func_alias").get<std::string>();
    if (e.func_alias.empty()) {
      fail(err, "func_alias must be non-empty");
      return R::failure(StatusCode::ErrBadArgument);
    }
    if (!seen_aliases.insert(e.func_alias).second) {
      fail(err, "duplicate func_alias \"" + e.func_alias + "\"");
      return R::failure(StatusCode::ErrBadArgument);
    }
    if (!f.contains("sw_fid") || !get_id64(f.at("sw_fid"), e.sw_fid) ||
        e.sw_fid == 0 || e.sw_fid == kWildcard64) {
      fail(err, "func entry \"" + e.func_alias + "\" needs a nonzero sw_fid");
      return R::failure(StatusCode::ErrBadArgument);
    }
    uint64_t repl = 1;
    if (f.contains("func_repl") &&
        (!get_u64(f.at("func_repl"), repl) || repl < 1)) {
      fail(err, "func_repl must be a positive count");
      return R::failure(StatusCode::ErrBadArgument);
    }
    e.func_repl = static_cast<uint32_t>(repl);
    e.platform_id = f.value("platform_id", std::string("rr_scat"));
    if (e.platform_id != "rr_scat") {
      fail(err, "unsupported platform_id \"" + e.platform_id + "\"");
      return R::failure(StatusCode::ErrBadArgument);
    }
    if (f.contains("overrides")) {
      KernelAttributes a;
      std::string msg;
      if (!parse_attributes(f.at("overrides"), a, msg)) {
        fail(err, msg);
        return R::failure(StatusCode::ErrBadArgument);
      }
      e.overrides = a;
    }
    cfg.func_list.push_back(std::move(e));
  }

  for (const auto& p : root.at("platform_list")) {
    if (!p.is_object()) {
      fail(err, "platform_list entries must be objects");
      return R::failure(StatusCode::ErrBadArgument);
    }
    warn_unknown(p,
                 {"backend_id", "replicas", "endpoint", "kernels_dir",
                  "sim_t2_ns", "sim_t3_ns"},
                 "platform entry", cfg.warnings);
    PlatformEntry e;
    if (!p.contains("backend_id") || !p.at("backend_id").is_string() ||
        p.at("backend_id").get<std::string>().empty()) {
      fail(err, "platform entry needs a backend_id string");
      return R::failure(StatusCode::ErrBadArgument);
    }
    e.backend_id = p.at("backend_id").get<std::string>();
    uint64_t repl = 1;
    if (p.contains("replicas") &&
        (!get_u64(p.at("replicas"), repl) || repl < 1 || repl > 64)) {
      fail(err, "replicas must be in [1, 64]");
      return R::failure(StatusCode::ErrBadArgument);
    }
    e.replicas = static_cast<uint32_t>(repl);
    e.endpoint = p.value("endpoint", std::string());
    e.kernels_dir = p.value("kernels_dir", std::string());
    if (p.contains("sim_t2_ns") && !get_u64(p.at("sim_t2_ns"), e.sim_t2_ns)) {
      fail(err, "sim_t2_ns must be a count of nanoseconds");
      return R::failure(StatusCode::ErrBadArgument);
    }
    if (p.contains("sim_t3_ns") && !get_u64(p.at("sim_t3_ns"), e.sim_t3_ns)) {
      fail(err, "sim_t3_ns must be a count of nanoseconds");
      return R::failure(StatusCode::ErrBadArgument);
    }
    cfg.platform_list.push_back(std::move(e));
  }

  return R::success(std::move(cfg));
}

Result<HaloConfig> parse_config_file(const std::string& path,
                                     ConfigError* err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(err, "cannot open config file " + path);
    return Result<HaloConfig>::failure(StatusCode::ErrBadArgument);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  return parse_config(text, err);
}

Result<KernelAttributes> resolve_alias(const HaloConfig& cfg,
                                       std::string_view alias,
                                       const KernelAttributes* overrides) {
  using R = Result<KernelAttributes>;
  KernelAttributes attrs;  // all wildcard
  const FuncEntry* entry = cfg.find_alias(alias);
  if (entry) {
    if (entry->overrides) attrs = *entry->overrides;
    attrs.sw_fid = entry->sw_fid;
  }
  if (overrides) attrs = attrs.merged(*overrides);
  if (attrs.sw_fid == kWildcard64 || attrs.sw_fid == 0)
    return R::failure(StatusCode::ErrNoResource);
  return R::success(attrs);
}

}  // namespace halo::config
