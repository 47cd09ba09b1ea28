// Copyright (c) 2026 The HALO Project Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HALO_RUNTIME_ROUND_ROBIN_HPP
#define HALO_RUNTIME_ROUND_ROBIN_HPP

#include <cstdint>
#include <span>
#include <string_view>

#include "halo/status.hpp"

namespace halo::runtime {

/// Backend recommendation strategy. v1 knows a single token, "rr_scat":
/// successive calls cycle deterministically through the candidate list in
/// registration order.
class RoundRobin {
 public:
  /// Returns the index of the recommended candidate and advances the cursor.
  template <typename T>
  Result<size_t> recommend(std::span<const T> candidates) {
    using R = Result<size_t>;
    if (candidates.empty()) return R::failure(StatusCode::ErrNoResource);
    return R::success(static_cast<size_t>(cursor_++ % candidates.size()));
  }

  void reset() { cursor_ = 0; }

 private:
  uint64_t cursor_ = 0;
};

inline bool known_strategy(std::string_view token) {
  return token == "rr_scat";
}

}  // namespace halo::runtime

#endif  // HALO_RUNTIME_ROUND_ROBIN_HPP
