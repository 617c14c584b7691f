#pragma once

#include <array>
#include <charconv>
#include <string>

#include <json.hpp>

#include "whitekit/metrics.hpp"
#include "whitekit/probes.hpp"

namespace whitekit {

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const FeatureReport& r) {
  ordered_json j;
  j["n"] = r.n;
  j["f"] = r.f;
  j["mean_abs_corr"] = r.mean_abs_corr;
  j["mean_std"] = r.mean_std;
  j["anisotropy"] = r.anisotropy;
  j["anisotropy_centered"] =
      r.anisotropy_centered ? ordered_json(*r.anisotropy_centered) : ordered_json(nullptr);
  j["numerical_rank"] = r.numerical_rank;
  j["singular_values"] = r.singular_values;
  return j;
}

inline ordered_json to_json(const ProbeScores& s) {
  ordered_json j;
  j["top1"] = s.top1;
  j["top5"] = s.top5;
  return j;
}

/// Shortest round-trip decimal form, for CSV cells.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

}  // namespace whitekit
