#include "sitsr/data/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "sitsr/errors.hpp"

namespace sitsr {

using nlohmann::json;

namespace {

json stats_to_json(const std::vector<ChannelStats>& v) {
  json arr = json::array();
  for (const auto& s : v) arr.push_back({{"lo", s.lo}, {"hi", s.hi}});
  return arr;
}

std::vector<ChannelStats> stats_from_json(const json& arr) {
  std::vector<ChannelStats> out;
  for (const auto& s : arr) out.push_back({s.at("lo").get<double>(), s.at("hi").get<double>()});
  return out;
}

}  // namespace

void save_norm_stats(const std::string& path, const NormStats& stats) {
  json doc = {{"lr", stats_to_json(stats.lr)}, {"hr", stats_to_json(stats.hr)}};
  std::ofstream out(path);
  if (!out) throw StateError("save_norm_stats: cannot open '" + path + "'");
  out << doc.dump(1) << "\n";
}

NormStats load_norm_stats(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StateError("load_norm_stats: cannot open '" + path + "'");
  json doc;
  in >> doc;
  NormStats s;
  s.lr = stats_from_json(doc.at("lr"));
  s.hr = stats_from_json(doc.at("hr"));
  return s;
}

Raster percentile_normalize(const Raster& r, const std::vector<ChannelStats>& stats) {
  if (static_cast<int>(stats.size()) != r.c)
    throw ConfigError("percentile_normalize: stats channel count mismatch");
  for (const auto& s : stats)
    if (!(s.lo < s.hi)) throw ConfigError("percentile_normalize: degenerate stats (lo >= hi)");

  Raster out(r.c, r.h, r.w, ValueRange::unit);
  out.channels = r.channels;
  const size_t plane = static_cast<size_t>(r.h) * r.w;
  for (int c = 0; c < r.c; ++c) {
    const double lo = stats[static_cast<size_t>(c)].lo;
    const double inv = 1.0 / (stats[static_cast<size_t>(c)].hi - lo);
    const float* src = r.v.data() + static_cast<size_t>(c) * plane;
    float* dst = out.v.data() + static_cast<size_t>(c) * plane;
    for (size_t i = 0; i < plane; ++i)
      dst[i] = std::clamp(static_cast<float>((src[i] - lo) * inv), 0.0f, 1.0f);
  }
  return out;
}

double percentile_of(std::vector<float>& values, double pct) {
  if (values.empty()) throw DomainError("percentile_of: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = pct / 100.0 * (static_cast<double>(values.size()) - 1.0);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return (1.0 - frac) * values[lo] + frac * values[hi];
}

}  // namespace sitsr
