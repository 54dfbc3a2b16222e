#include "sitsr/core/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sitsr/errors.hpp"

namespace sitsr {

std::string to_string(ValueRange r) {
  return r == ValueRange::unit ? "unit" : "byte_scale";
}

ValueRange value_range_from_string(const std::string& s) {
  if (s == "unit") return ValueRange::unit;
  if (s == "byte_scale") return ValueRange::byte_scale;
  throw DomainError("unknown value_range '" + s + "'");
}

std::vector<std::string> Raster::default_channel_labels(int c) {
  if (c == 3) return {"R", "G", "B"};
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(std::max(c, 0)));
  for (int i = 0; i < c; ++i) out.push_back("C" + std::to_string(i));
  return out;
}

Raster clip_unit(const Raster& r) {
  Raster out = r;
  for (auto& x : out.v) x = std::clamp(x, 0.0f, 1.0f);
  return out;
}

namespace {

bool all_finite(const Raster& r) {
  return std::all_of(r.v.begin(), r.v.end(), [](float x) { return std::isfinite(x); });
}

}  // namespace

std::vector<Violation> validate_sample(const SRSample& sample, int slack_days) {
  std::vector<Violation> out;
  const auto& series = sample.lr_series;

  if (series.frames.empty()) {
    out.push_back({"lr_series.frames", "T >= 1"});
    return out;
  }

  const Raster& first = series.frames.front().raster;
  if (first.c < 1 || first.h < 1 || first.w < 1)
    out.push_back({"lr_series.frames[0].raster", "C,H,W >= 1"});

  for (size_t k = 0; k < series.frames.size(); ++k) {
    const Raster& r = series.frames[k].raster;
    const std::string field = "lr_series.frames[" + std::to_string(k) + "].raster";
    if (!r.same_shape(first))
      out.push_back({field, "all frames share C,H,W"});
    if (r.range != first.range)
      out.push_back({field, "all frames share value_range"});
    if (!all_finite(r))
      out.push_back({field, "all values finite"});
  }

  if (sample.hr.c < 1 || sample.hr.h < 1 || sample.hr.w < 1)
    out.push_back({"hr", "C,H,W >= 1"});
  if (!all_finite(sample.hr))
    out.push_back({"hr", "all values finite"});

  if (sample.scale < 1) {
    out.push_back({"scale", "scale >= 1"});
  } else {
    if (sample.hr.h != sample.scale * first.h)
      out.push_back({"hr.h", "hr.H == scale * lr.H"});
    if (sample.hr.w != sample.scale * first.w)
      out.push_back({"hr.w", "hr.W == scale * lr.W"});
  }
  if (sample.hr.c != first.c)
    out.push_back({"hr.c", "hr.C == lr.C"});

  int32_t lo = series.frames.front().time.epoch_day;
  int32_t hi = lo;
  for (const auto& f : series.frames) {
    lo = std::min(lo, f.time.epoch_day);
    hi = std::max(hi, f.time.epoch_day);
  }
  if (series.t_ref.epoch_day < lo - slack_days || series.t_ref.epoch_day > hi + slack_days)
    out.push_back({"lr_series.t_ref", "t_ref within [min t_k - slack, max t_k + slack]"});

  return out;
}

}  // namespace sitsr
