#pragma once

#include <string>
#include <vector>

#include "sitsr/core/timestamp.hpp"

namespace sitsr {

/// Value-range convention of a raster's samples.
enum class ValueRange { unit, byte_scale };

std::string to_string(ValueRange r);
ValueRange value_range_from_string(const std::string& s);

/// C x H x W float image patch, channel-major, immutable by convention once
/// built (see the concurrency notes in the docs).
struct Raster {
  int c = 0, h = 0, w = 0;
  std::vector<float> v;
  ValueRange range = ValueRange::unit;
  std::vector<std::string> channels;

  Raster() = default;
  Raster(int c_, int h_, int w_, ValueRange r = ValueRange::unit)
      : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, 0.0f), range(r) {
    channels = default_channel_labels(c_);
  }

  size_t size() const { return v.size(); }
  float& at(int ci, int yi, int xi) {
    return v[(static_cast<size_t>(ci) * h + yi) * w + xi];
  }
  float at(int ci, int yi, int xi) const {
    return v[(static_cast<size_t>(ci) * h + yi) * w + xi];
  }
  bool same_shape(const Raster& o) const { return c == o.c && h == o.h && w == o.w; }

  static std::vector<std::string> default_channel_labels(int c);
};

/// Clips every value into [0, 1]. Model outputs may stray outside the unit
/// range; metrics and exports always clip first.
Raster clip_unit(const Raster& r);

/// One dated frame of a series.
struct TimedFrame {
  Raster raster;
  Timestamp time;
};

/// Ordered (but not necessarily date-sorted) list of dated rasters plus the
/// reference timestamp the series is resolved against.
struct TimedSeries {
  std::vector<TimedFrame> frames;
  Timestamp t_ref;

  int length() const { return static_cast<int>(frames.size()); }
};

/// One supervised example: LR series, HR target, geographic block, scale.
struct SRSample {
  TimedSeries lr_series;
  Raster hr;
  int64_t block_id = 0;
  int scale = 4;
};

/// A named invariant violation; validation reports instead of throwing.
struct Violation {
  std::string field;
  std::string rule;
};

/// Checks every type invariant of the sample; empty result means valid.
/// slack_days bounds how far t_ref may sit outside the series span.
std::vector<Violation> validate_sample(const SRSample& sample, int slack_days = 60);

}  // namespace sitsr
