#include "sitsr/data/dataset.hpp"

#include <algorithm>

#include "sitsr/data/histmatch.hpp"
#include "sitsr/data/resample.hpp"
#include "sitsr/errors.hpp"
#include "sitsr/parallel.hpp"

namespace sitsr {

Dataset Dataset::open(const std::string& dir) {
  Dataset ds;
  ds.root_ = dir;
  ds.manifest_ = load_manifest(dir + "/manifest.json");
  ds.cache_.resize(ds.manifest_.records.size());
  return ds;
}

StoredSample Dataset::load(size_t i) const {
  if (i >= manifest_.records.size()) throw DomainError("dataset: index out of range");
  if (cache_[i]) return *cache_[i];
  return load_sample(root_ + "/" + manifest_.records[i].path);
}

void Dataset::preload(Split split) {
  const auto idx = manifest_.indices_of(split);
  parallel_for(idx.size(), [&](size_t k) {
    const size_t i = idx[k];
    if (!cache_[i])
      cache_[i] = std::make_shared<const StoredSample>(
          load_sample(root_ + "/" + manifest_.records[i].path));
  });
}

void Dataset::preload_all() {
  preload(Split::train);
  preload(Split::val);
  preload(Split::test);
}

namespace {

void subsample_channel(const Raster& r, int c, int64_t stride, std::vector<float>& out) {
  const size_t plane = static_cast<size_t>(r.h) * r.w;
  const float* src = r.v.data() + static_cast<size_t>(c) * plane;
  for (size_t i = 0; i < plane; i += static_cast<size_t>(stride)) out.push_back(src[i]);
}

}  // namespace

NormStats compute_norm_stats(const Dataset& ds, double lo_pct, double hi_pct,
                             int64_t max_pixels) {
  const auto train = ds.manifest().indices_of(Split::train);
  if (train.empty()) throw DomainError("compute_norm_stats: empty training split");

  // Probe the first sample for geometry, then pick a deterministic stride
  // that caps the collected values.
  const StoredSample probe = ds.load(train.front());
  const int channels = probe.sample.hr.c;
  const int64_t lr_px_per_sample = static_cast<int64_t>(probe.sample.lr_series.frames.size()) *
                                   probe.sample.lr_series.frames.front().raster.h *
                                   probe.sample.lr_series.frames.front().raster.w;
  const int64_t hr_px_per_sample = static_cast<int64_t>(probe.sample.hr.h) * probe.sample.hr.w;
  const auto stride_for = [&](int64_t per_sample) {
    const int64_t total = per_sample * static_cast<int64_t>(train.size());
    return std::max<int64_t>(1, total / max_pixels + 1);
  };
  const int64_t lr_stride = stride_for(lr_px_per_sample);
  const int64_t hr_stride = stride_for(hr_px_per_sample);

  NormStats stats;
  stats.lr.resize(static_cast<size_t>(channels));
  stats.hr.resize(static_cast<size_t>(channels));
  std::vector<std::vector<float>> lr_vals(static_cast<size_t>(channels));
  std::vector<std::vector<float>> hr_vals(static_cast<size_t>(channels));

  for (size_t i : train) {
    const StoredSample s = ds.load(i);
    for (int c = 0; c < channels; ++c) {
      for (const auto& f : s.sample.lr_series.frames)
        subsample_channel(f.raster, c, lr_stride, lr_vals[static_cast<size_t>(c)]);
      subsample_channel(s.sample.hr, c, hr_stride, hr_vals[static_cast<size_t>(c)]);
    }
  }

  for (int c = 0; c < channels; ++c) {
    stats.lr[static_cast<size_t>(c)].lo = percentile_of(lr_vals[static_cast<size_t>(c)], lo_pct);
    stats.lr[static_cast<size_t>(c)].hi = percentile_of(lr_vals[static_cast<size_t>(c)], hi_pct);
    stats.hr[static_cast<size_t>(c)].lo = percentile_of(hr_vals[static_cast<size_t>(c)], lo_pct);
    stats.hr[static_cast<size_t>(c)].hi = percentile_of(hr_vals[static_cast<size_t>(c)], hi_pct);
    if (!(stats.lr[static_cast<size_t>(c)].lo < stats.lr[static_cast<size_t>(c)].hi) ||
        !(stats.hr[static_cast<size_t>(c)].lo < stats.hr[static_cast<size_t>(c)].hi))
      throw ConfigError("compute_norm_stats: degenerate percentiles on channel " +
                        std::to_string(c));
  }
  return stats;
}

SRSample prepare_sample(const SRSample& raw, const NormStats& stats,
                        const PipelineConfig& cfg) {
  SRSample out;
  out.block_id = raw.block_id;
  out.scale = raw.scale;
  out.lr_series.t_ref = raw.lr_series.t_ref;
  for (const auto& f : raw.lr_series.frames)
    out.lr_series.frames.push_back({percentile_normalize(f.raster, stats.lr), f.time});
  out.hr = percentile_normalize(raw.hr, stats.hr);
  if (cfg.hist_match) {
    const int k = closest_frame(out.lr_series);
    out.hr = histogram_match(out.hr, out.lr_series.frames[static_cast<size_t>(k)].raster);
  }
  return out;
}

}  // namespace sitsr
