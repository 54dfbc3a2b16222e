#include "sitsr/data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "sitsr/data/resample.hpp"
#include "sitsr/errors.hpp"
#include "sitsr/parallel.hpp"

namespace sitsr {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
  if (lr_size < 8) throw ConfigError("synth: lr_size must be >= 8");
  if (scale != 2 && scale != 4 && scale != 8) throw ConfigError("synth: scale in {2,4,8}");
  if (count < 1) throw ConfigError("synth: count must be >= 1");
  if (t_min < 1 || t_max < t_min) throw ConfigError("synth: bad series length bounds");
  if (gap_min < 1 || gap_max < gap_min) throw ConfigError("synth: bad gap bounds");
  for (double p : {long_gap_prob, mid_ref_prob, far_ref_prob, cloud_prob})
    if (p < 0.0 || p > 1.0) throw ConfigError("synth: probabilities must be in [0,1]");
  if (mid_ref_prob + far_ref_prob > 1.0)
    throw ConfigError("synth: mid_ref_prob + far_ref_prob must be <= 1");
  if (samples_per_block < 1) throw ConfigError("synth: samples_per_block must be >= 1");
  ratios.validate();
}

namespace {

// Drift headroom: static values are clamped so that |drift| <= kHeadroom
// keeps every render inside the unit range.
constexpr double kHeadroom = 0.18;

struct Scene {
  Raster static_field;  // S(x, t_ref), HR grid
  Raster dynamics;      // per-day drift D(x), HR grid
};

Raster render_scene(const Scene& scene, int64_t dt_days) {
  Raster out = scene.static_field;
  for (size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = static_cast<float>(out.v[i] +
                                  static_cast<double>(dt_days) * scene.dynamics.v[i]);
  return out;
}

Scene make_scene(Rng& rng, int hr, double dynamics_rate, int64_t max_abs_dt) {
  Scene scene{Raster(3, hr, hr), Raster(3, hr, hr)};

  // Smooth base: coarse random grid upsampled bicubically.
  const int coarse = 5;
  Raster grid(3, coarse, coarse);
  for (auto& v : grid.v) v = static_cast<float>(rng.uniform(0.25, 0.75));
  Raster base = bicubic_resample(grid, static_cast<double>(hr) / coarse);
  if (base.h != hr || base.w != hr) {
    Raster fixed(3, hr, hr);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < hr; ++y)
        for (int x = 0; x < hr; ++x)
          fixed.at(c, y, x) = base.at(c, std::min(y, base.h - 1), std::min(x, base.w - 1));
    base = std::move(fixed);
  }

  // Piecewise-constant parcels from a Voronoi partition.
  const int n_parcels = static_cast<int>(rng.randint(6, 12));
  std::vector<double> px(static_cast<size_t>(n_parcels)), py(static_cast<size_t>(n_parcels));
  std::vector<std::array<double, 3>> offset(static_cast<size_t>(n_parcels));
  std::vector<std::array<double, 3>> rate(static_cast<size_t>(n_parcels));
  const double rate_cap =
      max_abs_dt > 0 ? std::min(dynamics_rate, kHeadroom / static_cast<double>(max_abs_dt))
                     : dynamics_rate;
  for (int p = 0; p < n_parcels; ++p) {
    px[static_cast<size_t>(p)] = rng.uniform(0.0, hr);
    py[static_cast<size_t>(p)] = rng.uniform(0.0, hr);
    for (int c = 0; c < 3; ++c) offset[static_cast<size_t>(p)][static_cast<size_t>(c)] = rng.uniform(-0.12, 0.12);
    if (rng.uniform() < 0.5) {
      const double m = rng.uniform(0.3, 1.0) * rate_cap;
      if (rng.uniform() < 0.5) {
        // "Greening" pattern: vegetation index drifts up.
        rate[static_cast<size_t>(p)] = {-0.6 * m, m, -0.3 * m};
      } else {
        rate[static_cast<size_t>(p)] = {rng.uniform(-m, m), rng.uniform(-m, m),
                                        rng.uniform(-m, m)};
      }
    } else {
      rate[static_cast<size_t>(p)] = {0.0, 0.0, 0.0};
    }
  }

  for (int y = 0; y < hr; ++y)
    for (int x = 0; x < hr; ++x) {
      int best = 0;
      double best_d = 1e30;
      for (int p = 0; p < n_parcels; ++p) {
        const double dx = x - px[static_cast<size_t>(p)], dy = y - py[static_cast<size_t>(p)];
        const double d = dx * dx + dy * dy;
        if (d < best_d) {
          best_d = d;
          best = p;
        }
      }
      for (int c = 0; c < 3; ++c) {
        const double v = base.at(c, y, x) + offset[static_cast<size_t>(best)][static_cast<size_t>(c)];
        scene.static_field.at(c, y, x) =
            static_cast<float>(std::clamp(v, kHeadroom + 0.02, 1.0 - kHeadroom - 0.02));
        scene.dynamics.at(c, y, x) =
            static_cast<float>(rate[static_cast<size_t>(best)][static_cast<size_t>(c)]);
      }
    }
  return scene;
}

}  // namespace

void paint_cloud(Raster& raster, Raster& cloud_mask, Rng& rng, double min_frac,
                 double max_frac) {
  const double frac = rng.uniform(min_frac, max_frac);
  const double area = frac * raster.h * raster.w;
  const double aspect = rng.uniform(0.5, 2.0);
  const double a = std::sqrt(area / M_PI * aspect);
  const double b = std::sqrt(area / M_PI / aspect);
  const double cx = rng.uniform(0.0, raster.w);
  const double cy = rng.uniform(0.0, raster.h);
  const double base_val = rng.uniform(0.92, 1.0);

  for (int y = 0; y < raster.h; ++y)
    for (int x = 0; x < raster.w; ++x) {
      const double q = ((x - cx) / a) * ((x - cx) / a) + ((y - cy) / b) * ((y - cy) / b);
      // Soft edge between q = 0.7 and q = 1.3.
      const double m = std::clamp((1.3 - q) / 0.6, 0.0, 1.0);
      if (m <= 0.0) continue;
      for (int c = 0; c < raster.c; ++c) {
        const float v = raster.at(c, y, x);
        raster.at(c, y, x) = static_cast<float>((1.0 - m) * v + m * base_val);
      }
      cloud_mask.at(0, y, x) = std::max(cloud_mask.at(0, y, x), static_cast<float>(m));
    }
}

StoredSample synth_sample(const SynthConfig& cfg, int index) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(index)));
  const int hr = cfg.lr_size * cfg.scale;

  // Acquisition dates with irregular gaps.
  const int frames = static_cast<int>(rng.randint(cfg.t_min, cfg.t_max));
  std::vector<int32_t> dates(static_cast<size_t>(frames));
  dates[0] = static_cast<int32_t>(17500 + rng.randint(0, 2000));
  for (int k = 1; k < frames; ++k) {
    int gap = static_cast<int>(rng.randint(cfg.gap_min, cfg.gap_max));
    if (rng.uniform() < cfg.long_gap_prob)
      gap += static_cast<int>(rng.randint(cfg.long_gap_min, cfg.long_gap_max));
    dates[static_cast<size_t>(k)] = dates[static_cast<size_t>(k - 1)] + gap;
  }

  // The reference sits near the middle of the span (the HR acquisition is
  // interior to the LR series by construction), with a mild jitter.
  const int32_t span = dates.back() - dates.front();
  const int32_t mid = dates.front() + span / 2;
  const int32_t jitter = span >= 5 ? static_cast<int32_t>(rng.randint(-span / 5, span / 5)) : 0;
  int32_t t_ref = mid + jitter;
  // Optionally clear an acquisition hole around the reference so the dataset
  // covers all time-gap strata. Frames inside the hole are pushed out with a
  // biased coin, which leaves most far-reference series lopsided in time:
  // date-blind fusion then inherits a drift bias that date-aware attention
  // can interpolate away.
  const double p = rng.uniform();
  int radius = 0;
  if (p < cfg.far_ref_prob)
    radius = static_cast<int>(rng.randint(31, 55));
  else if (p < cfg.far_ref_prob + cfg.mid_ref_prob)
    radius = static_cast<int>(rng.randint(10, 30));
  if (radius > 0) {
    const double left_prob = rng.uniform() < 0.5 ? 0.2 : 0.8;
    for (auto& d : dates) {
      if (std::abs(d - t_ref) >= radius) continue;
      const int extra = static_cast<int>(rng.randint(0, 4));
      d = rng.uniform() < left_prob ? t_ref - radius - extra : t_ref + radius + extra;
    }
  }

  int64_t max_abs_dt = 0;
  for (auto d : dates) max_abs_dt = std::max<int64_t>(max_abs_dt, std::abs(d - t_ref));
  const Scene scene = make_scene(rng, hr, cfg.dynamics_rate, max_abs_dt);

  StoredSample out;
  out.sample.block_id = index / cfg.samples_per_block;
  out.sample.scale = cfg.scale;
  out.sample.hr = render_scene(scene, 0);
  out.sample.lr_series.t_ref = Timestamp{t_ref};
  out.dynamics = scene.dynamics;

  for (int k = 0; k < frames; ++k) {
    const int64_t dt = dates[static_cast<size_t>(k)] - t_ref;
    Raster frame_hr = render_scene(scene, dt);
    Raster lr = bicubic_downsample(gaussian_blur(frame_hr, cfg.blur_sigma), cfg.scale);

    const double gain = rng.uniform(1.0 - cfg.gain_jitter, 1.0 + cfg.gain_jitter);
    const double bias = rng.uniform(-cfg.bias_jitter, cfg.bias_jitter);
    for (auto& v : lr.v)
      v = static_cast<float>(gain * v + bias + cfg.noise_sigma * rng.normal());

    Raster mask(1, lr.h, lr.w);
    if (rng.uniform() < cfg.cloud_prob) {
      const int blobs = static_cast<int>(rng.randint(1, 2));
      for (int i = 0; i < blobs; ++i)
        paint_cloud(lr, mask, rng, cfg.cloud_min_frac, cfg.cloud_max_frac);
    }
    out.cloud_masks.push_back(std::move(mask));
    out.sample.lr_series.frames.push_back({std::move(lr), Timestamp{dates[static_cast<size_t>(k)]}});
  }
  return out;
}

DatasetManifest synth_generate(const SynthConfig& cfg, const std::string& out_dir,
                               int threads) {
  cfg.validate();
  fs::create_directories(out_dir);

  std::vector<ManifestRecord> records(static_cast<size_t>(cfg.count));
  parallel_for(static_cast<size_t>(cfg.count), [&](size_t i) {
    const StoredSample s = synth_sample(cfg, static_cast<int>(i));
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%05zu", i);
    save_sample(out_dir + "/" + name, s);
    ManifestRecord rec;
    rec.path = name;
    rec.block_id = s.sample.block_id;
    rec.t_ref = s.sample.lr_series.t_ref;
    for (const auto& f : s.sample.lr_series.frames) rec.timestamps.push_back(f.time);
    records[i] = std::move(rec);
  }, threads);

  DatasetManifest manifest;
  manifest.records = std::move(records);
  std::vector<int64_t> blocks;
  for (const auto& r : manifest.records) blocks.push_back(r.block_id);
  apply_split(manifest, block_split(blocks, cfg.ratios, cfg.seed));
  save_manifest(out_dir + "/manifest.json", manifest);
  return manifest;
}

}  // namespace sitsr
