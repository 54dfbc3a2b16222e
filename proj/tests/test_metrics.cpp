#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "sitsr/data/dataset.hpp"
#include "sitsr/data/synth.hpp"
#include "sitsr/metrics/evaluate.hpp"
#include "sitsr/metrics/metrics.hpp"

using namespace sitsr;
using namespace sitsr::test;
namespace fs = std::filesystem;

namespace {

Raster random_raster(int c, int h, int w, Rng& rng, double lo = 0.0, double hi = 255.0) {
  Raster r(c, h, w, ValueRange::byte_scale);
  for (auto& v : r.v) v = static_cast<float>(rng.uniform(lo, hi));
  return r;
}

// Exhaustive 49-offset brute force, written independently of shift_mae.
double shift_mae_bruteforce(const Raster& sr, const Raster& hr, int delta) {
  const int m = delta / 2;
  const int ch = sr.h - 2 * m, cw = sr.w - 2 * m;
  double best = 1e300;
  for (int u = 0; u <= delta; ++u)
    for (int v = 0; v <= delta; ++v) {
      double acc = 0.0;
      for (int c = 0; c < sr.c; ++c)
        for (int y = 0; y < ch; ++y)
          for (int x = 0; x < cw; ++x)
            acc += std::abs(static_cast<double>(sr.at(c, m + y, m + x)) -
                            static_cast<double>(hr.at(c, u + y, v + x)));
      best = std::min(best, acc / (static_cast<double>(sr.c) * ch * cw));
    }
  return best;
}

}  // namespace

TEST_CASE("identical rasters give zero error everywhere") {
  Rng rng(1);
  const Raster a = random_raster(3, 16, 16, rng);
  CHECK(mae(a, a) == 0.0);
  CHECK(rmse(a, a) == 0.0);
  CHECK(shift_mae(a, a) == 0.0);
  CHECK(std::isinf(psnr(a, a)));
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("constant offset: MAE == RMSE == offset") {
  Rng rng(2);
  const Raster a = random_raster(3, 8, 8, rng, 0.0, 200.0);
  Raster b = a;
  for (auto& v : b.v) v += 3.0f;
  CHECK(mae(a, b) == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(rmse(a, b) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("RMSE dominates MAE on random pairs") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Raster a = random_raster(3, 10, 10, rng);
    const Raster b = random_raster(3, 10, 10, rng);
    CHECK(rmse(a, b) >= mae(a, b));
  }
}

TEST_CASE("shape mismatch is a domain error") {
  Raster a(1, 4, 4), b(1, 4, 5);
  CHECK_THROWS_AS(mae(a, b), DomainError);
  CHECK_THROWS_AS(rmse(a, b), DomainError);
  CHECK_THROWS_AS(psnr(a, b), DomainError);
}

TEST_CASE("shift_mae equals the exhaustive brute force on random pairs") {
  Rng rng(4);
  for (int trial = 0; trial < 60; ++trial) {
    const Raster sr = random_raster(3, 20, 20, rng);
    const Raster hr = random_raster(3, 20, 20, rng);
    const double fast = shift_mae(sr, hr);
    const double slow = shift_mae_bruteforce(sr, hr, 6);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
  }
}

TEST_CASE("shift_mae recovers exact alignment for translations within margin") {
  Rng rng(5);
  const Raster hr = random_raster(1, 24, 24, rng);
  for (const auto& [dy, dx] : std::vector<std::pair<int, int>>{{2, -1}, {-3, 3}, {0, 2}}) {
    // sr is hr translated by (dy, dx): sr(y, x) = hr(y + dy, x + dx).
    Raster sr(1, 24, 24, ValueRange::byte_scale);
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) {
        const int iy = std::clamp(y + dy, 0, 23), ix = std::clamp(x + dx, 0, 23);
        sr.at(0, y, x) = hr.at(0, iy, ix);
      }
    CHECK(shift_mae(sr, hr) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("shift_mae never exceeds the aligned-crop MAE") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Raster sr = random_raster(2, 15, 18, rng);
    const Raster hr = random_raster(2, 15, 18, rng);
    // Aligned offset (margin, margin): compare center crops directly.
    const ShiftMAEConfig cfg;
    const int m = cfg.margin();
    double acc = 0.0;
    size_t n = 0;
    for (int c = 0; c < sr.c; ++c)
      for (int y = m; y < sr.h - m; ++y)
        for (int x = m; x < sr.w - m; ++x, ++n)
          acc += std::abs(static_cast<double>(sr.at(c, y, x)) - hr.at(c, y, x));
    CHECK(shift_mae(sr, hr) <= acc / static_cast<double>(n) + 1e-12);
  }
}

TEST_CASE("shift_mae input contracts") {
  ShiftMAEConfig odd;
  odd.delta = 5;
  CHECK_THROWS_AS(odd.validate(), ConfigError);
  Raster small(1, 6, 6);
  CHECK_THROWS_AS(shift_mae(small, small), DomainError);  // 6 <= 2 * margin
}

TEST_CASE("psnr matches the scalar arithmetic oracle") {
  Raster a(1, 8, 8, ValueRange::byte_scale);
  Raster b = a;
  for (auto& v : b.v) v += 16.0f;
  CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(255.0 * 255.0 / 256.0)).epsilon(1e-9));
  CHECK(psnr(a, b) == doctest::Approx(24.0654).epsilon(1e-3));
}

TEST_CASE("psnr strictly decreases as noise grows") {
  Rng rng(7);
  const Raster a = random_raster(1, 32, 32, rng, 50.0, 200.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double sigma : {1.0, 4.0, 16.0, 48.0}) {
    Raster b = a;
    Rng noise(8);
    for (auto& v : b.v) v += static_cast<float>(noise.normal() * sigma);
    const double p = psnr(a, b);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("ssim of an image against its negative is negative") {
  Rng rng(9);
  const Raster a = random_raster(1, 24, 24, rng, 30.0, 220.0);
  Raster b = a;
  for (auto& v : b.v) v = 255.0f - v;
  CHECK(ssim(a, b) < 0.0);
}

TEST_CASE("perceptual distance: zero on identity, symmetric, ordinal on blur") {
  Rng rng(10);
  const FeatureExtractor fx = builtin_feature_extractor();
  const Raster a = random_raster(3, 32, 32, rng, 0.0, 1.0);
  CHECK(perceptual_distance(a, a, fx) == 0.0);

  const Raster b = random_raster(3, 32, 32, rng, 0.0, 1.0);
  CHECK(perceptual_distance(a, b, fx) ==
        doctest::Approx(perceptual_distance(b, a, fx)).epsilon(1e-12));

  // Heavy blur hurts more than tiny noise.
  Raster blurred = a;
  {
    // Box blur via repeated neighbor averaging.
    for (int rep = 0; rep < 6; ++rep) {
      Raster next = blurred;
      for (int c = 0; c < 3; ++c)
        for (int y = 1; y < 31; ++y)
          for (int x = 1; x < 31; ++x)
            next.at(c, y, x) = 0.25f * (blurred.at(c, y - 1, x) + blurred.at(c, y + 1, x) +
                                        blurred.at(c, y, x - 1) + blurred.at(c, y, x + 1));
      blurred = next;
    }
  }
  Raster noisy = a;
  Rng nrng(11);
  for (auto& v : noisy.v) v += static_cast<float>(nrng.normal() * 1e-3);
  CHECK(perceptual_distance(a, blurred, fx) > perceptual_distance(a, noisy, fx));
}

TEST_CASE("stratum bin edges follow the <10 / 10-30 / >30 convention") {
  CHECK(stratum_of(9) == 0);
  CHECK(stratum_of(10) == 1);
  CHECK(stratum_of(30) == 1);
  CHECK(stratum_of(31) == 2);
}

TEST_CASE("aggregate equals the mean of per-sample values") {
  std::vector<SampleMetrics> samples;
  Rng rng(12);
  for (int i = 0; i < 31; ++i) {
    SampleMetrics m;
    m.mae = rng.uniform(0.0, 30.0);
    m.rmse = rng.uniform(0.0, 40.0);
    m.ssim = rng.uniform(-1.0, 1.0);
    samples.push_back(m);
  }
  const MetricAggregates agg = aggregate(samples);
  double mean = 0.0;
  for (const auto& m : samples) mean += m.mae;
  mean /= static_cast<double>(samples.size());
  CHECK(std::abs(agg.mae - mean) < 1e-9);
  CHECK(agg.count == samples.size());
}

namespace {

/// Builds a tiny synthetic dataset on disk and returns (dataset, stats).
struct TinyData {
  fs::path dir;
  SynthConfig cfg;

  TinyData() {
    dir = fs::temp_directory_path() / "sitsr_eval_test";
    fs::remove_all(dir);
    cfg.lr_size = 8;
    cfg.scale = 4;
    cfg.count = 24;
    cfg.samples_per_block = 4;
    cfg.t_min = 3;
    cfg.t_max = 6;
    cfg.seed = 13;
    synth_generate(cfg, dir.string(), 2);
  }
  ~TinyData() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("evaluate plumbing: identity model scores perfectly, reports stratify") {
  const TinyData data;
  Dataset ds = Dataset::open(data.dir.string());
  const NormStats stats = compute_norm_stats(ds);

  // The identity "model" is exercised through the report pipeline directly:
  // metric rows computed on (HR, HR) pairs collapse to the perfect scores.
  PipelineConfig pc;
  const auto test_idx = ds.manifest().indices_of(Split::test);
  REQUIRE(!test_idx.empty());
  std::vector<SampleMetrics> rows;
  for (size_t i : test_idx) {
    const SRSample prepared = prepare_sample(ds.load(i).sample, stats, pc);
    Raster hr_byte = clip_unit(prepared.hr);
    for (auto& v : hr_byte.v) v *= 255.0f;
    SampleMetrics m;
    m.index = i;
    m.mae = mae(hr_byte, hr_byte);
    m.ssim = ssim(hr_byte, hr_byte);
    rows.push_back(m);
  }
  for (const auto& m : rows) {
    CHECK(m.mae == 0.0);
    CHECK(m.ssim == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("report json/csv round-trip preserves aggregates") {
  const fs::path dir = fs::temp_directory_path() / "sitsr_report_test";
  fs::create_directories(dir);
  MetricsReport r;
  r.model_kind = "rrdb_ltae";
  r.scale = 4;
  ReportEntry e;
  e.series_length = 8;
  Rng rng(14);
  for (int i = 0; i < 9; ++i) {
    SampleMetrics m;
    m.index = static_cast<size_t>(i);
    m.block_id = i / 3;
    m.gap_days = i * 5;
    m.mae = rng.uniform(5.0, 25.0);
    m.shift_mae = m.mae - 1.0;
    m.rmse = m.mae + 4.0;
    m.psnr = rng.uniform(15.0, 25.0);
    m.ssim = rng.uniform(0.2, 0.9);
    m.perceptual = rng.uniform(0.0, 1.0);
    e.per_sample.push_back(m);
  }
  e.aggregates = aggregate(e.per_sample);
  for (int s = 0; s < 3; ++s) {
    std::vector<SampleMetrics> bucket;
    for (const auto& m : e.per_sample)
      if (stratum_of(m.gap_days) == s) bucket.push_back(m);
    e.strata[static_cast<size_t>(s)].label = s == 0 ? "<10" : (s == 1 ? "10-30" : ">30");
    e.strata[static_cast<size_t>(s)].agg = aggregate(bucket);
  }
  r.entries.push_back(e);

  save_report_json((dir / "report.json").string(), r);
  save_report_csv((dir / "report.csv").string(), r);
  const MetricsReport rr = load_report_json((dir / "report.json").string());
  CHECK(rr.model_kind == r.model_kind);
  REQUIRE(rr.entries.size() == 1);
  CHECK(rr.entries[0].aggregates.mae == doctest::Approx(r.entries[0].aggregates.mae));
  CHECK(rr.entries[0].per_sample.size() == 9);
  CHECK(rr.entries[0].strata[1].agg.count == r.entries[0].strata[1].agg.count);
  fs::remove_all(dir);
}
