#include "sitsr/metrics/evaluate.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "sitsr/data/resample.hpp"
#include "sitsr/errors.hpp"
#include "sitsr/parallel.hpp"
#include "sitsr/rng.hpp"

namespace sitsr {

using nlohmann::json;

int stratum_of(int64_t gap_days) {
  if (gap_days < 10) return 0;
  if (gap_days <= 30) return 1;
  return 2;
}

MetricAggregates aggregate(const std::vector<SampleMetrics>& samples) {
  MetricAggregates a;
  a.count = samples.size();
  if (samples.empty()) return a;
  for (const auto& s : samples) {
    a.mae += s.mae;
    a.shift_mae += s.shift_mae;
    a.rmse += s.rmse;
    a.psnr += s.psnr;
    a.ssim += s.ssim;
    a.perceptual += s.perceptual;
  }
  const double n = static_cast<double>(samples.size());
  a.mae /= n;
  a.shift_mae /= n;
  a.rmse /= n;
  a.psnr /= n;
  a.ssim /= n;
  a.perceptual /= n;
  return a;
}

namespace {

Raster to_byte_scale(const Raster& unit) {
  Raster out = clip_unit(unit);
  for (auto& v : out.v) v *= 255.0f;
  out.range = ValueRange::byte_scale;
  return out;
}

const char* kStratumLabels[3] = {"<10", "10-30", ">30"};

}  // namespace

MetricsReport evaluate(const SRModel& model, const Dataset& dataset, const NormStats& stats,
                       const EvalConfig& cfg) {
  if (dataset.size() == 0) throw DomainError("evaluate: empty dataset");
  auto indices = dataset.manifest().indices_of(cfg.split);
  if (indices.empty()) throw DomainError("evaluate: empty split");
  if (cfg.max_samples > 0 && indices.size() > cfg.max_samples)
    indices.resize(cfg.max_samples);

  {
    // Scale compatibility check against the first sample.
    const StoredSample probe = dataset.load(indices.front());
    if (probe.sample.scale != model.spec().scale)
      throw ConfigError("evaluate: dataset scale != model scale");
  }

  const FeatureExtractor extractor = builtin_feature_extractor();
  MetricsReport report;
  report.model_kind = to_string(model.spec().kind);
  report.scale = model.spec().scale;

  std::vector<int> lengths = cfg.series_lengths;
  if (lengths.empty()) lengths.push_back(0);

  for (int n_frames : lengths) {
    ReportEntry entry;
    entry.series_length = n_frames;
    entry.per_sample.resize(indices.size());

    parallel_for(indices.size(), [&](size_t i) {
      const size_t rec_index = indices[i];
      const StoredSample stored = dataset.load(rec_index);
      const SRSample prepared = prepare_sample(stored.sample, stats, cfg.pipeline);

      TimedSeries series = prepared.lr_series;
      if (n_frames > 0) series = truncate_series(series, n_frames);
      const int closest = closest_frame(series);
      const int64_t gap =
          std::abs(days_between(series.t_ref, series.frames[static_cast<size_t>(closest)].time));
      if (is_sisr(model.spec().kind)) {
        TimedSeries single;
        single.t_ref = series.t_ref;
        single.frames.push_back(series.frames[static_cast<size_t>(closest)]);
        series = single;
      }

      const Raster sr = model.super_resolve(series, mix_seed(cfg.seed, rec_index));
      const Raster sr_byte = to_byte_scale(sr);
      const Raster hr_byte = to_byte_scale(prepared.hr);

      SampleMetrics m;
      m.index = rec_index;
      m.block_id = prepared.block_id;
      m.gap_days = gap;
      m.mae = mae(sr_byte, hr_byte);
      m.shift_mae = shift_mae(sr_byte, hr_byte, cfg.shift);
      m.rmse = rmse(sr_byte, hr_byte);
      m.psnr = psnr(sr_byte, hr_byte);
      m.ssim = ssim(sr_byte, hr_byte);
      m.perceptual = perceptual_distance(sr_byte, hr_byte, extractor);
      entry.per_sample[i] = m;
    }, cfg.threads);

    entry.aggregates = aggregate(entry.per_sample);
    for (int s = 0; s < 3; ++s) {
      std::vector<SampleMetrics> bucket;
      for (const auto& m : entry.per_sample)
        if (stratum_of(m.gap_days) == s) bucket.push_back(m);
      entry.strata[static_cast<size_t>(s)].label = kStratumLabels[s];
      entry.strata[static_cast<size_t>(s)].agg = aggregate(bucket);
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

namespace {

json num_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double num_from(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

json agg_to_json(const MetricAggregates& a) {
  return {{"count", a.count},          {"mae", num_or_null(a.mae)},
          {"shift_mae", num_or_null(a.shift_mae)}, {"rmse", num_or_null(a.rmse)},
          {"psnr", num_or_null(a.psnr)},           {"ssim", num_or_null(a.ssim)},
          {"perceptual", num_or_null(a.perceptual)}};
}

MetricAggregates agg_from_json(const json& j) {
  MetricAggregates a;
  a.count = j.at("count").get<size_t>();
  a.mae = num_from(j.at("mae"));
  a.shift_mae = num_from(j.at("shift_mae"));
  a.rmse = num_from(j.at("rmse"));
  a.psnr = num_from(j.at("psnr"));
  a.ssim = num_from(j.at("ssim"));
  a.perceptual = num_from(j.at("perceptual"));
  return a;
}

}  // namespace

void save_report_json(const std::string& path, const MetricsReport& report) {
  json entries = json::array();
  for (const auto& e : report.entries) {
    json per_sample = json::array();
    for (const auto& m : e.per_sample)
      per_sample.push_back({{"index", m.index},
                            {"block_id", m.block_id},
                            {"gap_days", m.gap_days},
                            {"mae", num_or_null(m.mae)},
                            {"shift_mae", num_or_null(m.shift_mae)},
                            {"rmse", num_or_null(m.rmse)},
                            {"psnr", num_or_null(m.psnr)},
                            {"ssim", num_or_null(m.ssim)},
                            {"perceptual", num_or_null(m.perceptual)}});
    json strata = json::array();
    for (const auto& s : e.strata)
      strata.push_back({{"label", s.label}, {"aggregates", agg_to_json(s.agg)}});
    entries.push_back({{"series_length", e.series_length},
                       {"aggregates", agg_to_json(e.aggregates)},
                       {"strata", strata},
                       {"per_sample", per_sample}});
  }
  json doc = {{"format", "sitsr-report-v1"},
              {"model", report.model_kind},
              {"scale", report.scale},
              {"entries", entries}};
  std::ofstream out(path);
  if (!out) throw StateError("save_report_json: cannot open '" + path + "'");
  out << doc.dump(1) << "\n";
}

MetricsReport load_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StateError("load_report_json: cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DomainError("load_report_json: malformed report: " + std::string(e.what()));
  }
  MetricsReport r;
  try {
    r.model_kind = doc.at("model").get<std::string>();
    r.scale = doc.at("scale").get<int>();
    for (const auto& e : doc.at("entries")) {
      ReportEntry entry;
      entry.series_length = e.at("series_length").get<int>();
      entry.aggregates = agg_from_json(e.at("aggregates"));
      size_t si = 0;
      for (const auto& s : e.at("strata")) {
        if (si >= 3) break;
        entry.strata[si].label = s.at("label").get<std::string>();
        entry.strata[si].agg = agg_from_json(s.at("aggregates"));
        ++si;
      }
      for (const auto& m : e.at("per_sample")) {
        SampleMetrics sm;
        sm.index = m.at("index").get<size_t>();
        sm.block_id = m.at("block_id").get<int64_t>();
        sm.gap_days = m.at("gap_days").get<int64_t>();
        sm.mae = num_from(m.at("mae"));
        sm.shift_mae = num_from(m.at("shift_mae"));
        sm.rmse = num_from(m.at("rmse"));
        sm.psnr = num_from(m.at("psnr"));
        sm.ssim = num_from(m.at("ssim"));
        sm.perceptual = num_from(m.at("perceptual"));
        entry.per_sample.push_back(sm);
      }
      r.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw DomainError("load_report_json: malformed report: " + std::string(e.what()));
  }
  return r;
}

void save_report_csv(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw StateError("save_report_csv: cannot open '" + path + "'");
  out << "model,series_length,stratum,count,mae,shift_mae,rmse,psnr,ssim,perceptual\n";
  const auto row = [&](int n, const std::string& stratum, const MetricAggregates& a) {
    out << report.model_kind << "," << n << "," << stratum << "," << a.count << "," << a.mae
        << "," << a.shift_mae << "," << a.rmse << "," << a.psnr << "," << a.ssim << ","
        << a.perceptual << "\n";
  };
  for (const auto& e : report.entries) {
    row(e.series_length, "all", e.aggregates);
    for (const auto& s : e.strata) row(e.series_length, s.label, s.agg);
  }
}

}  // namespace sitsr
