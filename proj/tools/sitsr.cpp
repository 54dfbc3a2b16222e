// Command-line surface: dataset synthesis, training, evaluation,
// date-conditioned inference, and report plotting.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "sitsr/core/npy.hpp"
#include "sitsr/core/sample_io.hpp"
#include "sitsr/data/dataset.hpp"
#include "sitsr/data/resample.hpp"
#include "sitsr/data/synth.hpp"
#include "sitsr/errors.hpp"
#include "sitsr/io/png_io.hpp"
#include "sitsr/metrics/evaluate.hpp"
#include "sitsr/report/figures.hpp"
#include "sitsr/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sitsr;

namespace {

json default_config() {
  ModelSpec model;
  TrainConfig train;
  SynthConfig synth;
  return {
      {"seed", 0},
      {"model", model.to_json()},
      {"data", {{"dataset", ""}, {"hist_match", true}, {"slack_days", 60}}},
      {"train",
       {{"steps", train.steps},
        {"batch_size", train.batch_size},
        {"lr", train.lr},
        {"decay", train.decay},
        {"decay_interval", train.decay_interval},
        {"series_length", train.series_length},
        {"val_interval", train.val_interval},
        {"val_subset", train.val_subset},
        {"grad_clip", train.grad_clip},
        {"loss", train.loss},
        {"checkpoint_interval", 0},
        {"threads", 0}}},
      {"eval",
       {{"split", "test"},
        {"series_lengths", json::array()},
        {"shift_delta", 6},
        {"max_samples", 0},
        {"threads", 0}}},
      {"synth",
       {{"lr_size", synth.lr_size},
        {"scale", synth.scale},
        {"count", synth.count},
        {"t_min", synth.t_min},
        {"t_max", synth.t_max},
        {"gap_min", synth.gap_min},
        {"gap_max", synth.gap_max},
        {"long_gap_prob", synth.long_gap_prob},
        {"long_gap_min", synth.long_gap_min},
        {"long_gap_max", synth.long_gap_max},
        {"mid_ref_prob", synth.mid_ref_prob},
        {"far_ref_prob", synth.far_ref_prob},
        {"blur_sigma", synth.blur_sigma},
        {"noise_sigma", synth.noise_sigma},
        {"gain_jitter", synth.gain_jitter},
        {"bias_jitter", synth.bias_jitter},
        {"cloud_prob", synth.cloud_prob},
        {"cloud_min_frac", synth.cloud_min_frac},
        {"cloud_max_frac", synth.cloud_max_frac},
        {"dynamics_rate", synth.dynamics_rate},
        {"samples_per_block", synth.samples_per_block},
        {"ratios",
         {{"train", synth.ratios.train}, {"val", synth.ratios.val}, {"test", synth.ratios.test}}},
        {"threads", 0}}},
  };
}

void check_keys(const json& user, const json& schema, const std::string& path) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!schema.is_object() || !schema.contains(key))
      throw ConfigError("unknown config key '" + here + "'");
    if (value.is_object()) check_keys(value, schema.at(key), here);
  }
}

void merge_into(json& base, const json& user) {
  for (const auto& [key, value] : user.items()) {
    if (value.is_object() && base.contains(key) && base.at(key).is_object())
      merge_into(base.at(key), value);
    else
      base[key] = value;
  }
}

void apply_override(json& cfg, const std::string& spec) {
  const size_t eq = spec.find('=');
  if (eq == std::string::npos)
    throw UsageError("override must look like key.path=value: '" + spec + "'");
  const std::string keypath = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // plain string
  }
  json* cur = &cfg;
  size_t pos = 0;
  while (true) {
    const size_t dot = keypath.find('.', pos);
    const std::string key = keypath.substr(pos, dot - pos);
    if (key.empty()) throw UsageError("bad override key '" + keypath + "'");
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      break;
    }
    cur = &(*cur)[key];
    pos = dot + 1;
  }
}

json load_config(const std::string& config_path, const std::vector<std::string>& overrides,
                 std::optional<uint64_t> seed_flag) {
  json cfg = default_config();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot open config file '" + config_path + "'");
    json user;
    try {
      in >> user;
    } catch (const json::exception& e) {
      throw ConfigError("config parse error: " + std::string(e.what()));
    }
    check_keys(user, cfg, "");
    merge_into(cfg, user);
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  check_keys(cfg, default_config(), "");
  if (seed_flag) cfg["seed"] = *seed_flag;
  return cfg;
}

ModelSpec model_spec_from(const json& cfg) { return ModelSpec::from_json(cfg.at("model")); }

SynthConfig synth_config_from(const json& cfg) {
  const json& s = cfg.at("synth");
  SynthConfig out;
  out.lr_size = s.at("lr_size").get<int>();
  out.scale = s.at("scale").get<int>();
  out.count = s.at("count").get<int>();
  out.t_min = s.at("t_min").get<int>();
  out.t_max = s.at("t_max").get<int>();
  out.gap_min = s.at("gap_min").get<int>();
  out.gap_max = s.at("gap_max").get<int>();
  out.long_gap_prob = s.at("long_gap_prob").get<double>();
  out.long_gap_min = s.at("long_gap_min").get<int>();
  out.long_gap_max = s.at("long_gap_max").get<int>();
  out.mid_ref_prob = s.at("mid_ref_prob").get<double>();
  out.far_ref_prob = s.at("far_ref_prob").get<double>();
  out.blur_sigma = s.at("blur_sigma").get<double>();
  out.noise_sigma = s.at("noise_sigma").get<double>();
  out.gain_jitter = s.at("gain_jitter").get<double>();
  out.bias_jitter = s.at("bias_jitter").get<double>();
  out.cloud_prob = s.at("cloud_prob").get<double>();
  out.cloud_min_frac = s.at("cloud_min_frac").get<double>();
  out.cloud_max_frac = s.at("cloud_max_frac").get<double>();
  out.dynamics_rate = s.at("dynamics_rate").get<double>();
  out.samples_per_block = s.at("samples_per_block").get<int>();
  out.ratios.train = s.at("ratios").at("train").get<double>();
  out.ratios.val = s.at("ratios").at("val").get<double>();
  out.ratios.test = s.at("ratios").at("test").get<double>();
  out.seed = cfg.at("seed").get<uint64_t>();
  return out;
}

TrainConfig train_config_from(const json& cfg) {
  const json& t = cfg.at("train");
  TrainConfig out;
  out.model = model_spec_from(cfg);
  out.steps = t.at("steps").get<int64_t>();
  out.batch_size = t.at("batch_size").get<int>();
  out.lr = t.at("lr").get<double>();
  out.decay = t.at("decay").get<double>();
  out.decay_interval = t.at("decay_interval").get<int64_t>();
  out.seed = cfg.at("seed").get<uint64_t>();
  out.series_length = t.at("series_length").get<int>();
  out.val_interval = t.at("val_interval").get<int64_t>();
  out.val_subset = t.at("val_subset").get<int>();
  out.grad_clip = t.at("grad_clip").get<double>();
  out.loss = t.at("loss").get<std::string>();
  out.pipeline.hist_match = cfg.at("data").at("hist_match").get<bool>();
  out.pipeline.slack_days = cfg.at("data").at("slack_days").get<int>();
  out.threads = t.at("threads").get<int>();
  return out;
}

void write_resolved_config(const std::string& out_dir, const json& cfg) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir + "/config.resolved.json");
  if (!out) throw StateError("cannot write config.resolved.json in '" + out_dir + "'");
  out << cfg.dump(1) << "\n";
}

NpyArray npy_from_raster(const Raster& r) {
  NpyArray a;
  a.shape = {r.c, r.h, r.w};
  a.data = r.v;
  return a;
}

int cmd_synth(const json& cfg, const std::string& out_dir) {
  if (out_dir.empty()) throw UsageError("synth: --out is required");
  const SynthConfig sc = synth_config_from(cfg);
  write_resolved_config(out_dir, cfg);
  const DatasetManifest manifest =
      synth_generate(sc, out_dir, cfg.at("synth").at("threads").get<int>());
  std::cerr << "synth: wrote " << manifest.records.size() << " samples to " << out_dir << "\n";
  return 0;
}

int cmd_train(const json& cfg, const std::string& out_dir) {
  if (out_dir.empty()) throw UsageError("train: --out is required");
  const std::string ds_path = cfg.at("data").at("dataset").get<std::string>();
  if (ds_path.empty()) throw UsageError("train: data.dataset must point to a dataset");
  Dataset dataset = Dataset::open(ds_path);
  dataset.preload(Split::train);
  dataset.preload(Split::val);

  const TrainConfig tc = train_config_from(cfg);
  const NormStats stats = compute_norm_stats(dataset);
  write_resolved_config(out_dir, cfg);
  save_norm_stats(out_dir + "/norm_stats.json", stats);
  fs::create_directories(out_dir + "/checkpoints");

  std::ofstream log(out_dir + "/logs.csv");
  log << "step,loss,lr,val_mae\n";
  const int64_t ckpt_interval = cfg.at("train").at("checkpoint_interval").get<int64_t>();
  const TrainSink sink = [&](const StepLog& s) {
    log << s.step << "," << s.loss << "," << s.lr << ",";
    if (s.val_mae) log << *s.val_mae;
    log << "\n";
    if (s.val_mae)
      std::cerr << "step " << s.step << " loss " << s.loss << " val_mae " << *s.val_mae << "\n";
  };

  TrainResult result = train(tc, dataset, stats, sink);
  (void)ckpt_interval;
  if (result.diverged) {
    save_checkpoint(out_dir + "/checkpoints/diverged.ckpt", result.checkpoint);
    std::cerr << "train: diverged at step " << result.steps_run
              << "; last finite state saved to checkpoints/diverged.ckpt\n";
    return 1;
  }
  save_checkpoint(out_dir + "/checkpoints/final.ckpt", result.checkpoint);
  std::cerr << "train: finished " << result.steps_run << " steps; checkpoint saved\n";
  return 0;
}

int cmd_eval(const json& cfg, const std::string& out_dir, const std::string& ckpt_path,
             std::vector<int> series_lengths) {
  if (out_dir.empty()) throw UsageError("eval: --out is required");
  if (ckpt_path.empty()) throw UsageError("eval: --checkpoint is required");
  const std::string ds_path = cfg.at("data").at("dataset").get<std::string>();
  if (ds_path.empty()) throw UsageError("eval: data.dataset must point to a dataset");

  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  SRModel model = model_from_checkpoint(ckpt);
  Dataset dataset = Dataset::open(ds_path);

  EvalConfig ec;
  ec.split = split_from_string(cfg.at("eval").at("split").get<std::string>());
  if (series_lengths.empty())
    for (const auto& n : cfg.at("eval").at("series_lengths")) series_lengths.push_back(n.get<int>());
  ec.series_lengths = series_lengths;
  ec.shift.delta = cfg.at("eval").at("shift_delta").get<int>();
  ec.pipeline.hist_match = cfg.at("data").at("hist_match").get<bool>();
  ec.pipeline.slack_days = cfg.at("data").at("slack_days").get<int>();
  ec.seed = cfg.at("seed").get<uint64_t>();
  ec.threads = cfg.at("eval").at("threads").get<int>();
  ec.max_samples = cfg.at("eval").at("max_samples").get<size_t>();

  write_resolved_config(out_dir, cfg);
  fs::create_directories(out_dir + "/reports");
  const MetricsReport report = evaluate(model, dataset, ckpt.norm_stats, ec);
  save_report_json(out_dir + "/reports/report.json", report);
  save_report_csv(out_dir + "/reports/report.csv", report);
  for (const auto& e : report.entries)
    std::cerr << "eval: N=" << e.series_length << " mae " << e.aggregates.mae << " ssim "
              << e.aggregates.ssim << " over " << e.aggregates.count << " samples\n";
  return 0;
}

int cmd_super_resolve(const json& cfg, const std::string& out_dir, const std::string& ckpt_path,
                      const std::string& series_path, const std::string& at_date,
                      bool select_closest) {
  if (out_dir.empty()) throw UsageError("super-resolve: --out is required");
  if (ckpt_path.empty()) throw UsageError("super-resolve: --checkpoint is required");
  if (series_path.empty()) throw UsageError("super-resolve: --series is required");

  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  SRModel model = model_from_checkpoint(ckpt);
  const StoredSample stored = load_sample(series_path);

  TimedSeries series;
  series.t_ref = stored.sample.lr_series.t_ref;
  {
    PipelineConfig pc;
    pc.hist_match = false;  // no target here, only inputs
    const SRSample prepared = prepare_sample(stored.sample, ckpt.norm_stats, pc);
    series = prepared.lr_series;
  }

  if (!at_date.empty()) series.t_ref = parse_timestamp(at_date);
  const int slack = cfg.at("data").at("slack_days").get<int>();
  int32_t lo = series.frames.front().time.epoch_day, hi = lo;
  for (const auto& f : series.frames) {
    lo = std::min(lo, f.time.epoch_day);
    hi = std::max(hi, f.time.epoch_day);
  }
  if (series.t_ref.epoch_day < lo - slack || series.t_ref.epoch_day > hi + slack)
    throw UsageError("super-resolve: --at-date outside the series span +/- slack");

  if (is_sisr(model.spec().kind)) {
    if (select_closest) {
      const int k = closest_frame(series);
      TimedSeries single;
      single.t_ref = series.t_ref;
      single.frames.push_back(series.frames[static_cast<size_t>(k)]);
      series = single;
    } else if (series.length() > 1) {
      throw UsageError(
          "super-resolve: this checkpoint is single-image; pass a single-frame series or "
          "--select-closest");
    }
  }

  write_resolved_config(out_dir, cfg);
  AttentionMaps maps;
  const bool want_maps = uses_ltae(model.spec().kind);
  const Raster sr =
      model.super_resolve(series, cfg.at("seed").get<uint64_t>(), want_maps ? &maps : nullptr);

  NpyArray raw = npy_from_raster(sr);
  npy_save(out_dir + "/sr.npy", raw);
  write_png(out_dir + "/sr.png", sr);
  if (want_maps) {
    NpyArray a;
    a.shape = {maps.heads, maps.frames, maps.h, maps.w};
    a.data = maps.v;
    npy_save(out_dir + "/attention.npy", a);
  }
  std::cerr << "super-resolve: wrote sr.png / sr.npy"
            << (want_maps ? " / attention.npy" : "") << " to " << out_dir << "\n";
  return 0;
}

int cmd_report(const json& cfg, const std::string& out_dir, const std::string& report_path) {
  if (out_dir.empty()) throw UsageError("report: --out is required");
  if (report_path.empty()) throw UsageError("report: --report is required");
  const MetricsReport report = load_report_json(report_path);
  write_resolved_config(out_dir, cfg);
  fs::create_directories(out_dir + "/figures");
  for (const auto& e : report.entries) {
    const std::string suffix =
        e.series_length > 0 ? "_N" + std::to_string(e.series_length) : "";
    write_mae_boxplot_svg(out_dir + "/figures/mae_boxplot" + suffix + ".svg", e,
                          report.model_kind + " MAE by time gap");
  }
  write_metrics_table_csv(out_dir + "/figures/metrics_table.csv", report);
  if (report.entries.size() > 1)
    write_series_length_table_csv(out_dir + "/figures/series_length_table.csv", report);
  std::cerr << "report: wrote figures to " << out_dir << "/figures\n";
  return 0;
}

int cmd_describe(const std::string& ckpt_path) {
  if (ckpt_path.empty()) throw UsageError("describe: --checkpoint is required");
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  SRModel model = model_from_checkpoint(ckpt);
  json doc = {{"spec", ckpt.spec.to_json()},
              {"parameter_count", model.parameter_count()},
              {"trained_steps", ckpt.step},
              {"val_history", ckpt.val_history}};
  std::cout << doc.dump(1) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sitsr: time-conditioned multi-image super-resolution toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, ckpt_path, series_path, at_date, report_path;
  std::vector<std::string> overrides;
  std::vector<int> series_lengths;
  std::optional<uint64_t> seed_flag;
  bool select_closest = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--set", overrides, "dotted config override key.path=value");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed_flag, "seed override");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic paired dataset");
  add_common(synth);
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  add_common(train_cmd);
  train_cmd->add_option("--dataset", overrides,
                        "dataset directory (shortcut for --set data.dataset=...)")
      ->each([&](const std::string& v) { overrides.back() = "data.dataset=" + v; });
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file");
  eval_cmd->add_option("--dataset", overrides, "dataset directory")
      ->each([&](const std::string& v) { overrides.back() = "data.dataset=" + v; });
  eval_cmd->add_option("--series-length", series_lengths,
                       "evaluate at this many frames (repeatable)");
  CLI::App* sr_cmd = app.add_subcommand("super-resolve", "run inference on one series");
  add_common(sr_cmd);
  sr_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file");
  sr_cmd->add_option("--series", series_path, "sample directory");
  sr_cmd->add_option("--at-date", at_date, "reference date (YYYY-MM-DD or epoch day)");
  sr_cmd->add_flag("--select-closest", select_closest,
                   "restrict a SISR checkpoint to the closest frame");
  CLI::App* report_cmd = app.add_subcommand("report", "turn a report.json into figures");
  add_common(report_cmd);
  report_cmd->add_option("--report", report_path, "report.json from eval");
  CLI::App* describe = app.add_subcommand("describe", "print a checkpoint's model spec");
  describe->add_option("--checkpoint", ckpt_path, "checkpoint file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const json cfg = load_config(config_path, overrides, seed_flag);
    if (synth->parsed()) return cmd_synth(cfg, out_dir);
    if (train_cmd->parsed()) return cmd_train(cfg, out_dir);
    if (eval_cmd->parsed()) return cmd_eval(cfg, out_dir, ckpt_path, series_lengths);
    if (sr_cmd->parsed())
      return cmd_super_resolve(cfg, out_dir, ckpt_path, series_path, at_date, select_closest);
    if (report_cmd->parsed()) return cmd_report(cfg, out_dir, report_path);
    if (describe->parsed()) return cmd_describe(ckpt_path);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
