#include "sitsr/train/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "sitsr/data/resample.hpp"
#include "sitsr/errors.hpp"
#include "sitsr/parallel.hpp"

namespace sitsr {

double TrainConfig::effective_grad_clip() const {
  if (grad_clip >= 0.0) return grad_clip;
  return is_diffusion(model.kind) ? 1.0 : 0.0;
}

void TrainConfig::validate() const {
  model.validate();
  if (steps < 1) throw ConfigError("train: steps must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (!(decay > 0.0) || decay > 1.0) throw ConfigError("train: decay must be in (0, 1]");
  if (series_length < 1) throw ConfigError("train: series_length must be >= 1");
  if (loss != "l1") throw ConfigError("train: unsupported loss kind '" + loss + "'");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"model", model.to_json()},
          {"steps", steps},
          {"batch_size", batch_size},
          {"lr", lr},
          {"decay", decay},
          {"decay_interval", decay_interval},
          {"seed", seed},
          {"series_length", series_length},
          {"val_interval", val_interval},
          {"val_subset", val_subset},
          {"grad_clip", grad_clip},
          {"loss", loss},
          {"hist_match", pipeline.hist_match}};
}

namespace {

/// Model input for one training example: series truncated to the configured
/// length; SISR kinds get the single closest frame.
SRSample training_view(const SRSample& prepared, ModelKind kind, int series_length) {
  SRSample out = prepared;
  out.lr_series = truncate_series(prepared.lr_series, series_length);
  if (is_sisr(kind)) {
    const int k = closest_frame(out.lr_series);
    TimedSeries single;
    single.t_ref = out.lr_series.t_ref;
    single.frames.push_back(out.lr_series.frames[static_cast<size_t>(k)]);
    out.lr_series = single;
  }
  return out;
}

}  // namespace

double validation_mae(const SRModel& model, const Dataset& dataset, const NormStats& stats,
                      const PipelineConfig& pipeline, int series_length, int subset,
                      int threads) {
  auto idx = dataset.manifest().indices_of(Split::val);
  if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (subset > 0 && static_cast<int>(idx.size()) > subset)
    idx.resize(static_cast<size_t>(subset));

  std::vector<double> maes(idx.size());
  parallel_for(idx.size(), [&](size_t i) {
    const StoredSample stored = dataset.load(idx[i]);
    const SRSample prepared = prepare_sample(stored.sample, stats, pipeline);
    const SRSample view = training_view(prepared, model.spec().kind, series_length);
    const Raster sr = model.super_resolve(view.lr_series, mix_seed(0x7A1u, idx[i]));
    const Raster sr_clip = clip_unit(sr);
    double acc = 0.0;
    for (size_t p = 0; p < sr_clip.v.size(); ++p)
      acc += std::abs(static_cast<double>(sr_clip.v[p]) - view.hr.v[p]);
    maes[i] = 255.0 * acc / static_cast<double>(sr_clip.v.size());
  }, threads);

  double sum = 0.0;
  for (double m : maes) sum += m;
  return sum / static_cast<double>(maes.size());
}

TrainResult train(const TrainConfig& cfg, const Dataset& dataset, const NormStats& stats,
                  const TrainSink& sink, const Checkpoint* resume_from) {
  cfg.validate();
  const auto train_idx = dataset.manifest().indices_of(Split::train);
  if (train_idx.empty()) throw DomainError("train: empty training split");

  SRModel model(cfg.model, cfg.seed);
  Adam adam(model.params());
  Rng data_rng(mix_seed(cfg.seed, 1));
  Rng noise_rng(mix_seed(cfg.seed, 2));
  int64_t start_step = 0;
  std::vector<std::pair<int64_t, double>> val_history;

  if (resume_from) {
    restore_params(model, *resume_from);
    if (!resume_from->adam_m.empty())
      adam.restore(resume_from->adam_m, resume_from->adam_v, resume_from->adam_t);
    data_rng.set_state_hex(resume_from->data_rng_state);
    noise_rng.set_state_hex(resume_from->noise_rng_state);
    start_step = resume_from->step;
    val_history = resume_from->val_history;
  }

  const double clip = cfg.effective_grad_clip();
  const int threads = cfg.threads > 0 ? cfg.threads : hardware_threads();

  const auto make_checkpoint = [&](int64_t step) {
    Checkpoint ckpt = snapshot_params(model);
    ckpt.train_config = cfg.to_json();
    ckpt.step = step;
    ckpt.val_history = val_history;
    ckpt.norm_stats = stats;
    ckpt.adam_m = adam.m();
    ckpt.adam_v = adam.v();
    ckpt.adam_t = adam.steps_taken();
    ckpt.data_rng_state = data_rng.state_hex();
    ckpt.noise_rng_state = noise_rng.state_hex();
    return ckpt;
  };

  TrainResult result;
  const int b = cfg.batch_size;
  std::vector<size_t> batch_idx(static_cast<size_t>(b));
  std::vector<uint64_t> batch_seeds(static_cast<size_t>(b));
  std::vector<std::unique_ptr<nn::Tape<float>>> tapes(static_cast<size_t>(b));
  std::vector<double> losses(static_cast<size_t>(b));

  for (int64_t step = start_step; step < cfg.steps; ++step) {
    // Draw the batch and per-sample noise streams up front so the result is
    // independent of the thread count.
    for (int i = 0; i < b; ++i) {
      batch_idx[static_cast<size_t>(i)] =
          train_idx[static_cast<size_t>(data_rng.randint(0, static_cast<int64_t>(train_idx.size()) - 1))];
      batch_seeds[static_cast<size_t>(i)] = noise_rng.next_u64();
    }

    parallel_for(static_cast<size_t>(b), [&](size_t i) {
      const StoredSample stored = dataset.load(batch_idx[i]);
      const SRSample prepared = prepare_sample(stored.sample, stats, cfg.pipeline);
      const SRSample view = training_view(prepared, cfg.model.kind, cfg.series_length);
      auto tape = std::make_unique<nn::Tape<float>>();
      Rng rng(batch_seeds[i]);
      const nn::Var loss = model.training_loss(*tape, view, rng);
      tape->backward(loss);
      losses[i] = tape->val(loss)[0];
      tapes[i] = std::move(tape);
    }, threads);

    double loss = 0.0;
    for (double l : losses) loss += l;
    loss /= static_cast<double>(b);

    if (!std::isfinite(loss)) {
      // The weights still hold the last finite state: stop here and hand it
      // back to the caller.
      result.checkpoint = make_checkpoint(step);
      result.diverged = true;
      result.steps_run = step;
      return result;
    }

    model.params().zero_grads();
    for (auto& tape : tapes) {
      tape->accumulate_param_grads(1.0f / static_cast<float>(b));
      tape.reset();
    }
    if (clip > 0.0) clip_grad_norm(model.params(), clip);

    const double lr = lr_schedule(step, cfg.lr, cfg.decay, cfg.decay_interval);
    adam.step(model.params(), lr);

    StepLog log;
    log.step = step + 1;
    log.loss = loss;
    log.lr = lr;
    if (cfg.val_interval > 0 && (step + 1) % cfg.val_interval == 0) {
      const double vm = validation_mae(model, dataset, stats, cfg.pipeline,
                                       cfg.series_length, cfg.val_subset, threads);
      if (std::isfinite(vm)) {
        val_history.emplace_back(step + 1, vm);
        log.val_mae = vm;
      }
    }
    if (sink) sink(log);
  }

  result.checkpoint = make_checkpoint(cfg.steps);
  result.steps_run = cfg.steps;
  return result;
}

}  // namespace sitsr
