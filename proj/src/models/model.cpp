#include "sitsr/models/model.hpp"

#include <algorithm>
#include <cmath>

#include "sitsr/data/resample.hpp"
#include "sitsr/diffusion/ddpm.hpp"
#include "sitsr/errors.hpp"
#include "sitsr/fusion/median.hpp"

namespace sitsr {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::rrdb_sisr: return "rrdb_sisr";
    case ModelKind::highresnet_recursive: return "highresnet_recursive";
    case ModelKind::highresnet_ltae: return "highresnet_ltae";
    case ModelKind::rrdb_ltae: return "rrdb_ltae";
    case ModelKind::srdiff_bicubic: return "srdiff_bicubic";
    case ModelKind::srdiff_rrdb: return "srdiff_rrdb";
    case ModelKind::srdiff_highresnet_ltae: return "srdiff_highresnet_ltae";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  for (ModelKind k : {ModelKind::rrdb_sisr, ModelKind::highresnet_recursive,
                      ModelKind::highresnet_ltae, ModelKind::rrdb_ltae,
                      ModelKind::srdiff_bicubic, ModelKind::srdiff_rrdb,
                      ModelKind::srdiff_highresnet_ltae})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown model kind '" + s + "'");
}

bool is_sisr(ModelKind k) {
  return k == ModelKind::rrdb_sisr || k == ModelKind::srdiff_bicubic ||
         k == ModelKind::srdiff_rrdb;
}

bool is_diffusion(ModelKind k) {
  return k == ModelKind::srdiff_bicubic || k == ModelKind::srdiff_rrdb ||
         k == ModelKind::srdiff_highresnet_ltae;
}

bool uses_ltae(ModelKind k) {
  return k == ModelKind::highresnet_ltae || k == ModelKind::rrdb_ltae ||
         k == ModelKind::srdiff_highresnet_ltae;
}

void ModelSpec::validate() const {
  if (scale != 2 && scale != 4 && scale != 8)
    throw ConfigError("model: scale must be one of {2,4,8}");
  if (n_rrdb_blocks < 1) throw ConfigError("model: n_rrdb_blocks must be >= 1");
  if (base_channels < 1) throw ConfigError("model: base_channels must be >= 1");
  if (enc_layers < 1) throw ConfigError("model: enc_layers must be >= 1");
  if (uses_ltae(kind)) {
    encoding.validate();
    if (base_channels % encoding.heads != 0)
      throw ConfigError("model: base_channels must be divisible by heads");
  }
  if (is_diffusion(kind)) {
    if (diffusion.steps < 1) throw ConfigError("model: diffusion steps must be >= 1");
    if (diffusion.unet_channels < 1) throw ConfigError("model: unet_channels must be >= 1");
  }
}

nlohmann::json ModelSpec::to_json() const {
  return {{"kind", to_string(kind)},
          {"scale", scale},
          {"n_rrdb_blocks", n_rrdb_blocks},
          {"rrdb_growth", rrdb_growth},
          {"base_channels", base_channels},
          {"dec_channels", dec_channels},
          {"enc_layers", enc_layers},
          {"upsampler", upsampler == Upsampler::pixelshuffle ? "pixelshuffle" : "transposed"},
          {"fusion", {{"d_k", fusion.d_k}, {"mlp_hidden", fusion.mlp_hidden}}},
          {"encoding",
           {{"tau", encoding.tau}, {"c_e", encoding.c_e}, {"heads", encoding.heads}}},
          {"diffusion",
           {{"steps", diffusion.steps},
            {"beta_start", diffusion.beta_start},
            {"beta_end", diffusion.beta_end},
            {"unet_channels", diffusion.unet_channels}}}};
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.kind = model_kind_from_string(j.at("kind").get<std::string>());
  s.scale = j.at("scale").get<int>();
  s.n_rrdb_blocks = j.at("n_rrdb_blocks").get<int>();
  s.rrdb_growth = j.at("rrdb_growth").get<int>();
  s.base_channels = j.at("base_channels").get<int>();
  s.dec_channels = j.at("dec_channels").get<int>();
  s.enc_layers = j.at("enc_layers").get<int>();
  const std::string up = j.at("upsampler").get<std::string>();
  if (up != "pixelshuffle" && up != "transposed")
    throw ConfigError("model: unknown upsampler '" + up + "'");
  s.upsampler = up == "pixelshuffle" ? Upsampler::pixelshuffle : Upsampler::transposed;
  s.fusion.d_k = j.at("fusion").at("d_k").get<int>();
  s.fusion.mlp_hidden = j.at("fusion").at("mlp_hidden").get<int>();
  s.encoding.tau = j.at("encoding").at("tau").get<double>();
  s.encoding.c_e = j.at("encoding").at("c_e").get<int>();
  s.encoding.heads = j.at("encoding").at("heads").get<int>();
  s.diffusion.steps = j.at("diffusion").at("steps").get<int>();
  s.diffusion.beta_start = j.at("diffusion").at("beta_start").get<double>();
  s.diffusion.beta_end = j.at("diffusion").at("beta_end").get<double>();
  s.diffusion.unet_channels = j.at("diffusion").at("unet_channels").get<int>();
  s.validate();
  return s;
}

nn::Tensor tensor_from_raster(const Raster& r) {
  nn::Tensor t({1, r.c, r.h, r.w});
  std::copy(r.v.begin(), r.v.end(), t.v.begin());
  return t;
}

nn::Tensor tensor_from_series(const TimedSeries& s) {
  const Raster& first = s.frames.front().raster;
  nn::Tensor t({static_cast<int>(s.frames.size()), first.c, first.h, first.w});
  const size_t fs = first.v.size();
  for (size_t k = 0; k < s.frames.size(); ++k)
    std::copy(s.frames[k].raster.v.begin(), s.frames[k].raster.v.end(),
              t.v.begin() + static_cast<int64_t>(k * fs));
  return t;
}

Raster raster_from_tensor(const nn::TensorT<float>& t, ValueRange range) {
  if (t.rank() != 4 || t.dim(0) != 1) throw DomainError("raster_from_tensor: expected [1,C,H,W]");
  Raster r(t.dim(1), t.dim(2), t.dim(3), range);
  std::copy(t.v.begin(), t.v.end(), r.v.begin());
  return r;
}

SRModel::SRModel(ModelSpec spec, uint64_t init_seed) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(mix_seed(init_seed, 0x5EEDULL));
  const int cf = spec_.base_channels;
  const int dec_mid = spec_.dec_channels > 0 ? spec_.dec_channels : cf;
  const ModelKind k = spec_.kind;

  const bool needs_rrdb =
      k == ModelKind::rrdb_sisr || k == ModelKind::rrdb_ltae || k == ModelKind::srdiff_rrdb;
  const bool needs_encoder = k == ModelKind::highresnet_recursive ||
                             k == ModelKind::highresnet_ltae ||
                             k == ModelKind::srdiff_highresnet_ltae;

  if (needs_rrdb)
    rrdb_.emplace(params_, rng, "rrdb", 3, cf, spec_.rrdb_growth, spec_.n_rrdb_blocks);
  if (needs_encoder) encoder_.emplace(params_, rng, "encoder", 3, cf, spec_.enc_layers);
  if (uses_ltae(k)) {
    LTAEConfig lc;
    lc.encoding = spec_.encoding;
    lc.d_k = spec_.fusion.d_k;
    lc.mlp_hidden = spec_.fusion.mlp_hidden;
    ltae_.emplace(params_, rng, "ltae", cf, lc);
  }
  if (k == ModelKind::highresnet_recursive) recursive_.emplace(params_, rng, "recursive", cf);

  if (is_diffusion(k)) {
    const int cond_ch = k == ModelKind::srdiff_bicubic ? 3 : cf;
    unet_.emplace(params_, rng, "unet", cond_ch, spec_.diffusion.unet_channels, 3);
    schedule_ = NoiseSchedule::linear(spec_.diffusion.steps, spec_.diffusion.beta_start,
                                      spec_.diffusion.beta_end);
  } else {
    decoder_.emplace(params_, rng, "decoder", cf, dec_mid, 3, spec_.scale, spec_.upsampler);
  }
}

const NoiseSchedule& SRModel::schedule() const {
  if (!schedule_) throw StateError("model: no diffusion schedule for this kind");
  return *schedule_;
}

const NoisePredictor<float>& SRModel::noise_predictor() const {
  if (!unet_) throw StateError("model: no noise predictor for this kind");
  return *unet_;
}

void SRModel::check_series(const TimedSeries& series) const {
  if (series.frames.empty()) throw DomainError("model: empty series");
  if (is_sisr(spec_.kind) && series.length() != 1)
    throw UsageError("model: " + to_string(spec_.kind) +
                     " is single-image; pass the closest frame only (T must be 1)");
  if (series.frames.front().raster.c != 3)
    throw DomainError("model: expected 3-channel input");
}

namespace {

std::vector<Timestamp> series_timestamps(const TimedSeries& s) {
  std::vector<Timestamp> out;
  out.reserve(s.frames.size());
  for (const auto& f : s.frames) out.push_back(f.time);
  return out;
}

}  // namespace

nn::Var SRModel::encode_and_fuse(nn::Tape<float>& t, const TimedSeries& series,
                                 nn::Var* attention_node) const {
  const int frames = series.length();
  const nn::Var lr = t.input(tensor_from_series(series));

  nn::Var states{-1};
  if (rrdb_) {
    states = rrdb_->forward(t, lr);
  } else {
    const nn::Var ref = t.input(tensor_from_raster(median_reference(series)));
    const nn::Var with_ref = t.concat({lr, t.repeat_frames(ref, frames)});
    states = encoder_->forward(t, with_ref);
  }

  if (frames == 1 && !ltae_ && !recursive_) return states;

  if (ltae_) {
    const PositionalEncoding pe =
        relative_encoding(series_timestamps(series), series.t_ref, spec_.encoding);
    return ltae_->forward(t, states, pe, attention_node);
  }
  if (recursive_) {
    std::vector<int64_t> gaps, signed_days;
    for (const auto& f : series.frames) {
      const int64_t d = days_between(series.t_ref, f.time);
      gaps.push_back(std::abs(d));
      signed_days.push_back(d);
    }
    return recursive_->forward(t, states, gaps, signed_days);
  }
  return states;  // SISR: single frame, no fusion stage
}

nn::Var SRModel::forward_sr(nn::Tape<float>& t, const TimedSeries& series,
                            nn::Var* attention_node) const {
  if (is_diffusion(spec_.kind))
    throw UsageError("model: forward_sr is undefined for diffusion kinds; use super_resolve");
  check_series(series);
  const nn::Var fused = encode_and_fuse(t, series, attention_node);
  return decoder_->forward(t, fused);
}

nn::Var SRModel::conditioner_forward(nn::Tape<float>& t, const TimedSeries& series) const {
  if (!is_diffusion(spec_.kind))
    throw UsageError("model: conditioner_forward is for diffusion kinds");
  check_series(series);

  if (spec_.kind == ModelKind::srdiff_bicubic) {
    const int k = closest_frame(series);
    return t.input(tensor_from_raster(
        bicubic_upsample(series.frames[static_cast<size_t>(k)].raster, spec_.scale)));
  }

  nn::Var feat{-1};
  if (spec_.kind == ModelKind::srdiff_rrdb) {
    const int k = closest_frame(series);
    TimedSeries single;
    single.t_ref = series.t_ref;
    single.frames.push_back(series.frames[static_cast<size_t>(k)]);
    feat = rrdb_->forward(t, t.input(tensor_from_series(single)));
  } else {
    feat = encode_and_fuse(t, series, nullptr);
  }
  for (int s = spec_.scale; s > 1; s /= 2) feat = t.nearest_up2(feat);
  return feat;
}

nn::Var SRModel::training_loss(nn::Tape<float>& t, const SRSample& sample, Rng& rng) const {
  if (!is_diffusion(spec_.kind)) {
    const nn::Var out = forward_sr(t, sample.lr_series);
    return t.l1_loss(out, t.input(tensor_from_raster(sample.hr)));
  }

  // SRDiff-style residual diffusion: the target is HR minus the bicubic
  // upsample of the temporally closest LR frame.
  check_series(sample.lr_series);
  const int k = closest_frame(sample.lr_series);
  const Raster anchor =
      bicubic_upsample(sample.lr_series.frames[static_cast<size_t>(k)].raster, spec_.scale);
  if (anchor.h != sample.hr.h || anchor.w != sample.hr.w)
    throw ConfigError("model: sample scale does not match the model scale");

  nn::Tensor x0 = tensor_from_raster(sample.hr);
  const nn::Tensor anchor_t = tensor_from_raster(anchor);
  for (int64_t i = 0; i < x0.numel(); ++i) x0[i] -= anchor_t[i];

  const int step = static_cast<int>(rng.randint(1, schedule_->steps));
  nn::Tensor noise(x0.shape);
  for (auto& v : noise.v) v = static_cast<float>(rng.normal());
  const nn::Tensor x_t = ddpm_forward_sample(x0, step, noise, *schedule_);

  const nn::Var cond = conditioner_forward(t, sample.lr_series);
  const nn::Var eps_hat = unet_->forward(t, t.input(x_t), cond, step);
  return t.l1_loss(eps_hat, t.input(noise));
}

Raster SRModel::super_resolve(const TimedSeries& series, uint64_t sampling_seed,
                              AttentionMaps* maps) const {
  check_series(series);

  if (!is_diffusion(spec_.kind)) {
    nn::Tape<float> tape;
    nn::Var attn{-1};
    const nn::Var out = forward_sr(tape, series, maps ? &attn : nullptr);
    if (maps && attn.id >= 0) *maps = ltae_->read_maps(tape, attn);
    return raster_from_tensor(tape.val(out));
  }

  // Conditioner features do not depend on the chain state; compute once.
  nn::Tensor cond_value;
  {
    nn::Tape<float> tape;
    nn::Var attn{-1};
    if (maps && ltae_) {
      check_series(series);
      // Rebuild the fused path to expose attention, then upsample.
      nn::Var feat = encode_and_fuse(tape, series, &attn);
      for (int s = spec_.scale; s > 1; s /= 2) feat = tape.nearest_up2(feat);
      cond_value = tape.val(feat);
      if (attn.id >= 0) *maps = ltae_->read_maps(tape, attn);
    } else {
      cond_value = tape.val(conditioner_forward(tape, series));
    }
  }

  const int k = closest_frame(series);
  const Raster anchor =
      bicubic_upsample(series.frames[static_cast<size_t>(k)].raster, spec_.scale);
  const auto predict = [&](const nn::Tensor& x_t, int step) {
    nn::Tape<float> tape;
    const nn::Var eps =
        unet_->forward(tape, tape.input(x_t), tape.input(cond_value), step);
    return tape.val(eps);
  };
  const nn::Tensor residual = ddpm_sample_chain<float>(
      predict, *schedule_, {1, 3, anchor.h, anchor.w}, sampling_seed);

  Raster out = anchor;
  for (size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = std::clamp(out.v[i] + residual[static_cast<int64_t>(i)], 0.0f, 1.0f);
  return out;
}

}  // namespace sitsr
