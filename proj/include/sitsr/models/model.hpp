#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "sitsr/core/raster.hpp"
#include "sitsr/diffusion/schedule.hpp"
#include "sitsr/diffusion/unet.hpp"
#include "sitsr/encoding.hpp"
#include "sitsr/fusion/ltae.hpp"
#include "sitsr/fusion/recursive.hpp"
#include "sitsr/models/decoder.hpp"
#include "sitsr/models/highresnet.hpp"
#include "sitsr/models/rrdb.hpp"

namespace sitsr {

enum class ModelKind {
  rrdb_sisr,
  highresnet_recursive,
  highresnet_ltae,
  rrdb_ltae,
  srdiff_bicubic,
  srdiff_rrdb,
  srdiff_highresnet_ltae,
};

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

bool is_sisr(ModelKind k);        // single closest frame expected as input
bool is_diffusion(ModelKind k);   // stochastic decoder, takes a sampling seed
bool uses_ltae(ModelKind k);

struct FusionSpec {
  int d_k = 8;
  int mlp_hidden = 0;
};

struct DiffusionSpec {
  int steps = 500;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int unet_channels = 24;
};

struct ModelSpec {
  ModelKind kind = ModelKind::highresnet_ltae;
  int scale = 4;
  int n_rrdb_blocks = 8;
  int rrdb_growth = 32;
  int base_channels = 64;
  int dec_channels = 0;  // 0 -> base_channels
  int enc_layers = 2;
  Upsampler upsampler = Upsampler::pixelshuffle;
  FusionSpec fusion;
  EncodingConfig encoding;
  DiffusionSpec diffusion;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

nn::Tensor tensor_from_raster(const Raster& r);
nn::Tensor tensor_from_series(const TimedSeries& s);
Raster raster_from_tensor(const nn::TensorT<float>& t, ValueRange range = ValueRange::unit);

/// One of the seven super-resolution models, with its learned parameters.
/// Forward passes are pure given the parameters; training mutates them
/// through the ParamSet only.
class SRModel {
 public:
  SRModel(ModelSpec spec, uint64_t init_seed);

  const ModelSpec& spec() const { return spec_; }
  nn::ParamSet<float>& params() { return params_; }
  const nn::ParamSet<float>& params() const { return params_; }
  int64_t parameter_count() const { return params_.total_size(); }

  /// Builds the SR graph for the deterministic kinds; output is
  /// [1, C, scale*H, scale*W]. attention_node (optional) receives the L-TAE
  /// softmax node for kinds that have one.
  nn::Var forward_sr(nn::Tape<float>& t, const TimedSeries& series,
                     nn::Var* attention_node = nullptr) const;

  /// Training objective on one prepared sample: L1 on the SR output, or the
  /// DDPM noise-prediction L1 for the diffusion kinds.
  nn::Var training_loss(nn::Tape<float>& t, const SRSample& sample, Rng& rng) const;

  /// Full inference. Diffusion kinds run the seeded reverse chain; the other
  /// kinds ignore the seed. maps (optional) receives per-head attention for
  /// L-TAE kinds.
  Raster super_resolve(const TimedSeries& series, uint64_t sampling_seed = 0,
                       AttentionMaps* maps = nullptr) const;

  const NoiseSchedule& schedule() const;
  const NoisePredictor<float>& noise_predictor() const;

  /// Conditioner feature map at HR resolution for the diffusion kinds.
  nn::Var conditioner_forward(nn::Tape<float>& t, const TimedSeries& series) const;

 private:
  nn::Var encode_and_fuse(nn::Tape<float>& t, const TimedSeries& series,
                          nn::Var* attention_node) const;
  void check_series(const TimedSeries& series) const;

  ModelSpec spec_;
  nn::ParamSet<float> params_;

  std::optional<RRDBTrunk<float>> rrdb_;
  std::optional<HighResEncoder<float>> encoder_;
  std::optional<LTAE2d<float>> ltae_;
  std::optional<RecursiveFusion<float>> recursive_;
  std::optional<Decoder<float>> decoder_;
  std::optional<NoisePredictor<float>> unet_;
  std::optional<NoiseSchedule> schedule_;
};

}  // namespace sitsr
