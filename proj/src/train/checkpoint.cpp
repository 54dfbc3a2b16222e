#include "sitsr/train/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include "sitsr/errors.hpp"

namespace sitsr {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'I', 'T', 'S', 'R', 'C', 'K', '1'};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_blob(std::FILE* f, const nn::Tensor& t) {
  if (!t.v.empty()) std::fwrite(t.v.data(), sizeof(float), t.v.size(), f);
}

void read_blob(std::FILE* f, nn::Tensor& t) {
  if (!t.v.empty() && std::fread(t.v.data(), sizeof(float), t.v.size(), f) != t.v.size())
    throw DomainError("checkpoint: truncated tensor data");
}

json shape_json(const std::vector<int>& shape) {
  json a = json::array();
  for (int d : shape) a.push_back(d);
  return a;
}

std::vector<int> shape_from(const json& a) {
  std::vector<int> out;
  for (const auto& d : a) out.push_back(d.get<int>());
  return out;
}

json stats_json(const NormStats& s) {
  const auto side = [](const std::vector<ChannelStats>& v) {
    json a = json::array();
    for (const auto& c : v) a.push_back({{"lo", c.lo}, {"hi", c.hi}});
    return a;
  };
  return {{"lr", side(s.lr)}, {"hr", side(s.hr)}};
}

NormStats stats_from(const json& j) {
  const auto side = [](const json& a) {
    std::vector<ChannelStats> out;
    for (const auto& c : a) out.push_back({c.at("lo").get<double>(), c.at("hi").get<double>()});
    return out;
  };
  NormStats s;
  s.lr = side(j.at("lr"));
  s.hr = side(j.at("hr"));
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json params_meta = json::array();
  for (const auto& [name, tensor] : ckpt.params)
    params_meta.push_back({{"name", name}, {"shape", shape_json(tensor.shape)}});

  json meta = {{"spec", ckpt.spec.to_json()},
               {"train_config", ckpt.train_config},
               {"step", ckpt.step},
               {"val_history", ckpt.val_history},
               {"norm_stats", stats_json(ckpt.norm_stats)},
               {"params", params_meta},
               {"adam_t", ckpt.adam_t},
               {"has_adam", !ckpt.adam_m.empty()},
               {"data_rng", ckpt.data_rng_state},
               {"noise_rng", ckpt.noise_rng_state}};
  const std::string meta_str = meta.dump();

  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw StateError("save_checkpoint: cannot open '" + path + "'");
  std::fwrite(kMagic, 1, 8, f.get());
  const uint64_t len = meta_str.size();
  std::fwrite(&len, sizeof(len), 1, f.get());
  std::fwrite(meta_str.data(), 1, meta_str.size(), f.get());
  for (const auto& [name, tensor] : ckpt.params) write_blob(f.get(), tensor);
  for (const auto& t : ckpt.adam_m) write_blob(f.get(), t);
  for (const auto& t : ckpt.adam_v) write_blob(f.get(), t);
  if (std::ferror(f.get())) throw StateError("save_checkpoint: write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw StateError("load_checkpoint: cannot open '" + path + "'");
  char magic[8];
  if (std::fread(magic, 1, 8, f.get()) != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw DomainError("load_checkpoint: not a checkpoint file");
  uint64_t len = 0;
  if (std::fread(&len, sizeof(len), 1, f.get()) != 1)
    throw DomainError("load_checkpoint: truncated header");
  std::string meta_str(len, '\0');
  if (std::fread(meta_str.data(), 1, len, f.get()) != len)
    throw DomainError("load_checkpoint: truncated metadata");
  const json meta = json::parse(meta_str);

  Checkpoint ckpt;
  ckpt.spec = ModelSpec::from_json(meta.at("spec"));
  ckpt.train_config = meta.at("train_config");
  ckpt.step = meta.at("step").get<int64_t>();
  for (const auto& h : meta.at("val_history"))
    ckpt.val_history.emplace_back(h.at(0).get<int64_t>(), h.at(1).get<double>());
  ckpt.norm_stats = stats_from(meta.at("norm_stats"));
  ckpt.adam_t = meta.at("adam_t").get<int64_t>();
  ckpt.data_rng_state = meta.at("data_rng").get<std::string>();
  ckpt.noise_rng_state = meta.at("noise_rng").get<std::string>();

  for (const auto& p : meta.at("params")) {
    nn::Tensor t(shape_from(p.at("shape")));
    read_blob(f.get(), t);
    ckpt.params.emplace_back(p.at("name").get<std::string>(), std::move(t));
  }
  if (meta.at("has_adam").get<bool>()) {
    for (const auto& [name, tensor] : ckpt.params) {
      (void)name;
      nn::Tensor t(tensor.shape);
      read_blob(f.get(), t);
      ckpt.adam_m.push_back(std::move(t));
    }
    for (const auto& [name, tensor] : ckpt.params) {
      (void)name;
      nn::Tensor t(tensor.shape);
      read_blob(f.get(), t);
      ckpt.adam_v.push_back(std::move(t));
    }
  }
  return ckpt;
}

Checkpoint snapshot_params(const SRModel& model) {
  Checkpoint ckpt;
  ckpt.spec = model.spec();
  const auto& ps = model.params();
  for (size_t i = 0; i < ps.count(); ++i)
    ckpt.params.emplace_back(ps.at(i).name, ps.at(i).value);
  return ckpt;
}

void restore_params(SRModel& model, const Checkpoint& ckpt) {
  auto& ps = model.params();
  if (ps.count() != ckpt.params.size())
    throw StateError("restore_params: parameter count mismatch");
  for (size_t i = 0; i < ps.count(); ++i) {
    auto& p = ps.at(i);
    const auto& [name, tensor] = ckpt.params[i];
    if (p.name != name || p.value.shape != tensor.shape)
      throw StateError("restore_params: mismatch at parameter '" + p.name + "'");
    p.value = tensor;
  }
}

SRModel model_from_checkpoint(const Checkpoint& ckpt) {
  SRModel model(ckpt.spec, 0);
  restore_params(model, ckpt);
  return model;
}

}  // namespace sitsr
