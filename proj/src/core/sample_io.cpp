#include "sitsr/core/sample_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sitsr/core/npy.hpp"
#include "sitsr/errors.hpp"

namespace sitsr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string frame_name(const char* prefix, size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03zu.npy", prefix, k);
  return buf;
}

NpyArray to_npy(const Raster& r) {
  NpyArray a;
  a.shape = {r.c, r.h, r.w};
  a.data = r.v;
  return a;
}

Raster from_npy(const NpyArray& a, ValueRange range) {
  if (a.shape.size() != 3) throw DomainError("sample raster must be C x H x W");
  Raster r(static_cast<int>(a.shape[0]), static_cast<int>(a.shape[1]),
           static_cast<int>(a.shape[2]), range);
  r.v = a.data;
  return r;
}

}  // namespace

void save_sample(const std::string& dir, const StoredSample& s) {
  fs::create_directories(dir);
  const auto& series = s.sample.lr_series;
  for (size_t k = 0; k < series.frames.size(); ++k)
    npy_save(dir + "/" + frame_name("lr", k), to_npy(series.frames[k].raster));
  npy_save(dir + "/hr.npy", to_npy(s.sample.hr));
  if (s.dynamics) npy_save(dir + "/dynamics.npy", to_npy(*s.dynamics));
  for (size_t k = 0; k < s.cloud_masks.size(); ++k)
    npy_save(dir + "/" + frame_name("cloud", k), to_npy(s.cloud_masks[k]));

  json ts = json::array();
  for (const auto& f : series.frames) ts.push_back(f.time.epoch_day);
  json meta = {{"timestamps", ts},
               {"t_ref", series.t_ref.epoch_day},
               {"block_id", s.sample.block_id},
               {"scale", s.sample.scale},
               {"value_range", to_string(series.frames.empty()
                                             ? ValueRange::unit
                                             : series.frames.front().raster.range)}};
  std::ofstream out(dir + "/meta.json");
  if (!out) throw StateError("save_sample: cannot write meta.json in '" + dir + "'");
  out << meta.dump(1) << "\n";
}

StoredSample load_sample(const std::string& dir) {
  std::ifstream in(dir + "/meta.json");
  if (!in) throw StateError("load_sample: missing meta.json in '" + dir + "'");
  json meta;
  in >> meta;

  StoredSample out;
  out.sample.block_id = meta.at("block_id").get<int64_t>();
  out.sample.scale = meta.at("scale").get<int>();
  out.sample.lr_series.t_ref = Timestamp{meta.at("t_ref").get<int32_t>()};
  const ValueRange range = value_range_from_string(meta.at("value_range").get<std::string>());

  const auto& ts = meta.at("timestamps");
  for (size_t k = 0; k < ts.size(); ++k) {
    TimedFrame f;
    f.time = Timestamp{ts[k].get<int32_t>()};
    f.raster = from_npy(npy_load(dir + "/" + frame_name("lr", k)), range);
    out.sample.lr_series.frames.push_back(std::move(f));
  }
  out.sample.hr = from_npy(npy_load(dir + "/hr.npy"), range);

  if (fs::exists(dir + "/dynamics.npy"))
    out.dynamics = from_npy(npy_load(dir + "/dynamics.npy"), ValueRange::unit);
  for (size_t k = 0; k < ts.size(); ++k) {
    const std::string p = dir + "/" + frame_name("cloud", k);
    if (!fs::exists(p)) break;
    out.cloud_masks.push_back(from_npy(npy_load(p), ValueRange::unit));
  }
  return out;
}

}  // namespace sitsr
