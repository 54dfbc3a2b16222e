#include "sitsr/core/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "sitsr/errors.hpp"

namespace sitsr {

using nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw DomainError("unknown split tag '" + s + "'");
}

std::vector<size_t> DatasetManifest::indices_of(Split s) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < records.size(); ++i)
    if (records[i].split == s) out.push_back(i);
  return out;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
  json recs = json::array();
  for (const auto& r : m.records) {
    json ts = json::array();
    for (auto t : r.timestamps) ts.push_back(t.epoch_day);
    recs.push_back({{"path", r.path},
                    {"block_id", r.block_id},
                    {"t_ref", r.t_ref.epoch_day},
                    {"timestamps", ts},
                    {"split", to_string(r.split)}});
  }
  json doc = {{"format", "sitsr-manifest-v1"}, {"records", recs}};
  std::ofstream out(path);
  if (!out) throw StateError("save_manifest: cannot open '" + path + "'");
  out << doc.dump(1) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StateError("load_manifest: cannot open '" + path + "'");
  json doc;
  in >> doc;
  DatasetManifest m;
  for (const auto& r : doc.at("records")) {
    ManifestRecord rec;
    rec.path = r.at("path").get<std::string>();
    rec.block_id = r.at("block_id").get<int64_t>();
    rec.t_ref = Timestamp{r.at("t_ref").get<int32_t>()};
    for (const auto& t : r.at("timestamps"))
      rec.timestamps.push_back(Timestamp{t.get<int32_t>()});
    rec.split = split_from_string(r.at("split").get<std::string>());
    m.records.push_back(std::move(rec));
  }
  return m;
}

}  // namespace sitsr
