#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sitsr/core/timestamp.hpp"

namespace sitsr {

enum class Split { train, val, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct ManifestRecord {
  std::string path;  // sample directory, relative to the manifest location
  int64_t block_id = 0;
  Timestamp t_ref;
  std::vector<Timestamp> timestamps;
  Split split = Split::train;
};

/// Index of a dataset on disk: one JSON document listing every sample.
struct DatasetManifest {
  std::vector<ManifestRecord> records;

  std::vector<size_t> indices_of(Split s) const;
};

void save_manifest(const std::string& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::string& path);

}  // namespace sitsr
