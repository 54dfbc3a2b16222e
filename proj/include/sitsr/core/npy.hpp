#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sitsr {

/// Minimal NumPy .npy (format 1.0) reader/writer for little-endian float32
/// arrays in C order. Keeps the on-disk sample format inspectable from any
/// language without extra dependencies.
struct NpyArray {
  std::vector<int64_t> shape;
  std::vector<float> data;

  int64_t numel() const {
    int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

void npy_save(const std::string& path, const NpyArray& arr);
NpyArray npy_load(const std::string& path);

}  // namespace sitsr
