#include "sitsr/core/npy.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include "sitsr/errors.hpp"

namespace sitsr {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

constexpr char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

}  // namespace

void npy_save(const std::string& path, const NpyArray& arr) {
  std::string shape = "(";
  for (size_t i = 0; i < arr.shape.size(); ++i) {
    shape += std::to_string(arr.shape[i]);
    if (arr.shape.size() == 1 || i + 1 < arr.shape.size()) shape += ",";
    if (i + 1 < arr.shape.size()) shape += " ";
  }
  shape += ")";
  std::string header =
      "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape + ", }";
  const size_t unpadded = 6 + 2 + 2 + header.size() + 1;
  const size_t padded = (unpadded + 63) / 64 * 64;
  header.append(padded - unpadded, ' ');
  header.push_back('\n');

  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw StateError("npy_save: cannot open '" + path + "'");
  std::fwrite(kMagic, 1, 6, f.get());
  const unsigned char ver[2] = {1, 0};
  std::fwrite(ver, 1, 2, f.get());
  const uint16_t hlen = static_cast<uint16_t>(header.size());
  const unsigned char lenb[2] = {static_cast<unsigned char>(hlen & 0xff),
                                 static_cast<unsigned char>(hlen >> 8)};
  std::fwrite(lenb, 1, 2, f.get());
  std::fwrite(header.data(), 1, header.size(), f.get());
  if (!arr.data.empty())
    std::fwrite(arr.data.data(), sizeof(float), arr.data.size(), f.get());
  if (std::ferror(f.get())) throw StateError("npy_save: write failed for '" + path + "'");
}

NpyArray npy_load(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw StateError("npy_load: cannot open '" + path + "'");

  char magic[6];
  unsigned char ver[2], lenb[2];
  if (std::fread(magic, 1, 6, f.get()) != 6 || std::memcmp(magic, kMagic, 6) != 0)
    throw DomainError("npy_load: bad magic in '" + path + "'");
  if (std::fread(ver, 1, 2, f.get()) != 2 || ver[0] != 1)
    throw DomainError("npy_load: unsupported npy version in '" + path + "'");
  if (std::fread(lenb, 1, 2, f.get()) != 2)
    throw DomainError("npy_load: truncated header in '" + path + "'");
  const uint16_t hlen = static_cast<uint16_t>(lenb[0] | (lenb[1] << 8));
  std::string header(hlen, '\0');
  if (std::fread(header.data(), 1, hlen, f.get()) != hlen)
    throw DomainError("npy_load: truncated header in '" + path + "'");

  if (header.find("'<f4'") == std::string::npos)
    throw DomainError("npy_load: only little-endian float32 supported: '" + path + "'");
  if (header.find("'fortran_order': False") == std::string::npos)
    throw DomainError("npy_load: only C-order supported: '" + path + "'");

  const size_t open = header.find('(');
  const size_t close = header.find(')', open);
  if (open == std::string::npos || close == std::string::npos)
    throw DomainError("npy_load: malformed shape in '" + path + "'");

  NpyArray arr;
  std::string dims = header.substr(open + 1, close - open - 1);
  size_t pos = 0;
  while (pos < dims.size()) {
    while (pos < dims.size() && (dims[pos] == ' ' || dims[pos] == ',')) ++pos;
    if (pos >= dims.size()) break;
    size_t end = pos;
    while (end < dims.size() && dims[end] != ',' && dims[end] != ' ') ++end;
    arr.shape.push_back(std::stoll(dims.substr(pos, end - pos)));
    pos = end;
  }

  arr.data.resize(static_cast<size_t>(arr.numel()));
  if (!arr.data.empty() &&
      std::fread(arr.data.data(), sizeof(float), arr.data.size(), f.get()) != arr.data.size())
    throw DomainError("npy_load: truncated data in '" + path + "'");
  return arr;
}

}  // namespace sitsr
