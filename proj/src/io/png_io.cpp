#include "sitsr/io/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "sitsr/errors.hpp"

namespace sitsr {

void write_png(const std::string& path, const Raster& r) {
  if (r.c < 1 || r.h < 1 || r.w < 1) throw DomainError("write_png: empty raster");
  const bool rgb = r.c >= 3;

  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw StateError("write_png: cannot open '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw StateError("write_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw StateError("write_png: encode failed for '" + path + "'");
  }

  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(r.w), static_cast<png_uint_32>(r.h), 8,
               rgb ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const int ch = rgb ? 3 : 1;
  std::vector<png_byte> row(static_cast<size_t>(r.w) * ch);
  for (int y = 0; y < r.h; ++y) {
    for (int x = 0; x < r.w; ++x)
      for (int c = 0; c < ch; ++c) {
        const float v = std::clamp(r.at(c, y, x), 0.0f, 1.0f);
        row[static_cast<size_t>(x) * ch + c] =
            static_cast<png_byte>(std::lround(v * 255.0f));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

}  // namespace sitsr
