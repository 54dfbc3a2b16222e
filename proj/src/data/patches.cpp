#include "sitsr/data/patches.hpp"

#include "sitsr/errors.hpp"

namespace sitsr {

Raster crop(const Raster& r, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || y0 + h > r.h || x0 + w > r.w)
    throw DomainError("crop: window outside raster");
  Raster out(r.c, h, w, r.range);
  out.channels = r.channels;
  for (int c = 0; c < r.c; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = r.at(c, y0 + y, x0 + x);
  return out;
}

std::vector<SRSample> make_patches(const TimedSeries& lr_scene, const Raster& hr_scene,
                                   int lr_size, int hr_size, int64_t block_id) {
  if (lr_scene.frames.empty()) throw DomainError("make_patches: empty LR scene series");
  if (lr_size < 1 || hr_size < 1 || hr_size % lr_size != 0)
    throw DomainError("make_patches: hr_size must be a multiple of lr_size");
  const int scale = hr_size / lr_size;
  const Raster& lr0 = lr_scene.frames.front().raster;
  if (hr_scene.h != scale * lr0.h || hr_scene.w != scale * lr0.w)
    throw DomainError("make_patches: HR dims must be scale x LR dims");

  std::vector<SRSample> out;
  for (int by = 0; by + lr_size <= lr0.h; by += lr_size)
    for (int bx = 0; bx + lr_size <= lr0.w; bx += lr_size) {
      SRSample s;
      s.block_id = block_id;
      s.scale = scale;
      s.lr_series.t_ref = lr_scene.t_ref;
      for (const auto& f : lr_scene.frames)
        s.lr_series.frames.push_back({crop(f.raster, by, bx, lr_size, lr_size), f.time});
      s.hr = crop(hr_scene, by * scale, bx * scale, hr_size, hr_size);
      out.push_back(std::move(s));
    }
  return out;
}

}  // namespace sitsr
