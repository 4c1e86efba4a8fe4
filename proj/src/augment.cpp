#include "morphbench/augment.hpp"

#include <cmath>
#include <stdexcept>

namespace morphbench {

namespace {

// Mirror an out-of-range index back into [0, n), edge pixels included.
int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

double sample_border(const Image& img, int y, int x, int c, BorderMode border) {
  if (y >= 0 && y < img.height && x >= 0 && x < img.width) return img.at(y, x, c);
  if (border == BorderMode::zero) return 0.0;
  return img.at(reflect_index(y, img.height), reflect_index(x, img.width), c);
}

}  // namespace

AugmentParams AugmentationSeedState::next(int in_side, int out_side) {
  Rng rng(hash_u64(seed_, hash_u64(counter_, 0x617567ULL)));
  ++counter_;
  AugmentParams p;
  p.hflip = rng.bernoulli(0.5);
  p.vflip = rng.bernoulli(0.5);
  double u;
  do {
    u = rng.uniform();
  } while (u == 0.0);  // open interval (0, pi)
  p.angle = u * M_PI;
  const int span = in_side - out_side;
  p.crop_y = static_cast<int>(rng.uniform_below(span + 1));
  p.crop_x = static_cast<int>(rng.uniform_below(span + 1));
  return p;
}

Image flip_horizontal(const Image& img) {
  Image out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
  return out;
}

Image flip_vertical(const Image& img) {
  Image out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(img.height - 1 - y, x, c);
  return out;
}

Image rotate(const Image& img, double angle, BorderMode border) {
  Image out = Image::zeros(img.height, img.width, img.channels);
  out.provenance = img.provenance;
  const double cy = (img.height - 1) / 2.0;
  const double cx = (img.width - 1) / 2.0;
  const double cos_a = std::cos(angle);
  const double sin_a = std::sin(angle);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      // Inverse mapping: rotate the output coordinate back into the source.
      const double dy = y - cy;
      const double dx = x - cx;
      const double sy = cy + dy * cos_a - dx * sin_a;
      const double sx = cx + dy * sin_a + dx * cos_a;
      const int y0 = static_cast<int>(std::floor(sy));
      const int x0 = static_cast<int>(std::floor(sx));
      const double fy = sy - y0;
      const double fx = sx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double v00 = sample_border(img, y0, x0, c, border);
        const double v01 = sample_border(img, y0, x0 + 1, c, border);
        const double v10 = sample_border(img, y0 + 1, x0, c, border);
        const double v11 = sample_border(img, y0 + 1, x0 + 1, c, border);
        const double v = (v00 * (1.0 - fx) + v01 * fx) * (1.0 - fy) +
                         (v10 * (1.0 - fx) + v11 * fx) * fy;
        // Interpolation rounding must not leave the pixel domain.
        out.at(y, x, c) = std::min(std::max(v, 0.0), 1.0);
      }
    }
  }
  return out;
}

Image crop(const Image& img, int y0, int x0, int side) {
  if (y0 < 0 || x0 < 0 || y0 + side > img.height || x0 + side > img.width)
    throw std::runtime_error("crop window leaves the image frame");
  Image out = Image::zeros(side, side, img.channels);
  out.provenance = img.provenance;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
  return out;
}

Image center_crop(const Image& img, int side) {
  return crop(img, (img.height - side) / 2, (img.width - side) / 2, side);
}

Image augment_with(const Image& img, const AugmentParams& params, BorderMode border) {
  if (img.height != kStoredSide || img.width != kStoredSide || img.channels != 1)
    throw std::runtime_error("augment expects a 300x300x1 image");
  Image work = img;
  if (params.hflip) work = flip_horizontal(work);
  if (params.vflip) work = flip_vertical(work);
  work = rotate(work, params.angle, border);
  return crop(work, params.crop_y, params.crop_x, kInputSide);
}

Image augment(const Image& img, AugmentationSeedState& state, BorderMode border) {
  return augment_with(img, state.next(kStoredSide, kInputSide), border);
}

}  // namespace morphbench
