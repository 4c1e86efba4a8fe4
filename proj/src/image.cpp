#include "morphbench/image.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace morphbench {

namespace {

constexpr char kMagic[4] = {'M', 'B', '0', '1'};

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void write_u32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Image Image::zeros(int height, int width, int channels) {
  return constant(height, width, channels, 0.0);
}

Image Image::constant(int height, int width, int channels, double value) {
  Image img;
  img.height = height;
  img.width = width;
  img.channels = channels;
  img.pixels.assign(static_cast<size_t>(height) * width * channels, value);
  return img;
}

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not an MB01 image file: " + path.string());
  const uint32_t h = read_u32(in);
  const uint32_t w = read_u32(in);
  const uint32_t c = read_u32(in);
  if (!in || h == 0 || w == 0 || (c != 1 && c != 3))
    throw std::runtime_error("bad MB01 header in " + path.string());

  Image img;
  img.height = static_cast<int>(h);
  img.width = static_cast<int>(w);
  img.channels = static_cast<int>(c);
  img.provenance = path.string();
  const size_t n = static_cast<size_t>(h) * w * c;
  std::vector<float> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) throw std::runtime_error("truncated MB01 image file: " + path.string());
  img.pixels.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double v = raw[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw std::runtime_error("pixel outside [0,1] in " + path.string());
    img.pixels[i] = v;
  }
  return img;
}

void write_image(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write image file: " + path.string());
  out.write(kMagic, 4);
  write_u32(out, static_cast<uint32_t>(img.height));
  write_u32(out, static_cast<uint32_t>(img.width));
  write_u32(out, static_cast<uint32_t>(img.channels));
  std::vector<float> raw(img.pixels.size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<float>(img.pixels[i]);
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!out) throw std::runtime_error("failed writing image file: " + path.string());
}

Image to_grayscale(const Image& img) {
  if (img.channels != 3)
    throw std::runtime_error("grayscale conversion expects 3 channels, got " +
                             std::to_string(img.channels));
  Image out = Image::zeros(img.height, img.width, 1);
  out.provenance = img.provenance;
  const size_t n = static_cast<size_t>(img.height) * img.width;
  for (size_t i = 0; i < n; ++i)
    out.pixels[i] = (img.pixels[3 * i] + img.pixels[3 * i + 1] + img.pixels[3 * i + 2]) / 3.0;
  return out;
}

Image resize(const Image& img, int side) {
  if (img.height != img.width)
    throw std::runtime_error("resize expects a square image, got " + std::to_string(img.height) +
                             "x" + std::to_string(img.width));
  if (img.height == side) return img;

  Image out = Image::zeros(side, side, img.channels);
  out.provenance = img.provenance;
  const double scale = static_cast<double>(img.height) / side;
  for (int y = 0; y < side; ++y) {
    // Pixel-center mapping keeps the field of view aligned at both sizes.
    double sy = (y + 0.5) * scale - 0.5;
    sy = std::min(std::max(sy, 0.0), static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < side; ++x) {
      double sx = (x + 0.5) * scale - 0.5;
      sx = std::min(std::max(sx, 0.0), static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
        const double bot = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
        out.at(y, x, c) = top * (1.0 - fy) + bot * fy;
      }
    }
  }
  return out;
}

Image canonicalize(const Image& img, int side) {
  if (img.channels == 1 && img.height == side && img.width == side) return img;
  return resize(img.channels == 3 ? to_grayscale(img) : img, side);
}

Image ImageStore::get(const std::string& path, int side) {
  auto it = cache_.find(path);
  if (it != cache_.end()) return canonicalize(it->second, side);
  Image img = read_image(path);
  const int64_t bytes =
      static_cast<int64_t>(img.pixels.size()) * static_cast<int64_t>(sizeof(double));
  if (used_ + bytes <= budget_) {
    used_ += bytes;
    cache_.emplace(path, img);
  }
  return canonicalize(img, side);
}

}  // namespace morphbench
