#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace morphbench {

// H x W x C matrix of reals in [0, 1], row-major with interleaved channels
// (the on-disk layout). Grayscale is C == 1.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> pixels;
  std::string provenance;

  static Image zeros(int height, int width, int channels = 1);
  static Image constant(int height, int width, int channels, double value);

  double at(int y, int x, int c = 0) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double& at(int y, int x, int c = 0) {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

// Image matrix file: magic "MB01", then u32 height, width, channels
// (little-endian), then H*W*C float32 values row-major.
Image read_image(const std::filesystem::path& path);
void write_image(const Image& img, const std::filesystem::path& path);

// Channel mean of a 3-channel image. Throws when C != 3.
Image to_grayscale(const Image& img);

// Bilinear resize of a square image to side x side. Identity when the size
// already matches. Throws on non-square input.
Image resize(const Image& img, int side = 300);

// Grayscale + resize to the canonical stored side. No-op on an image that is
// already canonical.
Image canonicalize(const Image& img, int side = 300);

// Read-through cache of raw on-disk images, bounded by a byte budget; once
// the budget is spent further reads fall through to the filesystem. Not
// thread-safe (the data path is sequential).
class ImageStore {
 public:
  explicit ImageStore(int64_t budget_bytes = int64_t{2} << 30) : budget_(budget_bytes) {}

  // Stored image, canonicalized to side x side x 1.
  Image get(const std::string& path, int side = 300);

 private:
  int64_t budget_ = 0;
  int64_t used_ = 0;
  std::unordered_map<std::string, Image> cache_;
};

}  // namespace morphbench
