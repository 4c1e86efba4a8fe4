#pragma once

#include <cstdint>

#include "morphbench/image.hpp"
#include "morphbench/rng.hpp"

namespace morphbench {

// Border handling for rotation resampling. Reflection keeps corner regions
// filled with plausible sky instead of injecting dark wedges.
enum class BorderMode { reflect, zero };

// Parameters of one augmentation draw.
struct AugmentParams {
  bool hflip = false;
  bool vflip = false;
  double angle = 0.0;  // radians, uniform in (0, pi)
  int crop_y = 0;      // top-left corner, uniform in [0, in - out]
  int crop_x = 0;
};

// Deterministic augmentation stream: identical (seed, counter) pairs always
// produce identical parameters, independent of thread schedule.
class AugmentationSeedState {
 public:
  explicit AugmentationSeedState(uint64_t seed) : seed_(seed) {}

  // Draws the next parameter set and advances the counter.
  AugmentParams next(int in_side, int out_side);

  void reset(uint64_t counter = 0) { counter_ = counter; }
  uint64_t seed() const { return seed_; }
  uint64_t counter() const { return counter_; }

 private:
  uint64_t seed_ = 0;
  uint64_t counter_ = 0;
};

Image flip_horizontal(const Image& img);
Image flip_vertical(const Image& img);

// Rotation about the image centre with bilinear resampling.
Image rotate(const Image& img, double angle, BorderMode border = BorderMode::reflect);

Image crop(const Image& img, int y0, int x0, int side);
Image center_crop(const Image& img, int side);

// Training/evaluation augmentation on a 300x300x1 image: independent
// horizontal and vertical flips (p = 1/2 each), rotation by an angle drawn
// from (0, pi), then a 224x224 crop at a uniformly random valid corner.
Image augment(const Image& img, AugmentationSeedState& state,
              BorderMode border = BorderMode::reflect);
Image augment_with(const Image& img, const AugmentParams& params,
                   BorderMode border = BorderMode::reflect);

inline constexpr int kStoredSide = 300;
inline constexpr int kInputSide = 224;

}  // namespace morphbench
