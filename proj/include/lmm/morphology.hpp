#pragma once

#include <cstdint>
#include <vector>

#include "lmm/image.hpp"

namespace lmm {

// Structuring function over a finite support inside a width x height window.
// Heights are meaningful on support cells only; off-support cells stand for
// -inf. The origin sits at (width/2, height/2).
struct Probe {
  int width = 0;
  int height = 0;
  std::vector<double> heights;   // row-major
  std::vector<uint8_t> support;  // row-major, nonzero = in support
  double m = kDefaultM;

  int origin_x() const { return width / 2; }
  int origin_y() const { return height / 2; }
  bool in_support(int x, int y) const {
    return support[static_cast<size_t>(y) * width + x] != 0;
  }
  double height_at(int x, int y) const {
    return heights[static_cast<size_t>(y) * width + x];
  }
  size_t support_count() const;
};

// Validates dimensions, non-empty support and finite heights on the support.
Probe make_probe(int width, int height, std::vector<double> heights,
                 std::vector<uint8_t> support, double m = kDefaultM);
Probe flat_probe(int width, int height, double value, double m = kDefaultM);
Probe single_pixel_probe(double height, double m = kDefaultM);

// Reflection b_bar(x) = b(-x): cell (i, j) maps to (width-1-i, height-1-j).
Probe reflect(const Probe& b);
// LIP-negated heights on the support; support unchanged.
Probe lip_negate(const Probe& b);
// Heights mapped through xi; off-support cells become -inf.
Probe xi_probe(const Probe& b);

// Classical (xi-space) dilation and erosion with a non-flat structuring
// function. Values live in R plus {+/-inf}; windows clip at image borders,
// out-of-image samples contribute the identity element (-inf for the max,
// +inf for the min). A pixel whose effective window is empty gets the
// identity element itself.
Grid dilate(const Grid& f, const Probe& b);
Grid erode(const Grid& f, const Probe& b);

// Logarithmic dilation/erosion, computed through the xi isomorphism:
// log_dilate = xi_inv(dilate(xi(f), xi(b))), and dually for the erosion.
// Probe heights must be < m; the probe and image ceilings must agree.
LipImage log_dilate(const LipImage& f, const Probe& b);
LipImage log_erode(const LipImage& f, const Probe& b);
LipImage log_open(const LipImage& f, const Probe& b);
LipImage log_close(const LipImage& f, const Probe& b);

}  // namespace lmm
