#pragma once

#include <cstddef>
#include <vector>

namespace lmm {

inline constexpr double kDefaultM = 256.0;

// Dense row-major grid of doubles. Used both for grey-value images and for
// values living in the xi (logarithmic) space, where +/-infinity are legal.
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Grid() = default;
  Grid(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return data.size(); }
  bool same_shape(const Grid& o) const { return width == o.width && height == o.height; }
};

// Grey-value image under the LIP model. Acquired pixels lie in [0, m);
// LIP-negative and -inf values are legal intermediates. The grey scale is
// inverted: 0 is white (full transmission), m is black.
struct LipImage {
  Grid grid;
  double m = kDefaultM;

  LipImage() = default;
  LipImage(int w, int h, double fill = 0.0, double ceiling = kDefaultM)
      : grid(w, h, fill), m(ceiling) {}
  explicit LipImage(Grid g, double ceiling = kDefaultM) : grid(std::move(g)), m(ceiling) {}

  int width() const { return grid.width; }
  int height() const { return grid.height; }
  double at(int x, int y) const { return grid.at(x, y); }
  double& at(int x, int y) { return grid.at(x, y); }
};

}  // namespace lmm
