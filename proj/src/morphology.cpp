#include "lmm/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmm/errors.hpp"
#include "lmm/lip.hpp"

namespace lmm {

size_t Probe::support_count() const {
  return static_cast<size_t>(std::count_if(support.begin(), support.end(),
                                           [](uint8_t s) { return s != 0; }));
}

Probe make_probe(int width, int height, std::vector<double> heights,
                 std::vector<uint8_t> support, double m) {
  if (width <= 0 || height <= 0) throw config_error("probe window must be positive");
  const size_t n = static_cast<size_t>(width) * height;
  if (heights.size() != n || support.size() != n)
    throw config_error("probe grids do not match the window size");
  Probe b{width, height, std::move(heights), std::move(support), m};
  if (b.support_count() == 0) throw config_error("probe support is empty");
  for (size_t i = 0; i < n; ++i) {
    if (b.support[i] && !std::isfinite(b.heights[i]))
      throw config_error("probe height not finite on support");
  }
  return b;
}

Probe flat_probe(int width, int height, double value, double m) {
  const size_t n = static_cast<size_t>(width) * height;
  return make_probe(width, height, std::vector<double>(n, value),
                    std::vector<uint8_t>(n, 1), m);
}

Probe single_pixel_probe(double height, double m) {
  return make_probe(1, 1, {height}, {1}, m);
}

Probe reflect(const Probe& b) {
  Probe out = b;
  for (int j = 0; j < b.height; ++j) {
    for (int i = 0; i < b.width; ++i) {
      const size_t src = static_cast<size_t>(b.height - 1 - j) * b.width + (b.width - 1 - i);
      const size_t dst = static_cast<size_t>(j) * b.width + i;
      out.heights[dst] = b.heights[src];
      out.support[dst] = b.support[src];
    }
  }
  return out;
}

Probe lip_negate(const Probe& b) {
  Probe out = b;
  for (size_t i = 0; i < b.heights.size(); ++i) {
    if (b.support[i]) out.heights[i] = lip_negate(b.heights[i], b.m);
  }
  return out;
}

Probe xi_probe(const Probe& b) {
  Probe out = b;
  for (size_t i = 0; i < b.heights.size(); ++i) {
    out.heights[i] = b.support[i] ? xi(b.heights[i], b.m) : -kInf;
  }
  return out;
}

Grid dilate(const Grid& f, const Probe& b) {
  Grid out(f.width, f.height);
  const int ox = b.origin_x(), oy = b.origin_y();
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      double best = -kInf;
      for (int j = 0; j < b.height; ++j) {
        const int sy = y - (j - oy);
        if (sy < 0 || sy >= f.height) continue;
        for (int i = 0; i < b.width; ++i) {
          if (!b.support[static_cast<size_t>(j) * b.width + i]) continue;
          const int sx = x - (i - ox);
          if (sx < 0 || sx >= f.width) continue;
          const double s = f.at(sx, sy);
          const double t = b.heights[static_cast<size_t>(j) * b.width + i];
          if (s == -kInf || t == -kInf) continue;  // contributes -inf
          const double v = s + t;
          if (v > best) best = v;
        }
      }
      out.at(x, y) = best;
    }
  }
  return out;
}

Grid erode(const Grid& f, const Probe& b) {
  Grid out(f.width, f.height);
  const int ox = b.origin_x(), oy = b.origin_y();
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      double best = kInf;
      for (int j = 0; j < b.height; ++j) {
        const int sy = y + (j - oy);
        if (sy < 0 || sy >= f.height) continue;
        for (int i = 0; i < b.width; ++i) {
          if (!b.support[static_cast<size_t>(j) * b.width + i]) continue;
          const int sx = x + (i - ox);
          if (sx < 0 || sx >= f.width) continue;
          const double s = f.at(sx, sy);
          const double t = b.heights[static_cast<size_t>(j) * b.width + i];
          if (s == kInf || t == -kInf) continue;  // contributes +inf
          const double v = s - t;
          if (v < best) best = v;
        }
      }
      out.at(x, y) = best;
    }
  }
  return out;
}

namespace {

void check_lip_probe(const LipImage& f, const Probe& b) {
  if (f.m != b.m)
    throw config_error("probe/image LIP ceiling mismatch: " + std::to_string(b.m) +
                       " vs " + std::to_string(f.m));
  for (size_t i = 0; i < b.heights.size(); ++i) {
    if (b.support[i] && b.heights[i] >= b.m)
      throw config_error("probe height at or above the ceiling m");
  }
}

}  // namespace

LipImage log_dilate(const LipImage& f, const Probe& b) {
  check_lip_probe(f, b);
  return xi_inv_image(dilate(xi_image(f), xi_probe(b)), f.m);
}

LipImage log_erode(const LipImage& f, const Probe& b) {
  check_lip_probe(f, b);
  return xi_inv_image(erode(xi_image(f), xi_probe(b)), f.m);
}

LipImage log_open(const LipImage& f, const Probe& b) {
  return log_dilate(log_erode(f, b), b);
}

LipImage log_close(const LipImage& f, const Probe& b) {
  return log_erode(log_dilate(f, b), b);
}

}  // namespace lmm
