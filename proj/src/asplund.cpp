#include "lmm/asplund.hpp"

#include <vector>

#include "lmm/errors.hpp"
#include "lmm/lip.hpp"

namespace lmm {

double asplund_distance(std::span<const double> window,
                        std::span<const double> probe_vals, double m) {
  if (window.empty()) throw config_error("asplund_distance: empty support");
  if (window.size() != probe_vals.size())
    throw config_error("asplund_distance: window/probe size mismatch");
  // A window value of m makes c1 infinite: the degenerate distance is m.
  for (double v : window) {
    if (v == m) return m;
  }
  // c (+) g >= f pointwise iff xi(c) >= xi(f) - xi(g) pointwise, so c1/c2
  // are the max/min of the xi differences.
  double hi = -kInf, lo = kInf;
  for (size_t i = 0; i < window.size(); ++i) {
    const double d = xi(window[i], m) - xi(probe_vals[i], m);
    if (d > hi) hi = d;
    if (d < lo) lo = d;
  }
  if (lo == -kInf) return m;  // window contains -inf: c2 degenerates
  if (hi == lo) return 0.0;
  return lip_sub(xi_inv(hi, m), xi_inv(lo, m), m);
}

LipImage asplund_map_definitional(const LipImage& f, const Probe& b) {
  if (f.m != b.m) throw config_error("asplund map: LIP ceiling mismatch");
  const int ox = b.origin_x(), oy = b.origin_y();
  LipImage out(f.width(), f.height(), 0.0, f.m);
  std::vector<double> window, probe_vals;
  window.reserve(b.heights.size());
  probe_vals.reserve(b.heights.size());
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      window.clear();
      probe_vals.clear();
      for (int j = 0; j < b.height; ++j) {
        const int sy = y + (j - oy);
        if (sy < 0 || sy >= f.height()) continue;
        for (int i = 0; i < b.width; ++i) {
          if (!b.support[static_cast<size_t>(j) * b.width + i]) continue;
          const int sx = x + (i - ox);
          if (sx < 0 || sx >= f.width()) continue;
          window.push_back(f.at(sx, sy));
          probe_vals.push_back(b.heights[static_cast<size_t>(j) * b.width + i]);
        }
      }
      // Clipped window missing the support entirely: infinite distance.
      out.at(x, y) = window.empty() ? f.m : asplund_distance(window, probe_vals, f.m);
    }
  }
  return out;
}

LipImage asplund_map_morphological(const LipImage& f, const Probe& b) {
  const LipImage dil = log_dilate(f, lip_negate(reflect(b)));
  const LipImage ero = log_erode(f, b);
  LipImage out(f.width(), f.height(), 0.0, f.m);
  for (size_t i = 0; i < out.grid.size(); ++i) {
    const double d = dil.grid.data[i];
    const double e = ero.grid.data[i];
    double v;
    if (d == f.m || e == -kInf) {
      v = f.m;  // the m convention dominates
    } else if (d == -kInf && e == f.m) {
      v = f.m;  // empty effective window
    } else if (d == e) {
      v = 0.0;
    } else {
      v = lip_sub(d, e, f.m);
    }
    out.grid.data[i] = v;
  }
  return out;
}

LipImage asplund_map_xi_form(const LipImage& f, const Probe& b) {
  if (f.m != b.m) throw config_error("asplund map: LIP ceiling mismatch");
  const Probe ero_kernel = xi_probe(b);
  Probe dil_kernel = reflect(ero_kernel);
  for (size_t i = 0; i < dil_kernel.heights.size(); ++i) {
    if (dil_kernel.support[i]) dil_kernel.heights[i] = -dil_kernel.heights[i];
  }
  const Grid xf = xi_image(f);
  const Grid d = dilate(xf, dil_kernel);
  const Grid e = erode(xf, ero_kernel);
  LipImage out(f.width(), f.height(), 0.0, f.m);
  for (size_t i = 0; i < out.grid.size(); ++i) {
    double v;
    if (d.data[i] == kInf || e.data[i] == -kInf) {
      v = f.m;
    } else if (d.data[i] == -kInf && e.data[i] == kInf) {
      v = f.m;  // empty effective window
    } else if (d.data[i] == e.data[i]) {
      v = 0.0;
    } else {
      v = xi_inv(d.data[i] - e.data[i], f.m);
    }
    out.grid.data[i] = v;
  }
  return out;
}

}  // namespace lmm
