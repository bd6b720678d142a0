#include "lmm/layer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "lmm/errors.hpp"
#include "lmm/lip.hpp"

namespace lmm {

namespace {

constexpr double kTieEps = 1e-9;

// Keeps learnable heights strictly below the ceiling so xi stays finite.
constexpr double kHeightMargin = 1e-6;

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

Grid soft_mask(const Grid& w_m) {
  Grid out(w_m.width, w_m.height);
  for (size_t i = 0; i < w_m.size(); ++i) out.data[i] = sigmoid(w_m.data[i]);
  return out;
}

Grid reflect180(const Grid& g) {
  Grid out(g.width, g.height);
  for (int j = 0; j < g.height; ++j)
    for (int i = 0; i < g.width; ++i)
      out.at(i, j) = g.at(g.width - 1 - i, g.height - 1 - j);
  return out;
}

EffectiveProbes effective_probes(const KernelPair& k, double bottom, double m) {
  const Grid v = soft_mask(k.w_m);
  Grid xi_h(k.width(), k.height());
  for (size_t i = 0; i < xi_h.size(); ++i) xi_h.data[i] = xi(k.w_h.data[i], m);
  const Grid vr = reflect180(v);
  const Grid xi_hr = reflect180(xi_h);
  EffectiveProbes out{Grid(k.width(), k.height()), Grid(k.width(), k.height())};
  for (size_t i = 0; i < out.dil.size(); ++i) {
    out.dil.data[i] = -xi_hr.data[i] * vr.data[i] + bottom * (1.0 - vr.data[i]);
    out.ero.data[i] = xi_h.data[i] * v.data[i] + bottom * (1.0 - v.data[i]);
  }
  return out;
}

void LayerGradients::accumulate(const LayerGradients& o) {
  for (size_t i = 0; i < w_h.size(); ++i) w_h.data[i] += o.w_h.data[i];
  for (size_t i = 0; i < w_m.size(); ++i) w_m.data[i] += o.w_m.data[i];
}

void LayerGradients::scale(double s) {
  for (double& v : w_h.data) v *= s;
  for (double& v : w_m.data) v *= s;
}

AsplundLayer::AsplundLayer(int kernel_width, int kernel_height, double m)
    : AsplundLayer(KernelPair(kernel_width, kernel_height), m) {}

AsplundLayer::AsplundLayer(KernelPair kernels, double m)
    : kernels_(std::move(kernels)), m_(m), bottom_(-xi(m - 1.0, m)) {
  if (kernels_.width() <= 0 || kernels_.height() <= 0)
    throw config_error("layer kernels must have a positive window");
  if (!kernels_.w_h.same_shape(kernels_.w_m))
    throw config_error("layer kernel grids must share one shape");
}

LipImage AsplundLayer::forward(const LipImage& f) {
  if (f.m != m_) throw config_error("layer/image LIP ceiling mismatch");
  const int w = f.width(), h = f.height();
  const int kw = kernels_.width(), kh = kernels_.height();
  const int ox = kw / 2, oy = kh / 2;

  cache_ = Cache{};
  cache_.width = w;
  cache_.height = h;
  cache_.argmax_dil.assign(static_cast<size_t>(w) * h, -1);
  cache_.argmin_ero.assign(static_cast<size_t>(w) * h, -1);
  cache_.u.assign(static_cast<size_t>(w) * h, 0.0);
  cache_.min_gap = kInf;

  Grid xf(w, h);
  for (size_t i = 0; i < xf.size(); ++i) {
    double p = f.grid.data[i];
    if (p >= m_) {
      p = m_ - 1.0;  // xi(m) is infinite and would poison the gradients
      ++cache_.clamped;
    }
    xf.data[i] = xi(p, m_);
  }

  cache_.v = soft_mask(kernels_.w_m);
  cache_.xi_wh = Grid(kw, kh);
  for (size_t i = 0; i < cache_.xi_wh.size(); ++i)
    cache_.xi_wh.data[i] = xi(kernels_.w_h.data[i], m_);
  const EffectiveProbes probes = effective_probes(kernels_, bottom_, m_);

  LipImage out(w, h, 0.0, m_);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double best_d = -kInf, second_d = -kInf;
      double best_e = kInf, second_e = kInf;
      int arg_d = -1, arg_e = -1;
      for (int j = 0; j < kh; ++j) {
        const int dy = y - (j - oy), ey = y + (j - oy);
        for (int i = 0; i < kw; ++i) {
          const int cell = j * kw + i;
          const int dx = x - (i - ox), ex = x + (i - ox);
          if (dx >= 0 && dx < w && dy >= 0 && dy < h) {
            const double v = xf.at(dx, dy) + probes.dil.data[cell];
            if (v > best_d) {
              second_d = best_d;
              best_d = v;
              arg_d = cell;
            } else if (v > second_d) {
              second_d = v;
            }
          }
          if (ex >= 0 && ex < w && ey >= 0 && ey < h) {
            const double v = xf.at(ex, ey) - probes.ero.data[cell];
            if (v < best_e) {
              second_e = best_e;
              best_e = v;
              arg_e = cell;
            } else if (v < second_e) {
              second_e = v;
            }
          }
        }
      }
      const size_t px = static_cast<size_t>(y) * w + x;
      if (std::isfinite(second_d)) {
        const double gap = best_d - second_d;
        if (gap < kTieEps) ++cache_.ties;
        if (gap < cache_.min_gap) cache_.min_gap = gap;
      }
      if (std::isfinite(second_e)) {
        const double gap = second_e - best_e;
        if (gap < kTieEps) ++cache_.ties;
        if (gap < cache_.min_gap) cache_.min_gap = gap;
      }
      const double u = best_d - best_e;
      cache_.argmax_dil[px] = arg_d;
      cache_.argmin_ero[px] = arg_e;
      cache_.u[px] = u;
      if (u < 0.0) ++cache_.negative_u;
      out.grid.data[px] = xi_inv(u, m_);
    }
  }
  cache_.valid = true;
  return out;
}

LayerGradients AsplundLayer::backward(const Grid& dloss_dout) {
  if (!cache_.valid) throw config_error("backward called without a forward cache");
  if (dloss_dout.width != cache_.width || dloss_dout.height != cache_.height)
    throw config_error("upstream gradient shape mismatch");

  const int kw = kernels_.width(), kh = kernels_.height();
  LayerGradients grads(kw, kh);
  const size_t cells = static_cast<size_t>(kw) * kh;

  for (size_t px = 0; px < dloss_dout.size(); ++px) {
    const double g = dloss_dout.data[px];
    if (g == 0.0) continue;
    // d g_hat / d u at u = delta - eps.
    const double s = g * std::exp(-cache_.u[px] / m_);

    const int je = cache_.argmin_ero[px];
    if (je >= 0) {
      // u rises when the erosion-side probe rises: d u / d ero = +1.
      const double v = cache_.v.data[je];
      grads.w_h.data[je] += s * xi_prime(kernels_.w_h.data[je], m_) * v;
      grads.w_m.data[je] += s * (cache_.xi_wh.data[je] - bottom_) * v * (1.0 - v);
    }
    const int jd = cache_.argmax_dil[px];
    if (jd >= 0) {
      // Dilation-side cells parameterize the reflected kernel entries.
      const size_t r = cells - 1 - static_cast<size_t>(jd);
      const double v = cache_.v.data[r];
      grads.w_h.data[r] += s * (-xi_prime(kernels_.w_h.data[r], m_) * v);
      grads.w_m.data[r] += s * (-cache_.xi_wh.data[r] - bottom_) * v * (1.0 - v);
    }
  }
  cache_.valid = false;
  return grads;
}

void AsplundLayer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write checkpoint: " + path.string());
  out << "lmm-kernels 1\n";
  out << "width " << kernels_.width() << "\n";
  out << "height " << kernels_.height() << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", m_);
  out << "m " << buf << "\n";
  for (const Grid* g : {&kernels_.w_h, &kernels_.w_m}) {
    out << (g == &kernels_.w_h ? "w_h\n" : "w_m\n");
    for (int j = 0; j < g->height; ++j) {
      for (int i = 0; i < g->width; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", g->at(i, j));
        out << buf << (i + 1 == g->width ? "" : " ");
      }
      out << "\n";
    }
  }
  if (!out) throw data_error("checkpoint write failed: " + path.string());
}

AsplundLayer AsplundLayer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open checkpoint: " + path.string());
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (!in || tag != "lmm-kernels" || version != 1)
    throw data_error("not a kernel checkpoint: " + path.string());
  int width = 0, height = 0;
  double m = 0.0;
  std::string key;
  in >> key >> width;
  if (!in || key != "width") throw data_error("checkpoint missing width");
  in >> key >> height;
  if (!in || key != "height") throw data_error("checkpoint missing height");
  in >> key >> m;
  if (!in || key != "m") throw data_error("checkpoint missing m");
  if (width <= 0 || height <= 0 || m <= 0) throw data_error("bad checkpoint header");
  KernelPair kernels(width, height);
  for (Grid* g : {&kernels.w_h, &kernels.w_m}) {
    in >> key;
    if (!in || (key != "w_h" && key != "w_m")) throw data_error("checkpoint missing kernel");
    for (double& v : g->data) in >> v;
    if (!in) throw data_error("checkpoint kernel payload truncated");
  }
  return AsplundLayer(std::move(kernels), m);
}

void sgd_update(KernelPair& kernels, const LayerGradients& grads, double alpha, double m) {
  for (size_t i = 0; i < kernels.w_h.size(); ++i) {
    double v = kernels.w_h.data[i] - alpha * grads.w_h.data[i];
    kernels.w_h.data[i] = std::min(v, m - kHeightMargin);
  }
  for (size_t i = 0; i < kernels.w_m.size(); ++i)
    kernels.w_m.data[i] -= alpha * grads.w_m.data[i];
}

}  // namespace lmm
