#pragma once

#include <filesystem>

#include "lmm/image.hpp"
#include "lmm/morphology.hpp"

namespace lmm {

// Learnable parameterization of a probe inside an A x B window: height
// kernel w_h (grey levels, < m) and mask kernel w_m (logits). Both start
// as null matrices.
struct KernelPair {
  Grid w_h;
  Grid w_m;

  KernelPair() = default;
  KernelPair(int width, int height) : w_h(width, height, 0.0), w_m(width, height, 0.0) {}
  int width() const { return w_h.width; }
  int height() const { return w_h.height; }
};

// Elementwise sigmoid of the mask logits; the soft support indicator.
Grid soft_mask(const Grid& w_m);

// 180-degree rotation, cell (i, j) -> (w-1-i, h-1-j).
Grid reflect180(const Grid& g);

// Soft structuring functions in xi space:
//   dil = -xi(w_h_reflected) * v_reflected + bottom * (1 - v_reflected)
//   ero =  xi(w_h) * v + bottom * (1 - v)
// with v = soft_mask(w_m). Both are finite dense grids; bottom stands in
// for -inf off the (soft) support.
struct EffectiveProbes {
  Grid dil;
  Grid ero;
};
EffectiveProbes effective_probes(const KernelPair& k, double bottom, double m = kDefaultM);

struct LayerGradients {
  Grid w_h;
  Grid w_m;

  LayerGradients() = default;
  LayerGradients(int width, int height) : w_h(width, height, 0.0), w_m(width, height, 0.0) {}
  void accumulate(const LayerGradients& o);
  void scale(double s);
};

// Trainable map-of-Asplund-distances layer. forward() records per-pixel
// argmax/argmin routing and the xi-space difference u; backward() consumes
// the cache and recomputes nothing.
class AsplundLayer {
 public:
  AsplundLayer(int kernel_width, int kernel_height, double m = kDefaultM);
  AsplundLayer(KernelPair kernels, double m = kDefaultM);

  // g_hat = xi_inv(dilate(xi(f), dil) - erode(xi(f), ero)). Input pixels at
  // or above m are clamped to m-1 (counted in clamped_inputs()).
  LipImage forward(const LipImage& f);

  // Exact subgradients of the loss w.r.t. w_h and w_m given dL/dg_hat.
  // Requires the cache of a matching forward; invalidates it.
  LayerGradients backward(const Grid& dloss_dout);

  const KernelPair& kernels() const { return kernels_; }
  KernelPair& kernels() { return kernels_; }
  double m() const { return m_; }
  double bottom() const { return bottom_; }

  bool has_cache() const { return cache_.valid; }
  int clamped_inputs() const { return cache_.clamped; }
  // Pixels whose xi-space difference came out negative in the last forward.
  int negative_u_pixels() const { return cache_.negative_u; }
  // Routing ties (top-two taps within 1e-9) seen in the last forward.
  long tie_events() const { return cache_.ties; }
  // Smallest top-two tap gap seen in the last forward, min over both paths.
  double min_routing_gap() const { return cache_.min_gap; }

  // Textual checkpoint: shape header, m, then w_h and w_m rows written with
  // %.17g so values round-trip exactly.
  void save(const std::filesystem::path& path) const;
  static AsplundLayer load(const std::filesystem::path& path);

 private:
  struct Cache {
    int width = 0;
    int height = 0;
    std::vector<int32_t> argmax_dil;  // linear kernel cell per output pixel
    std::vector<int32_t> argmin_ero;
    std::vector<double> u;
    Grid v;      // soft mask at forward time
    Grid xi_wh;  // xi(w_h) at forward time
    int clamped = 0;
    int negative_u = 0;
    long ties = 0;
    double min_gap = 0.0;
    bool valid = false;
  };

  KernelPair kernels_;
  double m_;
  double bottom_;  // -xi(m-1)
  Cache cache_;
};

// Plain gradient step w -= alpha * grad; keeps w_h below m.
void sgd_update(KernelPair& kernels, const LayerGradients& grads, double alpha,
                double m = kDefaultM);

}  // namespace lmm
