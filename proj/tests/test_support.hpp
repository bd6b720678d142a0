#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "lmm/image.hpp"
#include "lmm/layer.hpp"
#include "lmm/morphology.hpp"

namespace testsup {

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(uint64_t seed) : gen(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
  }
  int uniform_int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(gen);
  }
};

inline lmm::LipImage random_image(Rng& rng, int w, int h, double lo, double hi,
                                  double m = lmm::kDefaultM) {
  lmm::LipImage img(w, h, 0.0, m);
  for (double& v : img.grid.data) v = rng.uniform(lo, hi);
  return img;
}

// Random probe with at least the origin in the support.
inline lmm::Probe random_probe(Rng& rng, int w, int h, double hmin, double hmax,
                               double support_prob = 0.7, double m = lmm::kDefaultM) {
  const size_t n = static_cast<size_t>(w) * h;
  std::vector<double> heights(n, 0.0);
  std::vector<uint8_t> support(n, 0);
  for (size_t i = 0; i < n; ++i) {
    support[i] = rng.uniform(0.0, 1.0) < support_prob ? 1 : 0;
    heights[i] = rng.uniform(hmin, hmax);
  }
  support[static_cast<size_t>(h / 2) * w + (w / 2)] = 1;
  return lmm::make_probe(w, h, std::move(heights), std::move(support), m);
}

inline lmm::KernelPair random_kernels(Rng& rng, int w, int h, double h_lo, double h_hi,
                                      double logit_lo, double logit_hi) {
  lmm::KernelPair k(w, h);
  for (double& v : k.w_h.data) v = rng.uniform(h_lo, h_hi);
  for (double& v : k.w_m.data) v = rng.uniform(logit_lo, logit_hi);
  return k;
}

// Unique scratch directory under the build tree, removed eagerly on reuse.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / ("lmm_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsup
