#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lmm/image.hpp"
#include "lmm/morphology.hpp"

namespace lmm {

// IDX image/label files (big-endian magic 0x00000803 / 0x00000801), plain or
// gzip-compressed. Pixels are promoted to float64 in [0, 255] with m = 256.
// Malformed files raise data_error naming the byte offset.
std::vector<LipImage> load_idx_images(const std::filesystem::path& path);
std::vector<uint8_t> load_idx_labels(const std::filesystem::path& path);
// Uncompressed IDX3 writer; pixels are rounded to the nearest byte.
void write_idx_images(const std::filesystem::path& path, const std::vector<LipImage>& images);

// Reference structuring function on a 7x7 window: heights
// h(x) = (-beta * sqrt(7) * |x|^2) (+) c where h >= 0, support excluded
// elsewhere; w_h is 0 off support and the mask is the support indicator.
struct ReferenceProbe {
  double beta = 0.0;
  double c = 0.0;
  int width = 0;
  int height = 0;
  Grid w_h;
  std::vector<uint8_t> mask;
  double m = kDefaultM;

  Probe as_probe() const;
};

ReferenceProbe make_reference_probe(double beta, double c, double m = kDefaultM,
                                    int window = 7);
// The paper's grids: beta in {0.2, ..., 1.2}, c in {10, 25, ..., 250};
// together they span 102 reference probes.
std::vector<double> default_beta_grid();
std::vector<double> default_c_grid();

void save_reference_probe(const std::filesystem::path& path, const ReferenceProbe& p);
ReferenceProbe load_reference_probe(const std::filesystem::path& path);

// Elementwise f (+) k for k >= 0 (darkening) or f (-) |k| for k < 0
// (brightening). Brightened pixels may go negative; they are kept as
// LIP-negative reals, never clamped.
std::vector<LipImage> lip_shift_set(const std::vector<LipImage>& images, double k);

// Ground-truth maps g = Asp(f) with the reference probe (morphological route).
std::vector<LipImage> build_ground_truth(const std::vector<LipImage>& images,
                                         const ReferenceProbe& probe);
// Disk-cached variant keyed by (dataset hash, beta, c); writes are atomic.
std::vector<LipImage> build_ground_truth_cached(const std::vector<LipImage>& images,
                                                const ReferenceProbe& probe,
                                                const std::filesystem::path& cache_file);

void save_ground_truth(const std::filesystem::path& path, const ReferenceProbe& probe,
                       uint64_t data_hash, const std::vector<LipImage>& maps);
struct GroundTruthHeader {
  uint32_t width = 0, height = 0, count = 0;
  double m = 0.0, beta = 0.0, c = 0.0;
  uint64_t data_hash = 0;
};
std::vector<LipImage> load_ground_truth(const std::filesystem::path& path,
                                        GroundTruthHeader* header = nullptr);

// FNV-1a over shape and raw pixel bits; stable across runs.
uint64_t dataset_hash(const std::vector<LipImage>& images);

// Seeded smooth-blob images for hermetic runs without the Fashion-MNIST
// files; pixel values lie in [0, 255].
std::vector<LipImage> synthetic_images(int count, int width = 28, int height = 28,
                                       uint64_t seed = 1, double m = kDefaultM);

}  // namespace lmm
