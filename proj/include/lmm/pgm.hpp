#pragma once

#include <filesystem>

#include "lmm/image.hpp"

namespace lmm {

// 8-bit binary PGM (P5). Values are clamped to [0, 255] and rounded; when
// inverted is set the stored byte is 255 - v (the paper-style inverted
// display for distance maps).
void write_pgm(const std::filesystem::path& path, const Grid& values, bool inverted = false);
Grid read_pgm(const std::filesystem::path& path);

// Exact float64 sidecar next to a PGM preview. The numeric payload is never
// display-scaled; the header records how the preview was produced.
struct SidecarMeta {
  double m = kDefaultM;
  bool display_inverted = false;
};
void write_f64(const std::filesystem::path& path, const Grid& values, const SidecarMeta& meta);
Grid read_f64(const std::filesystem::path& path, SidecarMeta* meta = nullptr);

// Writes base.pgm (preview) and base.f64 (exact values).
void dump_panel(const std::filesystem::path& base, const Grid& values, double m,
                bool display_inverted);

}  // namespace lmm
