#include "lmm/dataset.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <string>

#include "lmm/asplund.hpp"
#include "lmm/errors.hpp"
#include "lmm/lip.hpp"

namespace lmm {

namespace {

// gzread handles both gzip and plain payloads transparently.
std::vector<uint8_t> read_all_maybe_gz(const std::filesystem::path& path) {
  gzFile gz = gzopen(path.string().c_str(), "rb");
  if (!gz) throw data_error("cannot open: " + path.string());
  std::vector<uint8_t> bytes;
  uint8_t buf[1 << 16];
  int n = 0;
  while ((n = gzread(gz, buf, sizeof buf)) > 0) bytes.insert(bytes.end(), buf, buf + n);
  const bool bad = n < 0;
  gzclose(gz);
  if (bad) throw data_error("decompression failed: " + path.string());
  return bytes;
}

uint32_t read_be32(const std::vector<uint8_t>& b, size_t offset) {
  if (offset + 4 > b.size())
    throw data_error("truncated IDX header at byte offset " + std::to_string(offset));
  return (uint32_t(b[offset]) << 24) | (uint32_t(b[offset + 1]) << 16) |
         (uint32_t(b[offset + 2]) << 8) | uint32_t(b[offset + 3]);
}

}  // namespace

std::vector<LipImage> load_idx_images(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = read_all_maybe_gz(path);
  if (bytes.empty()) throw data_error("empty IDX file: " + path.string());
  const uint32_t magic = read_be32(bytes, 0);
  if (magic != 0x00000803u)
    throw data_error("bad IDX3 magic at byte offset 0 in " + path.string());
  const uint32_t count = read_be32(bytes, 4);
  const uint32_t rows = read_be32(bytes, 8);
  const uint32_t cols = read_be32(bytes, 12);
  const size_t expected = 16 + size_t(count) * rows * cols;
  if (bytes.size() != expected)
    throw data_error("IDX payload size mismatch: have " + std::to_string(bytes.size()) +
                     " bytes, header implies " + std::to_string(expected));
  std::vector<LipImage> images;
  images.reserve(count);
  size_t offset = 16;
  for (uint32_t k = 0; k < count; ++k) {
    LipImage img(static_cast<int>(cols), static_cast<int>(rows), 0.0, kDefaultM);
    for (size_t i = 0; i < img.grid.size(); ++i)
      img.grid.data[i] = static_cast<double>(bytes[offset++]);
    images.push_back(std::move(img));
  }
  return images;
}

std::vector<uint8_t> load_idx_labels(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = read_all_maybe_gz(path);
  if (bytes.empty()) throw data_error("empty IDX file: " + path.string());
  const uint32_t magic = read_be32(bytes, 0);
  if (magic != 0x00000801u)
    throw data_error("bad IDX1 magic at byte offset 0 in " + path.string());
  const uint32_t count = read_be32(bytes, 4);
  if (bytes.size() != 8 + size_t(count))
    throw data_error("IDX1 payload size mismatch in " + path.string());
  return {bytes.begin() + 8, bytes.end()};
}

void write_idx_images(const std::filesystem::path& path, const std::vector<LipImage>& images) {
  if (images.empty()) throw config_error("write_idx_images: nothing to write");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write: " + path.string());
  const auto be32 = [&](uint32_t v) {
    const uint8_t b[4] = {uint8_t(v >> 24), uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  be32(0x00000803u);
  be32(static_cast<uint32_t>(images.size()));
  be32(static_cast<uint32_t>(images[0].height()));
  be32(static_cast<uint32_t>(images[0].width()));
  for (const LipImage& img : images) {
    if (img.width() != images[0].width() || img.height() != images[0].height())
      throw config_error("write_idx_images: mixed shapes");
    for (double v : img.grid.data) {
      const double r = std::min(255.0, std::max(0.0, std::round(v)));
      const uint8_t b = static_cast<uint8_t>(r);
      out.write(reinterpret_cast<const char*>(&b), 1);
    }
  }
  if (!out) throw data_error("IDX write failed: " + path.string());
}

Probe ReferenceProbe::as_probe() const {
  std::vector<double> heights(w_h.data);
  for (size_t i = 0; i < heights.size(); ++i) {
    if (!mask[i]) heights[i] = -kInf;
  }
  return make_probe(width, height, std::move(heights), mask, m);
}

ReferenceProbe make_reference_probe(double beta, double c, double m, int window) {
  if (beta <= 0.0) throw config_error("reference probe: beta must be positive");
  if (c < 0.0 || c >= m) throw config_error("reference probe: c must lie in [0, m)");
  ReferenceProbe p;
  p.beta = beta;
  p.c = c;
  p.width = window;
  p.height = window;
  p.m = m;
  p.w_h = Grid(window, window, 0.0);
  p.mask.assign(static_cast<size_t>(window) * window, 0);
  const int o = window / 2;
  for (int j = 0; j < window; ++j) {
    for (int i = 0; i < window; ++i) {
      const double n2 = double((i - o) * (i - o) + (j - o) * (j - o));
      const double h = lip_add(-beta * std::sqrt(7.0) * n2, c, m);
      const size_t cell = static_cast<size_t>(j) * window + i;
      if (h >= 0.0) {
        p.mask[cell] = 1;
        p.w_h.data[cell] = h;
      }
    }
  }
  // h(0) = c >= 0, so the centre is always in the support.
  if (!p.mask[static_cast<size_t>(o) * window + o])
    throw config_error("reference probe: empty support");
  return p;
}

std::vector<double> default_beta_grid() {
  return {0.2, 0.4, 0.6, 0.8, 1.0, 1.2};
}

std::vector<double> default_c_grid() {
  std::vector<double> out;
  for (double c = 10.0; c <= 250.0; c += 15.0) out.push_back(c);
  return out;
}

void save_reference_probe(const std::filesystem::path& path, const ReferenceProbe& p) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write probe: " + path.string());
  char buf[64];
  out << "lmm-probe 1\n";
  out << "width " << p.width << "\nheight " << p.height << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", p.m);
  out << "m " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", p.beta);
  out << "beta " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", p.c);
  out << "c " << buf << "\n";
  out << "heights\n";
  for (int j = 0; j < p.height; ++j) {
    for (int i = 0; i < p.width; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", p.w_h.at(i, j));
      out << buf << (i + 1 == p.width ? "" : " ");
    }
    out << "\n";
  }
  out << "mask\n";
  for (int j = 0; j < p.height; ++j) {
    for (int i = 0; i < p.width; ++i)
      out << int(p.mask[static_cast<size_t>(j) * p.width + i]) << (i + 1 == p.width ? "" : " ");
    out << "\n";
  }
  if (!out) throw data_error("probe write failed: " + path.string());
}

ReferenceProbe load_reference_probe(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open probe: " + path.string());
  std::string tag, key;
  int version = 0;
  in >> tag >> version;
  if (!in || tag != "lmm-probe" || version != 1)
    throw data_error("not a probe file: " + path.string());
  ReferenceProbe p;
  in >> key >> p.width;
  if (!in || key != "width") throw data_error("probe missing width");
  in >> key >> p.height;
  if (!in || key != "height") throw data_error("probe missing height");
  in >> key >> p.m;
  if (!in || key != "m") throw data_error("probe missing m");
  in >> key >> p.beta;
  if (!in || key != "beta") throw data_error("probe missing beta");
  in >> key >> p.c;
  if (!in || key != "c") throw data_error("probe missing c");
  if (p.width <= 0 || p.height <= 0) throw data_error("bad probe header");
  p.w_h = Grid(p.width, p.height);
  in >> key;
  if (!in || key != "heights") throw data_error("probe missing heights");
  for (double& v : p.w_h.data) in >> v;
  p.mask.assign(p.w_h.size(), 0);
  in >> key;
  if (!in || key != "mask") throw data_error("probe missing mask");
  for (uint8_t& v : p.mask) {
    int b = 0;
    in >> b;
    v = b ? 1 : 0;
  }
  if (!in) throw data_error("probe payload truncated: " + path.string());
  return p;
}

std::vector<LipImage> lip_shift_set(const std::vector<LipImage>& images, double k) {
  std::vector<LipImage> out;
  out.reserve(images.size());
  for (const LipImage& f : images)
    out.push_back(k >= 0.0 ? lip_add(f, k) : lip_sub(f, -k));
  return out;
}

std::vector<LipImage> build_ground_truth(const std::vector<LipImage>& images,
                                         const ReferenceProbe& probe) {
  const Probe b = probe.as_probe();
  std::vector<LipImage> out;
  out.reserve(images.size());
  for (const LipImage& f : images) out.push_back(asplund_map_morphological(f, b));
  return out;
}

namespace {

constexpr char kGtMagic[8] = {'L', 'M', 'M', 'G', 'T', '0', '1', '\n'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw data_error("truncated ground-truth cache: " + path.string());
  return v;
}

}  // namespace

void save_ground_truth(const std::filesystem::path& path, const ReferenceProbe& probe,
                       uint64_t data_hash, const std::vector<LipImage>& maps) {
  if (maps.empty()) throw config_error("save_ground_truth: nothing to save");
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw data_error("cannot write ground-truth cache: " + tmp.string());
    out.write(kGtMagic, sizeof kGtMagic);
    put<uint32_t>(out, static_cast<uint32_t>(maps[0].width()));
    put<uint32_t>(out, static_cast<uint32_t>(maps[0].height()));
    put<uint32_t>(out, static_cast<uint32_t>(maps.size()));
    put<uint32_t>(out, 0u);
    put<double>(out, probe.m);
    put<double>(out, probe.beta);
    put<double>(out, probe.c);
    put<uint64_t>(out, data_hash);
    for (const LipImage& g : maps)
      out.write(reinterpret_cast<const char*>(g.grid.data.data()),
                static_cast<std::streamsize>(g.grid.size() * sizeof(double)));
    if (!out) throw data_error("ground-truth cache write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<LipImage> load_ground_truth(const std::filesystem::path& path,
                                        GroundTruthHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open ground-truth cache: " + path.string());
  char magic[8] = {};
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kGtMagic, sizeof magic) != 0)
    throw data_error("bad ground-truth cache magic at byte offset 0: " + path.string());
  GroundTruthHeader h;
  h.width = take<uint32_t>(in, path);
  h.height = take<uint32_t>(in, path);
  h.count = take<uint32_t>(in, path);
  take<uint32_t>(in, path);  // pad
  h.m = take<double>(in, path);
  h.beta = take<double>(in, path);
  h.c = take<double>(in, path);
  h.data_hash = take<uint64_t>(in, path);
  std::vector<LipImage> maps;
  maps.reserve(h.count);
  for (uint32_t k = 0; k < h.count; ++k) {
    LipImage g(static_cast<int>(h.width), static_cast<int>(h.height), 0.0, h.m);
    if (!in.read(reinterpret_cast<char*>(g.grid.data.data()),
                 static_cast<std::streamsize>(g.grid.size() * sizeof(double))))
      throw data_error("truncated ground-truth payload: " + path.string());
    maps.push_back(std::move(g));
  }
  if (header) *header = h;
  return maps;
}

std::vector<LipImage> build_ground_truth_cached(const std::vector<LipImage>& images,
                                                const ReferenceProbe& probe,
                                                const std::filesystem::path& cache_file) {
  const uint64_t hash = dataset_hash(images);
  if (std::filesystem::exists(cache_file)) {
    GroundTruthHeader h;
    std::vector<LipImage> maps = load_ground_truth(cache_file, &h);
    if (h.data_hash == hash && h.beta == probe.beta && h.c == probe.c && h.m == probe.m &&
        maps.size() == images.size()) {
      return maps;
    }
  }
  std::vector<LipImage> maps = build_ground_truth(images, probe);
  save_ground_truth(cache_file, probe, hash, maps);
  return maps;
}

uint64_t dataset_hash(const std::vector<LipImage>& images) {
  uint64_t h = 1469598103934665603ull;  // FNV-1a
  const auto mix = [&](const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const LipImage& img : images) {
    const int32_t wh[2] = {img.width(), img.height()};
    mix(wh, sizeof wh);
    mix(img.grid.data.data(), img.grid.size() * sizeof(double));
  }
  return h;
}

std::vector<LipImage> synthetic_images(int count, int width, int height, uint64_t seed,
                                       double m) {
  // Flat backgrounds scattered with isolated darker and brighter blobs of
  // single-pixel size, at least a 7x7 window apart. Isolated extremes pin
  // one structuring-function cell each as the window slides over them,
  // which is what makes the fallback trainable at small dataset sizes;
  // both polarities are needed because the dilation side of the distance
  // map only sees dark extremes and the erosion side only bright ones.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> background(40.0, 190.0);
  std::uniform_real_distribution<double> depth(60.0, 180.0);
  std::uniform_int_distribution<int> jitter(0, 1);
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<LipImage> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double v0 = background(rng);
    LipImage img(width, height, v0, m);
    const int parity = coin(rng);
    for (int gy = 3; gy <= height - 4; gy += 7) {
      for (int gx = 3; gx <= width - 4; gx += 7) {
        const int x = gx + jitter(rng), y = gy + jitter(rng);
        const double d = depth(rng);
        const bool dark = ((gx / 7 + gy / 7 + parity) % 2) == 0;
        img.at(x, y) = dark ? lip_add(v0, d, m) : std::max(0.0, lip_sub(v0, d, m));
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace lmm
