#include "lmm/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "lmm/errors.hpp"

namespace lmm {

namespace {

uint8_t to_byte(double v, bool inverted) {
  double r = std::round(std::min(255.0, std::max(0.0, v)));
  if (inverted) r = 255.0 - r;
  return static_cast<uint8_t>(r);
}

int next_pnm_int(std::istream& in, const std::filesystem::path& path) {
  // Skips whitespace and '#' comment lines between header tokens.
  int c = in.get();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    }
    c = in.get();
  }
  if (c == EOF) throw data_error("truncated PGM header: " + path.string());
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const Grid& values, bool inverted) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write PGM: " + path.string());
  out << "P5\n" << values.width << " " << values.height << "\n255\n";
  for (double v : values.data) {
    const uint8_t b = to_byte(v, inverted);
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!out) throw data_error("PGM write failed: " + path.string());
}

Grid read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open PGM: " + path.string());
  char p = 0, five = 0;
  in.get(p).get(five);
  if (!in || p != 'P' || five != '5') throw data_error("not a P5 PGM: " + path.string());
  const int width = next_pnm_int(in, path);
  const int height = next_pnm_int(in, path);
  const int maxval = next_pnm_int(in, path);
  if (width <= 0 || height <= 0 || maxval != 255)
    throw data_error("unsupported PGM header in " + path.string());
  Grid out(width, height);
  for (double& v : out.data) {
    const int c = in.get();
    if (c == EOF) throw data_error("truncated PGM payload: " + path.string());
    v = static_cast<double>(c);
  }
  return out;
}

void write_f64(const std::filesystem::path& path, const Grid& values, const SidecarMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write sidecar: " + path.string());
  char buf[64];
  out << "lmm-f64 1\n";
  out << "width " << values.width << "\nheight " << values.height << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", meta.m);
  out << "m " << buf << "\n";
  out << "display clamp-round-255" << (meta.display_inverted ? "-inverted" : "") << "\n";
  out << "data\n";
  out.write(reinterpret_cast<const char*>(values.data.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw data_error("sidecar write failed: " + path.string());
}

Grid read_f64(const std::filesystem::path& path, SidecarMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open sidecar: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "lmm-f64 1")
    throw data_error("not an lmm-f64 sidecar: " + path.string());
  int width = 0, height = 0;
  double m = 0.0;
  bool inverted = false;
  while (std::getline(in, line)) {
    if (line == "data") break;
    const size_t sp = line.find(' ');
    if (sp == std::string::npos) throw data_error("bad sidecar header line: " + line);
    const std::string key = line.substr(0, sp), value = line.substr(sp + 1);
    if (key == "width") width = std::stoi(value);
    else if (key == "height") height = std::stoi(value);
    else if (key == "m") m = std::stod(value);
    else if (key == "display") inverted = value.find("inverted") != std::string::npos;
  }
  if (width <= 0 || height <= 0) throw data_error("bad sidecar shape: " + path.string());
  Grid out(width, height);
  if (!in.read(reinterpret_cast<char*>(out.data.data()),
               static_cast<std::streamsize>(out.size() * sizeof(double))))
    throw data_error("truncated sidecar payload: " + path.string());
  if (meta) *meta = SidecarMeta{m, inverted};
  return out;
}

void dump_panel(const std::filesystem::path& base, const Grid& values, double m,
                bool display_inverted) {
  std::filesystem::path pgm = base, f64 = base;
  pgm += ".pgm";
  f64 += ".f64";
  write_pgm(pgm, values, display_inverted);
  write_f64(f64, values, SidecarMeta{m, display_inverted});
}

}  // namespace lmm
