#include "lmm/manifest.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>

#include "lmm/errors.hpp"

namespace lmm {

void Manifest::set(const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  entries[key] = buf;
}

void Manifest::set(const std::string& key, long long value) {
  entries[key] = std::to_string(value);
}

std::string Manifest::get(const std::string& key, const std::string& fallback) const {
  const auto it = entries.find(key);
  return it == entries.end() ? fallback : it->second;
}

void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write manifest: " + path.string());
  out << "# lmm run manifest\n";
  for (const auto& [key, value] : m.entries) out << key << " " << value << "\n";
  if (!out) throw data_error("manifest write failed: " + path.string());
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open manifest: " + path.string());
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t sp = line.find(' ');
    if (sp == std::string::npos) continue;
    m.entries[line.substr(0, sp)] = line.substr(sp + 1);
  }
  return m;
}

std::string git_describe() {
  FILE* pipe = popen("git describe --always --dirty 2>/dev/null", "r");
  if (!pipe) return "unknown";
  char buf[256] = {};
  std::string out;
  while (fgets(buf, sizeof buf, pipe)) out += buf;
  pclose(pipe);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

}  // namespace lmm
