#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace lmm {

// Flat key-value run manifest: one "key value" pair per line, '#' comments.
// Holds everything needed to reproduce a run on the same platform.
struct Manifest {
  std::map<std::string, std::string> entries;

  void set(const std::string& key, const std::string& value) { entries[key] = value; }
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  std::string get(const std::string& key, const std::string& fallback = "") const;
};

void save_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest load_manifest(const std::filesystem::path& path);

// Best-effort `git describe --always --dirty`; "unknown" outside a work tree.
std::string git_describe();
std::string iso_timestamp();

}  // namespace lmm
