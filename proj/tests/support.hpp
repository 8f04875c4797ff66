#pragma once

// Shared fixtures and test-only oracles.

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "rendermatch/ontology.hpp"
#include "rendermatch/registry.hpp"

namespace rendermatch::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(RENDERMATCH_DATA_DIR) / name;
}

inline const ConceptGraph& render_farm() {
  static const ConceptGraph g = load_ontology(read_file(data_path("render_farm.rfo")));
  return g;
}

inline const ConceptGraph& animation_fixture() {
  static const ConceptGraph g = load_ontology(read_file(data_path("animation_software.rfo")));
  return g;
}

// Upward closure by following parent links, as a set.
inline std::set<std::string> closure(const ConceptGraph& g, const std::string& id) {
  std::set<std::string> out{id};
  for (auto p = g.parent(id); p; p = g.parent(*p)) out.insert(*p);
  return out;
}

// Concept similarity by explicit set enumeration; independent of the
// depth/LCA path used in the library.
inline double brute_force_concept_sim(const ConceptGraph& g, const std::string& x, const std::string& y,
                                      double rho) {
  const auto ax = closure(g, x);
  const auto ay = closure(g, y);
  std::vector<std::string> shared;
  std::set_intersection(ax.begin(), ax.end(), ay.begin(), ay.end(), std::back_inserter(shared));
  const double n = static_cast<double>(shared.size());
  return rho * n / static_cast<double>(ax.size()) + (1.0 - rho) * n / static_cast<double>(ay.size());
}

// Random rooted tree with `n` nodes as an RFO document, declared in shuffled
// order so loading cannot rely on parent-before-child.
inline std::string random_tree_document(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::string> lines;
  lines.push_back("concept n0 -");
  for (std::size_t i = 1; i < n; ++i) {
    const auto parent = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    lines.push_back("concept n" + std::to_string(i) + " n" + std::to_string(parent));
  }
  std::shuffle(lines.begin(), lines.end(), rng);
  std::string doc;
  for (const auto& l : lines) doc += l + "\n";
  return doc;
}

// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("rendermatch-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

// Runs a shell command, capturing stdout.
inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string cli() { return RENDERMATCH_CLI; }

}  // namespace rendermatch::testing
