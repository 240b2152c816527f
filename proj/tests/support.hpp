#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "latte/hetgraph.hpp"
#include "latte/types.hpp"

namespace testing {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("latte_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// Bundle with the given nodes.tsv and links.tsv bodies and empty attributes.
inline void write_bundle(const std::filesystem::path& dir, const std::string& nodes, const std::string& links,
                         const std::string& topics = "[]", const std::string& users = "{}",
                         const std::string& posts = "{}") {
  std::filesystem::create_directories(dir);
  write_file(dir / "nodes.tsv", nodes);
  write_file(dir / "links.tsv", links);
  write_file(dir / "topics.json", topics);
  write_file(dir / "user_attrs.json", users);
  write_file(dir / "post_attrs.json", posts);
}

// Users u0..u{n-1} joined by the given friend pairs.
inline latte::HetGraph friend_graph(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  latte::GraphParts parts;
  for (std::size_t i = 0; i < n; ++i) parts.nodes.push_back({"u" + std::to_string(i), latte::NodeKind::kUser});
  for (auto [a, b] : edges)
    parts.links.push_back({"u" + std::to_string(a), "u" + std::to_string(b), latte::LinkKind::kFriend});
  return latte::HetGraph::build(std::move(parts));
}

// Random symmetric 0/1 matrix with zero diagonal and `edges` distinct edges.
inline latte::SparseMatrix random_adjacency(int n, int edges, std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> all;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) all.emplace_back(i, j);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min<std::size_t>(all.size(), static_cast<std::size_t>(edges)));
  std::vector<Eigen::Triplet<double>> t;
  for (auto [i, j] : all) {
    t.emplace_back(i, j, 1.0);
    t.emplace_back(j, i, 1.0);
  }
  latte::SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

inline latte::Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  latte::Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

}  // namespace testing
