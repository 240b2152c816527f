#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "latte/hetgraph.hpp"

namespace latte {

// Infected network of one topic: the activated users and the activation
// (diffusion) edges among them. Users are indices into the graph's user
// prefix. Edges are unordered; stored with first < second.
struct Cascade {
  std::string topic;
  std::vector<std::size_t> activated;  // sorted, unique
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // sorted, unique

  bool contains(std::size_t user) const;
  bool has_edge(std::size_t a, std::size_t b) const;
  bool operator==(const Cascade&) const = default;
};

using CascadeSet = std::vector<Cascade>;

// Sorts, dedups and checks that every edge endpoint is activated. Throws
// Error otherwise.
void canonicalize(Cascade& c);

// cascades.json: {"topic": {"activated": [ids], "edges": [[a, b], ...]}}.
void save_cascades(const CascadeSet& cascades, const HetGraph& g, const std::filesystem::path& path);
CascadeSet load_cascades(const HetGraph& g, const std::filesystem::path& path);

}  // namespace latte
