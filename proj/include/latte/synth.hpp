#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "latte/cascade.hpp"
#include "latte/hetgraph.hpp"
#include "latte/tasks_eval.hpp"

namespace latte {

// Planted-partition heterogeneous network generator.
struct SynthConfig {
  std::size_t users = 200;
  std::size_t blocks = 4;
  double p_in = 0.3;
  double p_out = 0.02;
  std::size_t posts_min = 1;  // posts per user, uniform in [min, max]
  std::size_t posts_max = 3;
  std::size_t words_per_post = 6;
  std::size_t vocab = 200;
  std::size_t name_vocab = 40;
  std::size_t locations = 40;
  std::size_t topics = 50;
  std::size_t cascades = 50;  // one per topic, at most `topics`
  double checkin_prob = 0.3;
  double q = 0.1;  // independent-cascade activation probability
  // Probability that an attribute is drawn from the user's block-specific
  // pool rather than uniformly.
  double attribute_signal = 0.8;
  std::uint64_t seed = 1;

  // Human-readable list of violated constraints; empty when valid.
  std::vector<std::string> validate() const;
};

struct CascadeSimulation {
  CascadeSet cascades;
  std::vector<Link> retweets;  // one per distinct activation edge
};

struct SyntheticNetwork {
  HetGraph graph;  // includes the retweet links
  CommunityAssignment truth;
  CascadeSet cascades;
};

// SBM friend links plus posts whose words, hours, check-ins, topics and the
// author's profile lean towards the author's block. Deterministic per seed.
// Throws ConfigError on an infeasible config.
std::pair<HetGraph, CommunityAssignment> generate_graph(const SynthConfig& cfg);

// Independent cascade per topic from a random seed user over friend links:
// each newly activated user gets one chance to activate each inactive friend
// with probability q. Each cascade draws from its own sub-seed.
CascadeSimulation simulate_cascades(const HetGraph& g, const SynthConfig& cfg);

SyntheticNetwork generate_network(const SynthConfig& cfg);

// Graph bundle plus cascades.json and ground_truth.json.
void save_network(const SyntheticNetwork& net, const std::filesystem::path& dir);

// ground_truth.json: {"k": k, "communities": {"user id": 1-based label}}.
void save_ground_truth(const CommunityAssignment& truth, const HetGraph& g, const std::filesystem::path& path);
CommunityAssignment load_ground_truth(const HetGraph& g, const std::filesystem::path& path);

}  // namespace latte
