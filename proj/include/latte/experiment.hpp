#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "json.hpp"
#include "latte/cascade.hpp"
#include "latte/hetgraph.hpp"
#include "latte/proximity.hpp"
#include "latte/tasks_eval.hpp"
#include "latte/trainer.hpp"

namespace latte {

// End-to-end pipelines: features and proximity from a graph, training, and
// the downstream evaluation protocol.

struct CommunityMetrics {
  double ndbi = 0.0;
  double silhouette = 0.0;
  double density = 0.0;
  double entropy = 0.0;
  double ncut = 0.0;
  std::optional<double> ari;  // only with a known planted partition
};

nlohmann::json to_json(const CommunityMetrics& m);

// NDBI and silhouette on the user block of the highest-order proximity
// matrix, density, entropy and ncut on the friend adjacency.
CommunityMetrics evaluate_communities(const CommunityAssignment& assign, const HetGraph& g,
                                      const ProximityStack& stack, const CommunityAssignment* truth = nullptr);

// Proximity stack over all node and link kinds.
ProximityStack graph_proximity(const HetGraph& g, std::size_t max_order);

struct CommunityRun {
  TrainResult training;
  CommunityAssignment assignment;
  CommunityMetrics metrics;
};

// Trains with the community task (the config's task is overridden), clusters
// the user embeddings with k-means and scores the result.
CommunityRun run_community(const HetGraph& g, const TrainConfig& cfg, const CommunityAssignment* truth = nullptr);

// k-means over the user rows of an embedding plus the community metrics.
CommunityRun cluster_embedding(const Matrix& embedding, const HetGraph& g, const ProximityStack& stack,
                               std::size_t k, std::uint64_t seed, const CommunityAssignment* truth = nullptr);

struct DiffusionConfig {
  double sample_ratio = 1.0;  // share of training positives kept
  int folds = 10;
  std::size_t folds_to_run = 10;  // evaluate only the first folds
  std::size_t negative_ratio = 10;  // sampled non-retweet pairs per retweet link
  std::size_t top_k = 100;

  std::vector<std::string> validate() const;
};

struct FoldResult {
  int fold = 0;
  double auc = 0.0;
  double precision = 0.0;
  std::size_t train_positives = 0;
  std::size_t test_positives = 0;
  std::size_t test_negatives = 0;
};

struct DiffusionRun {
  std::vector<FoldResult> folds;
  double mean_auc = 0.0;
  double mean_precision = 0.0;
};

nlohmann::json to_json(const DiffusionRun& run);

// Retweet links become positive user pairs, joined by negative_ratio times as
// many uniformly sampled non-retweet pairs, split into stratified folds. Per
// fold the held-out retweets and the dropped share of training retweets are
// removed from the graph and from the cascades (whose activated sets shrink
// to the endpoints of the remaining activation edges), a diffusion-task model
// is trained, and the held-out pairs are ranked by connection probability.
DiffusionRun run_diffusion(const HetGraph& g, const CascadeSet& cascades, const TrainConfig& cfg,
                           const DiffusionConfig& dcfg, std::size_t jobs = 1);

// All user pairs joined by a retweet link plus sampled negatives. Exposed
// for tests.
std::vector<LabeledPair> diffusion_pairs(const HetGraph& g, std::size_t negative_ratio, std::uint64_t seed);

// Cascades restricted to the given activation edges (pairs with a < b).
CascadeSet restrict_cascades(const CascadeSet& cascades,
                             const std::vector<std::pair<std::size_t, std::size_t>>& kept_edges);

nlohmann::json scaler_to_json(const ColumnScaler& s);
ColumnScaler scaler_from_json(const nlohmann::json& j);

}  // namespace latte
