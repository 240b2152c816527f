#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latte/cascade.hpp"
#include "latte/hetgraph.hpp"
#include "latte/losses.hpp"
#include "latte/neuralnet.hpp"
#include "latte/proximity.hpp"
#include "latte/rawfeat.hpp"

namespace latte {

enum class Task { kNone, kCommunity, kDiffusion };

std::string_view to_string(Task task);
std::optional<Task> task_from_string(std::string_view s);

struct TrainConfig {
  Task task = Task::kNone;
  // Hidden widths between the input and the embedding. Empty means
  // layer_schedule() picks them from the input width.
  std::vector<std::size_t> hidden;
  std::size_t k = 4;   // community count; the embedding width for the community task
  std::size_t d = 64;  // embedding width for the other tasks
  std::size_t max_order = kDefaultMaxOrder;

  double alpha = 1.0;
  double beta = 1000.0;
  double theta = 0.1;
  double gamma = 1000.0;
  double eta = 10.0;
  double delta = -1.0;
  std::optional<double> tau;
  double c = 0.5;  // ignored (treated as 1) when task is none

  double learning_rate = 0.001;
  std::size_t epochs = 500;
  std::size_t batch_size = 64;  // 0 means full batch
  std::uint64_t seed = 1;
  double tolerance = 1e-6;
  std::size_t patience = 5;  // consecutive epochs under tolerance before stopping

  std::size_t embedding_width() const { return task == Task::kCommunity ? k : d; }
  double effective_c() const { return task == Task::kNone ? 1.0 : c; }
  DiffusionWeights diffusion_weights() const { return {eta, delta, tau}; }
  // Every violated constraint, not just the first.
  std::vector<std::string> validate() const;
};

// Full-graph objective terms after one epoch. Proximity entries are
// already divided by their off-diagonal support, as they enter L_e.
struct LossRecord {
  std::size_t epoch = 0;
  double reconstruction = 0.0;
  std::vector<double> proximity;
  double regularization = 0.0;
  double task = 0.0;
  double embedding = 0.0;
  double joint = 0.0;
};

// The joint objective over one graph with its gradient estimators.
//
// Per minibatch, the upstream gradient of each batch row is an estimate of
// the full dJ/dz_i: reconstruction exactly, pairwise terms from in-batch
// partners scaled by (V-1)/(b-1) (or (U-1)/(b_u-1) over users), the
// orthonormal term through a Gram matrix scaled by U/b_u. The regularizer
// enters with weight b/V. Summed over the batches of an epoch this matches
// the full gradient in expectation; with the whole node set as the batch it
// is the exact gradient.
class Objective {
 public:
  // `features` must already be scaled to [0,1]. `cascades` is required for
  // the diffusion task and ignored otherwise. The stack and cascades are
  // referenced, not copied.
  Objective(const HetGraph& g, Matrix features, const ProximityStack& stack, const CascadeSet* cascades,
            const TrainConfig& cfg);

  std::size_t num_nodes() const { return static_cast<std::size_t>(features_.rows()); }
  std::size_t num_users() const { return num_users_; }
  const Matrix& features() const { return features_; }

  LossRecord evaluate(const AutoencoderModel& model) const;
  Gradients batch_gradient(const AutoencoderModel& model, std::span<const std::size_t> batch) const;
  Gradients full_gradient(const AutoencoderModel& model) const;

 private:
  // dL_t/dz estimate for the user rows of a batch (other rows zero).
  Matrix task_upstream(const Matrix& z, std::span<const std::size_t> batch) const;

  TrainConfig cfg_;
  Matrix features_;
  const ProximityStack& stack_;
  const CascadeSet* cascades_;
  std::size_t num_users_;
  SparseMatrix user_adjacency_;
  std::vector<double> support_;  // off-diagonal nonzeros per proximity order
};

struct TrainResult {
  AutoencoderModel model;
  Matrix embedding;  // one row per node, graph order
  std::vector<LossRecord> history;  // epoch 0 is the initial model
  ColumnScaler scaler;
  bool converged = false;
};

// Minibatch SGD on the joint objective. Each epoch shuffles the nodes with a
// generator derived from cfg.seed and visits them in batches of
// cfg.batch_size. Stops once the relative change of the joint loss stays
// below cfg.tolerance for cfg.patience consecutive epochs, or after
// cfg.epochs. Throws ConfigError for an invalid config and NumericError
// naming the epoch when the loss stops being finite.
TrainResult train(const HetGraph& g, const FeatureMatrix& features, const ProximityStack& stack,
                  const CascadeSet* cascades, const TrainConfig& cfg);

// Same as train() but starting from a given model, which must match the
// feature width.
TrainResult train_from(AutoencoderModel model, const HetGraph& g, const FeatureMatrix& features,
                       const ProximityStack& stack, const CascadeSet* cascades, const TrainConfig& cfg);

// CSV with columns epoch, L_a, L_1..L_n, L_reg, L_t, joint.
void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path);

// Scores every candidate with `metric` (higher is better), up to `jobs`
// candidates at a time, and returns the best one. Ties go to the smaller c.
double grid_search_c(std::span<const double> candidates, const std::function<double(double)>& metric,
                     std::size_t jobs = 1);

}  // namespace latte
