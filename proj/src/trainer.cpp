#include "latte/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <string>

#include "latte/error.hpp"
#include "latte/parallel.hpp"

namespace latte {

std::string_view to_string(Task task) {
  switch (task) {
    case Task::kNone: return "none";
    case Task::kCommunity: return "community";
    case Task::kDiffusion: return "diffusion";
  }
  return "none";
}

std::optional<Task> task_from_string(std::string_view s) {
  if (s == "none") return Task::kNone;
  if (s == "community") return Task::kCommunity;
  if (s == "diffusion") return Task::kDiffusion;
  return std::nullopt;
}

std::vector<std::string> TrainConfig::validate() const {
  std::vector<std::string> errors;
  if (!(c >= 0.0 && c <= 1.0)) errors.push_back("train.c must lie in [0, 1]");
  if (!(learning_rate > 0.0)) errors.push_back("train.learning_rate must be positive");
  if (task == Task::kCommunity && k < 2) errors.push_back("train.k must be at least 2 for the community task");
  if (task != Task::kCommunity && d < 1) errors.push_back("train.d must be positive");
  if (max_order < 1) errors.push_back("train.max_order must be at least 1");
  if (std::find(hidden.begin(), hidden.end(), std::size_t{0}) != hidden.end())
    errors.push_back("train.hidden widths must be positive");
  if (!(alpha >= 0.0)) errors.push_back("train.alpha must be non-negative");
  if (!(beta >= 0.0)) errors.push_back("train.beta must be non-negative");
  if (!(theta >= 0.0)) errors.push_back("train.theta must be non-negative");
  if (!(gamma > 0.0)) errors.push_back("train.gamma must be positive");
  if (!(eta > 1.0)) errors.push_back("train.eta must exceed 1");
  if (!(delta < 0.0)) errors.push_back("train.delta must be negative");
  if (tau && !(*tau > 0.0)) errors.push_back("train.tau must be positive");
  if (!(tolerance >= 0.0)) errors.push_back("train.tolerance must be non-negative");
  if (patience < 1) errors.push_back("train.patience must be at least 1");
  return errors;
}

namespace {

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(static_cast<Index>(rows[i]));
  return out;
}

Matrix gather_block(const Matrix& m, std::span<const std::size_t> idx) {
  const auto n = static_cast<Index>(idx.size());
  Matrix out(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) out(i, j) = m(static_cast<Index>(idx[i]), static_cast<Index>(idx[j]));
  return out;
}

void throw_if_invalid(const TrainConfig& cfg) {
  const auto errors = cfg.validate();
  if (errors.empty()) return;
  std::string msg = errors.front();
  for (std::size_t i = 1; i < errors.size(); ++i) msg += "; " + errors[i];
  throw ConfigError(msg);
}

bool finite(const LossRecord& r) {
  return std::isfinite(r.joint) && std::isfinite(r.embedding) && std::isfinite(r.task);
}

}  // namespace

Objective::Objective(const HetGraph& g, Matrix features, const ProximityStack& stack, const CascadeSet* cascades,
                     const TrainConfig& cfg)
    : cfg_(cfg),
      features_(std::move(features)),
      stack_(stack),
      cascades_(cascades),
      num_users_(g.num_users()),
      user_adjacency_(user_adjacency(g).matrix) {
  if (static_cast<std::size_t>(features_.rows()) != g.num_nodes())
    throw ShapeError("feature rows do not match the graph's node count");
  if (stack_.size() != g.num_nodes()) throw ShapeError("proximity stack does not match the graph's node count");
  if (stack_.max_order() < cfg_.max_order) throw ShapeError("proximity stack has fewer orders than train.max_order");
  if (cfg_.task == Task::kDiffusion && cascades_ == nullptr) throw ConfigError("the diffusion task needs cascades");
  for (std::size_t n = 1; n <= cfg_.max_order; ++n)
    support_.push_back(static_cast<double>(offdiag_support(stack_.power(n))));
}

LossRecord Objective::evaluate(const AutoencoderModel& model) const {
  const ForwardPass pass = forward(model, features_);
  const Matrix& z = pass.embedding();
  LossRecord r;
  r.reconstruction = masked_loss(features_, pass.reconstruction(), cfg_.gamma);
  for (std::size_t n = 0; n < support_.size(); ++n) {
    r.proximity.push_back(support_[n] > 0.0 ? proximity_loss(z, stack_.power(n + 1)) / support_[n] : 0.0);
  }
  r.regularization = regularization(model);
  r.embedding = embedding_objective(r.reconstruction, r.proximity, cfg_.alpha, r.regularization, cfg_.theta);

  const Matrix zu = z.topRows(static_cast<Index>(num_users_));
  if (cfg_.task == Task::kCommunity) {
    r.task = community_loss(zu, user_adjacency_, cfg_.beta).value;
  } else if (cfg_.task == Task::kDiffusion) {
    r.task = diffusion_loss(zu, *cascades_, cfg_.diffusion_weights()).value;
  }
  r.joint = joint_objective(cfg_.effective_c(), r.embedding, r.task);
  return r;
}

Matrix Objective::task_upstream(const Matrix& z, std::span<const std::size_t> batch) const {
  Matrix up = Matrix::Zero(z.rows(), z.cols());
  std::vector<std::size_t> positions;
  std::vector<Index> local(num_users_, -1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i] >= num_users_) continue;
    local[batch[i]] = static_cast<Index>(positions.size());
    positions.push_back(i);
  }
  const std::size_t bu = positions.size();
  if (bu == 0) return up;

  const Matrix zu = gather_rows(z, positions);
  Matrix grad = Matrix::Zero(zu.rows(), zu.cols());
  const double users = static_cast<double>(num_users_);
  const double pair_scale = bu >= 2 ? (users - 1.0) / static_cast<double>(bu - 1) : 0.0;

  if (cfg_.task == Task::kCommunity) {
    if (bu >= 2) {
      std::vector<Eigen::Triplet<double>> entries;
      for (std::size_t a = 0; a < bu; ++a) {
        const std::size_t global = batch[positions[a]];
        for (SparseMatrix::InnerIterator it(user_adjacency_, static_cast<Index>(global)); it; ++it) {
          const Index other = local[static_cast<std::size_t>(it.row())];
          if (other >= 0) entries.emplace_back(other, static_cast<Index>(a), it.value());
        }
      }
      SparseMatrix sub(static_cast<Index>(bu), static_cast<Index>(bu));
      sub.setFromTriplets(entries.begin(), entries.end());
      grad += pair_scale * laplacian_trace(zu, sub).grad;
    }
    // dJ/dz_i = 4 beta z_i (G - I) with G estimated from the batch rows.
    const double gram_scale = users / static_cast<double>(bu);
    grad += orthonormal_penalty(zu, cfg_.beta, gram_scale).grad / gram_scale;
  } else if (cfg_.task == Task::kDiffusion && bu >= 2) {
    CascadeSet sub;
    sub.reserve(cascades_->size());
    for (const Cascade& c : *cascades_) {
      Cascade s;
      for (std::size_t u : c.activated)
        if (local[u] >= 0) s.activated.push_back(static_cast<std::size_t>(local[u]));
      if (s.activated.empty()) continue;
      for (auto [a, b] : c.edges) {
        if (local[a] < 0 || local[b] < 0) continue;
        const auto la = static_cast<std::size_t>(local[a]);
        const auto lb = static_cast<std::size_t>(local[b]);
        s.edges.emplace_back(std::min(la, lb), std::max(la, lb));
      }
      std::sort(s.activated.begin(), s.activated.end());
      std::sort(s.edges.begin(), s.edges.end());
      sub.push_back(std::move(s));
    }
    grad += pair_scale * diffusion_loss(zu, sub, cfg_.diffusion_weights()).grad;
  }

  for (std::size_t a = 0; a < bu; ++a) up.row(static_cast<Index>(positions[a])) = grad.row(static_cast<Index>(a));
  return up;
}

Gradients Objective::batch_gradient(const AutoencoderModel& model, std::span<const std::size_t> batch) const {
  const double nodes = static_cast<double>(num_nodes());
  const auto b = batch.size();
  const double c = cfg_.effective_c();
  const ForwardPass pass = forward(model, gather_rows(features_, batch));
  const Matrix& z = pass.embedding();
  Matrix upstream = Matrix::Zero(z.rows(), z.cols());

  if (c > 0.0 && cfg_.alpha != 0.0 && b >= 2) {
    const double pair_scale = (nodes - 1.0) / static_cast<double>(b - 1);
    for (std::size_t n = 0; n < support_.size(); ++n) {
      if (support_[n] == 0.0) continue;
      const LossGrad lg = proximity_loss_grad(z, gather_block(stack_.power(n + 1), batch));
      upstream += (c * cfg_.alpha * pair_scale / support_[n]) * lg.grad;
    }
  }
  if (c < 1.0 && cfg_.task != Task::kNone) upstream += (1.0 - c) * task_upstream(z, batch);

  Gradients grads = backward(model, pass, upstream, cfg_.gamma, c).grads;
  if (cfg_.theta != 0.0 && c > 0.0)
    add_regularization_grad(model, grads, c * cfg_.theta * static_cast<double>(b) / nodes);
  return grads;
}

Gradients Objective::full_gradient(const AutoencoderModel& model) const {
  std::vector<std::size_t> all(num_nodes());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return batch_gradient(model, all);
}

TrainResult train(const HetGraph& g, const FeatureMatrix& features, const ProximityStack& stack,
                  const CascadeSet* cascades, const TrainConfig& cfg) {
  throw_if_invalid(cfg);
  const auto width = static_cast<std::size_t>(features.values.cols());
  std::vector<std::size_t> schedule;
  if (cfg.hidden.empty()) {
    schedule = layer_schedule(width, cfg.embedding_width());
  } else {
    schedule.push_back(width);
    schedule.insert(schedule.end(), cfg.hidden.begin(), cfg.hidden.end());
    schedule.push_back(cfg.embedding_width());
  }
  return train_from(AutoencoderModel(std::move(schedule), cfg.seed), g, features, stack, cascades, cfg);
}

TrainResult train_from(AutoencoderModel model, const HetGraph& g, const FeatureMatrix& features,
                       const ProximityStack& stack, const CascadeSet* cascades, const TrainConfig& cfg) {
  throw_if_invalid(cfg);
  if (model.input_width() != static_cast<std::size_t>(features.values.cols()))
    throw ShapeError("model input width does not match the feature width");
  if (model.embedding_width() != cfg.embedding_width())
    throw ShapeError("model embedding width does not match the configured width");

  TrainResult result;
  result.scaler = ColumnScaler::fit(features.values);
  const Objective objective(g, result.scaler.apply(features.values), stack, cascades, cfg);

  result.history.push_back(objective.evaluate(model));
  if (!finite(result.history.back())) throw NumericError("non-finite loss at epoch 0");

  const std::size_t n = objective.num_nodes();
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x6a09e667f3bcc909ULL);
  std::size_t calm_epochs = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    try {
      for (std::size_t start = 0; start < n; start += batch) {
        const std::span<const std::size_t> ids(order.data() + start, std::min(batch, n - start));
        sgd_step(model, objective.batch_gradient(model, ids), cfg.learning_rate);
      }
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }

    LossRecord record = objective.evaluate(model);
    record.epoch = epoch;
    if (!finite(record)) throw NumericError("training diverged at epoch " + std::to_string(epoch));
    const double previous = result.history.back().joint;
    result.history.push_back(std::move(record));

    const double change = std::abs(result.history.back().joint - previous) / std::max(std::abs(previous), 1e-300);
    calm_epochs = change < cfg.tolerance ? calm_epochs + 1 : 0;
    if (calm_epochs >= cfg.patience) {
      result.converged = true;
      break;
    }
  }

  result.embedding = encode(model, objective.features());
  result.model = std::move(model);
  return result;
}

void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const std::size_t orders = history.empty() ? 0 : history.front().proximity.size();
  out << "epoch,L_a";
  for (std::size_t n = 1; n <= orders; ++n) out << ",L_" << n;
  out << ",L_reg,L_t,joint\n";
  out << std::setprecision(17);
  for (const LossRecord& r : history) {
    out << r.epoch << ',' << r.reconstruction;
    for (double l : r.proximity) out << ',' << l;
    out << ',' << r.regularization << ',' << r.task << ',' << r.joint << '\n';
  }
}

double grid_search_c(std::span<const double> candidates, const std::function<double(double)>& metric,
                     std::size_t jobs) {
  if (candidates.empty()) throw ConfigError("grid search needs at least one candidate c");
  std::vector<double> scores(candidates.size());
  parallel_for(candidates.size(), jobs, [&](std::size_t i) { scores[i] = metric(candidates[i]); });
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (scores[i] > scores[best] || (scores[i] == scores[best] && candidates[i] < candidates[best])) best = i;
  }
  return candidates[best];
}

}  // namespace latte
