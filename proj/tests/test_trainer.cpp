#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "doctest.h"
#include "latte/error.hpp"
#include "latte/experiment.hpp"
#include "latte/synth.hpp"
#include "latte/trainer.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace latte;

namespace {

// Roughly fifty nodes: 16 users with two posts each.
SyntheticNetwork small_network(std::uint64_t seed = 3) {
  SynthConfig cfg;
  cfg.users = 16;
  cfg.blocks = 2;
  cfg.posts_min = 2;
  cfg.posts_max = 2;
  cfg.vocab = 30;
  cfg.name_vocab = 10;
  cfg.locations = 8;
  cfg.topics = 6;
  cfg.cascades = 6;
  cfg.q = 0.4;
  cfg.seed = seed;
  return generate_network(cfg);
}

TrainConfig small_config(Task task) {
  TrainConfig cfg;
  cfg.task = task;
  cfg.hidden = {12};
  cfg.k = 3;
  cfg.d = 4;
  cfg.max_order = 2;
  cfg.gamma = 10.0;
  cfg.beta = 1.0;
  cfg.epochs = 5;
  cfg.batch_size = 16;
  cfg.seed = 5;
  return cfg;
}

struct Fixture {
  SyntheticNetwork net = small_network();
  FeatureMatrix features = combined_features(net.graph, build_vocab(net.graph));
  ProximityStack stack = graph_proximity(net.graph, 2);
};

std::vector<double> flatten(const Gradients& g) {
  std::vector<double> out;
  auto add = [&out](const auto& m) { out.insert(out.end(), m.data(), m.data() + m.size()); };
  for (std::size_t k = 0; k < g.encoder.size(); ++k) {
    add(g.encoder[k].weight);
    add(g.encoder[k].bias);
    add(g.decoder[k].weight);
    add(g.decoder[k].bias);
  }
  return out;
}

// Averages (V/b)-scaled batch gradients over uniformly drawn batches and
// compares a few random projections against the full gradient.
void check_unbiased(const Objective& objective, const AutoencoderModel& model, std::size_t batch, int draws) {
  const std::vector<double> full = flatten(objective.full_gradient(model));
  std::mt19937_64 rng(77);
  std::vector<std::vector<double>> directions(5, std::vector<double>(full.size()));
  std::normal_distribution<double> normal;
  for (auto& d : directions)
    for (double& v : d) v = normal(rng);

  std::vector<std::size_t> nodes(objective.num_nodes());
  std::iota(nodes.begin(), nodes.end(), std::size_t{0});
  const double scale = static_cast<double>(nodes.size()) / static_cast<double>(batch);
  std::vector<double> sum(directions.size(), 0.0), sum_sq(directions.size(), 0.0);
  for (int t = 0; t < draws; ++t) {
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const std::vector<double> g = flatten(objective.batch_gradient(model, std::span(nodes.data(), batch)));
    for (std::size_t d = 0; d < directions.size(); ++d) {
      const double p = scale * std::inner_product(g.begin(), g.end(), directions[d].begin(), 0.0);
      sum[d] += p;
      sum_sq[d] += p * p;
    }
  }
  for (std::size_t d = 0; d < directions.size(); ++d) {
    const double mean = sum[d] / draws;
    const double var = sum_sq[d] / draws - mean * mean;
    const double se = std::sqrt(std::max(var, 0.0) / draws);
    const double truth = std::inner_product(full.begin(), full.end(), directions[d].begin(), 0.0);
    CHECK(std::abs(mean - truth) <= 3.0 * se + 1e-9 * std::abs(truth));
  }
}

}  // namespace

TEST_CASE("task names") {
  for (Task t : {Task::kNone, Task::kCommunity, Task::kDiffusion}) CHECK(task_from_string(to_string(t)) == t);
  CHECK_FALSE(task_from_string("cluster").has_value());
}

TEST_CASE("config validation lists every problem") {
  TrainConfig cfg;
  cfg.c = 2.0;
  cfg.learning_rate = 0.0;
  cfg.eta = 0.5;
  CHECK(cfg.validate().size() == 3);
  CHECK(TrainConfig{}.validate().empty());
  cfg = TrainConfig{};
  cfg.task = Task::kCommunity;
  CHECK(cfg.embedding_width() == cfg.k);
  CHECK(cfg.effective_c() == cfg.c);
  cfg.task = Task::kNone;
  CHECK(cfg.embedding_width() == cfg.d);
  CHECK(cfg.effective_c() == 1.0);
}

TEST_CASE("zero epochs return the initial model") {
  Fixture f;
  TrainConfig cfg = small_config(Task::kNone);
  cfg.epochs = 0;
  const TrainResult r = train(f.net.graph, f.features, f.stack, nullptr, cfg);
  const AutoencoderModel init({static_cast<std::size_t>(f.features.values.cols()), 12, 4}, cfg.seed);
  CHECK(r.model == init);
  CHECK(r.embedding == encode(init, r.scaler.apply(f.features.values)));
  REQUIRE(r.history.size() == 1);
  CHECK(r.history[0].epoch == 0);
  CHECK_FALSE(r.converged);
}

TEST_CASE("training is deterministic for a seed") {
  Fixture f;
  for (Task task : {Task::kNone, Task::kCommunity, Task::kDiffusion}) {
    const TrainConfig cfg = small_config(task);
    const TrainResult a = train(f.net.graph, f.features, f.stack, &f.net.cascades, cfg);
    const TrainResult b = train(f.net.graph, f.features, f.stack, &f.net.cascades, cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) CHECK(a.history[e].joint == b.history[e].joint);
    CHECK(a.embedding == b.embedding);
  }
}

TEST_CASE("full-batch descent lowers the joint objective") {
  Fixture f;
  for (Task task : {Task::kNone, Task::kCommunity, Task::kDiffusion}) {
    TrainConfig cfg = small_config(task);
    cfg.batch_size = 0;
    cfg.learning_rate = 1e-4;
    cfg.epochs = 10;
    cfg.tolerance = 0.0;
    const TrainResult r = train(f.net.graph, f.features, f.stack, &f.net.cascades, cfg);
    REQUIRE(r.history.size() == 11);
    for (std::size_t e = 1; e < r.history.size(); ++e) CHECK(r.history[e].joint < r.history[e - 1].joint);
  }
}

TEST_CASE("full gradient matches finite differences of the joint objective") {
  Fixture f;
  for (Task task : {Task::kNone, Task::kCommunity, Task::kDiffusion}) {
    TrainConfig cfg = small_config(task);
    cfg.hidden = {};
    cfg.d = 3;
    cfg.theta = 0.3;
    cfg.alpha = 2.0;
    const ColumnScaler scaler = ColumnScaler::fit(f.features.values);
    const Objective objective(f.net.graph, scaler.apply(f.features.values), f.stack, &f.net.cascades, cfg);
    AutoencoderModel model({static_cast<std::size_t>(f.features.values.cols()), cfg.embedding_width()}, 9);
    const Gradients g = objective.full_gradient(model);
    std::mt19937_64 rng(1);
    double worst = 0.0;
    for (int probe = 0; probe < 40; ++probe) {
      const bool enc = rng() % 2 == 0;
      Matrix& w = enc ? model.encoder(0).weight : model.decoder(0).weight;
      const Matrix& gw = enc ? g.encoder[0].weight : g.decoder[0].weight;
      const Index i = static_cast<Index>(rng() % static_cast<std::uint64_t>(w.size()));
      const double saved = w.data()[i];
      const double eps = 1e-6;
      w.data()[i] = saved + eps;
      const double up = objective.evaluate(model).joint;
      w.data()[i] = saved - eps;
      const double down = objective.evaluate(model).joint;
      w.data()[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double a = gw.data()[i];
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric)));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("minibatch gradients are unbiased for pairwise terms") {
  Fixture f;
  const ColumnScaler scaler = ColumnScaler::fit(f.features.values);
  const Matrix x = scaler.apply(f.features.values);
  for (Task task : {Task::kNone, Task::kCommunity, Task::kDiffusion}) {
    TrainConfig cfg = small_config(task);
    cfg.beta = 0.0;  // the orthonormal term's batch Gram estimate is biased
    cfg.alpha = 5.0;
    const Objective objective(f.net.graph, x, f.stack, &f.net.cascades, cfg);
    const AutoencoderModel model({static_cast<std::size_t>(x.cols()), 12, cfg.embedding_width()}, 4);
    check_unbiased(objective, model, 24, 1000);
  }
}

TEST_CASE("reduced configuration equals a plain autoencoder") {
  Fixture f;
  TrainConfig cfg = small_config(Task::kNone);
  cfg.alpha = 0.0;
  cfg.theta = 0.0;
  cfg.c = 1.0;
  cfg.batch_size = 0;
  cfg.epochs = 20;
  cfg.tolerance = 0.0;
  cfg.learning_rate = 1e-3;
  const TrainResult r = train(f.net.graph, f.features, f.stack, nullptr, cfg);
  const Matrix x = testing::PlainAutoencoder::scale(f.features.values);
  testing::PlainAutoencoder plain(AutoencoderModel({static_cast<std::size_t>(x.cols()), 12, 4}, cfg.seed));
  REQUIRE(r.history.size() == 21);
  for (std::size_t step = 0; step <= 20; ++step) {
    CHECK(std::abs(r.history[step].joint - plain.loss(x, cfg.gamma)) < 1e-9);
    plain.step(x, cfg.gamma, cfg.learning_rate);
  }
}

TEST_CASE("convergence stops early") {
  Fixture f;
  TrainConfig cfg = small_config(Task::kNone);
  cfg.learning_rate = 1e-12;
  cfg.epochs = 100;
  cfg.tolerance = 1e-6;
  const TrainResult r = train(f.net.graph, f.features, f.stack, nullptr, cfg);
  CHECK(r.converged);
  CHECK(r.history.size() == cfg.patience + 1);
}

TEST_CASE("training errors") {
  Fixture f;
  SUBCASE("diffusion without cascades") {
    CHECK_THROWS_AS(train(f.net.graph, f.features, f.stack, nullptr, small_config(Task::kDiffusion)), ConfigError);
  }
  SUBCASE("invalid config") {
    TrainConfig cfg = small_config(Task::kNone);
    cfg.c = -1.0;
    CHECK_THROWS_AS(train(f.net.graph, f.features, f.stack, nullptr, cfg), ConfigError);
  }
  SUBCASE("divergence names the epoch") {
    TrainConfig cfg = small_config(Task::kCommunity);
    cfg.learning_rate = 1e200;
    try {
      train(f.net.graph, f.features, f.stack, nullptr, cfg);
      FAIL("expected divergence");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
    }
  }
  SUBCASE("stack with too few orders") {
    TrainConfig cfg = small_config(Task::kNone);
    cfg.max_order = 3;
    CHECK_THROWS_AS(train(f.net.graph, f.features, f.stack, nullptr, cfg), ShapeError);
  }
}

TEST_CASE("loss csv") {
  Fixture f;
  const TrainResult r = train(f.net.graph, f.features, f.stack, nullptr, small_config(Task::kNone));
  testing::TempDir tmp;
  write_loss_csv(r.history, tmp / "loss.csv");
  std::ifstream in(tmp / "loss.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,L_a,L_1,L_2,L_reg,L_t,joint");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == r.history.size());
}

TEST_CASE("grid search over c") {
  const std::vector<double> one = {0.7};
  CHECK(grid_search_c(one, [](double) { return 0.0; }) == 0.7);
  const std::vector<double> grid = {0.9, 0.1, 0.5, 1.0};
  CHECK(grid_search_c(grid, [](double) { return 3.0; }) == 0.1);
  CHECK(grid_search_c(grid, [](double c) { return -std::abs(c - 0.5); }, 3) == 0.5);
  CHECK_THROWS_AS(grid_search_c(std::vector<double>{}, [](double) { return 0.0; }), ConfigError);
}
