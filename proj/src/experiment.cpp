#include "latte/experiment.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "latte/error.hpp"
#include "latte/parallel.hpp"
#include "latte/rawfeat.hpp"

namespace latte {

nlohmann::json to_json(const CommunityMetrics& m) {
  nlohmann::json j = {{"ndbi", m.ndbi}, {"silhouette", m.silhouette}, {"density", m.density},
                      {"entropy", m.entropy}, {"ncut", m.ncut}};
  if (m.ari) j["ari"] = *m.ari;
  return j;
}

ProximityStack graph_proximity(const HetGraph& g, std::size_t max_order) {
  return power_stack(normalize(full_adjacency(g)), max_order);
}

CommunityMetrics evaluate_communities(const CommunityAssignment& assign, const HetGraph& g,
                                      const ProximityStack& stack, const CommunityAssignment* truth) {
  const auto users = static_cast<Index>(g.num_users());
  const Matrix p = global_proximity(stack).topLeftCorner(users, users);
  const SparseMatrix au = user_adjacency(g).matrix;
  CommunityMetrics m;
  m.ndbi = ndbi(assign, p);
  m.silhouette = silhouette(assign, p);
  m.density = density(assign, au);
  m.entropy = entropy(assign);
  m.ncut = ncut(assign, au);
  if (truth) m.ari = adjusted_rand_index(assign, *truth);
  return m;
}

CommunityRun cluster_embedding(const Matrix& embedding, const HetGraph& g, const ProximityStack& stack,
                               std::size_t k, std::uint64_t seed, const CommunityAssignment* truth) {
  if (k > g.num_users()) throw ConfigError("more communities requested than there are users");
  CommunityRun run;
  const Matrix zu = embedding.topRows(static_cast<Index>(g.num_users()));
  run.assignment = kmeans(zu, static_cast<int>(k), seed).assignment;
  run.metrics = evaluate_communities(run.assignment, g, stack, truth);
  return run;
}

CommunityRun run_community(const HetGraph& g, const TrainConfig& cfg, const CommunityAssignment* truth) {
  TrainConfig community = cfg;
  community.task = Task::kCommunity;
  const ProximityStack stack = graph_proximity(g, community.max_order);
  const FeatureMatrix features = combined_features(g, build_vocab(g));
  TrainResult training = train(g, features, stack, nullptr, community);
  CommunityRun run = cluster_embedding(training.embedding, g, stack, community.k, community.seed, truth);
  run.training = std::move(training);
  return run;
}

std::vector<std::string> DiffusionConfig::validate() const {
  std::vector<std::string> errors;
  if (!(sample_ratio > 0.0 && sample_ratio <= 1.0)) errors.push_back("diffusion.sample_ratio must lie in (0, 1]");
  if (folds < 2) errors.push_back("diffusion.folds must be at least 2");
  if (folds_to_run < 1 || folds_to_run > static_cast<std::size_t>(std::max(folds, 0)))
    errors.push_back("diffusion.folds_to_run must lie in [1, diffusion.folds]");
  if (negative_ratio < 1) errors.push_back("diffusion.negative_ratio must be at least 1");
  if (top_k < 1) errors.push_back("diffusion.top_k must be at least 1");
  return errors;
}

nlohmann::json to_json(const DiffusionRun& run) {
  nlohmann::json folds = nlohmann::json::array();
  for (const FoldResult& f : run.folds) {
    folds.push_back({{"fold", f.fold + 1},
                     {"auc", f.auc},
                     {"precision_at_k", f.precision},
                     {"train_positives", f.train_positives},
                     {"test_positives", f.test_positives},
                     {"test_negatives", f.test_negatives}});
  }
  return {{"folds", folds}, {"mean_auc", run.mean_auc}, {"mean_precision_at_k", run.mean_precision}};
}

std::vector<LabeledPair> diffusion_pairs(const HetGraph& g, std::size_t negative_ratio, std::uint64_t seed) {
  std::set<std::pair<std::size_t, std::size_t>> retweets;
  for (const Link& l : g.links()) {
    if (l.kind != LinkKind::kRetweet) continue;
    const std::size_t a = g.require_index(l.src);
    const std::size_t b = g.require_index(l.dst);
    retweets.emplace(std::min(a, b), std::max(a, b));
  }
  std::vector<LabeledPair> pairs;
  for (auto [a, b] : retweets) pairs.push_back({a, b, true});

  // Desk-scale graphs make enumerating every candidate pair cheap, which
  // keeps sampling exact when negatives are scarce.
  std::vector<LabeledPair> candidates;
  const std::size_t users = g.num_users();
  for (std::size_t a = 0; a < users; ++a)
    for (std::size_t b = a + 1; b < users; ++b)
      if (!retweets.count({a, b})) candidates.push_back({a, b, false});
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(std::min(candidates.size(), negative_ratio * retweets.size()));
  std::sort(candidates.begin(), candidates.end(),
            [](const LabeledPair& x, const LabeledPair& y) { return std::pair(x.a, x.b) < std::pair(y.a, y.b); });
  pairs.insert(pairs.end(), candidates.begin(), candidates.end());
  return pairs;
}

CascadeSet restrict_cascades(const CascadeSet& cascades,
                             const std::vector<std::pair<std::size_t, std::size_t>>& kept_edges) {
  std::set<std::pair<std::size_t, std::size_t>> keep(kept_edges.begin(), kept_edges.end());
  CascadeSet out;
  for (const Cascade& c : cascades) {
    Cascade r;
    r.topic = c.topic;
    for (const auto& e : c.edges) {
      if (!keep.count(e)) continue;
      r.edges.push_back(e);
      r.activated.push_back(e.first);
      r.activated.push_back(e.second);
    }
    canonicalize(r);
    out.push_back(std::move(r));
  }
  return out;
}

DiffusionRun run_diffusion(const HetGraph& g, const CascadeSet& cascades, const TrainConfig& cfg,
                           const DiffusionConfig& dcfg, std::size_t jobs) {
  if (auto errors = dcfg.validate(); !errors.empty()) throw ConfigError(errors.front());
  TrainConfig diffusion = cfg;
  diffusion.task = Task::kDiffusion;

  const std::vector<LabeledPair> pairs = diffusion_pairs(g, dcfg.negative_ratio, cfg.seed);
  // Every test fold needs a positive or its AUC is undefined.
  const auto positives = std::count_if(pairs.begin(), pairs.end(), [](const LabeledPair& p) { return p.positive; });
  if (positives < dcfg.folds)
    throw ConfigError("diffusion.folds: " + std::to_string(dcfg.folds) +
                      " folds need at least as many retweet links, found " + std::to_string(positives));
  const std::vector<int> fold_of = cv_split(pairs, dcfg.folds, cfg.seed + 1);

  DiffusionRun run;
  run.folds.resize(dcfg.folds_to_run);
  parallel_for(dcfg.folds_to_run, jobs, [&](std::size_t f) {
    const int fold = static_cast<int>(f);
    std::vector<std::size_t> train_idx;
    std::vector<LabeledPair> test;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (fold_of[i] == fold) {
        test.push_back(pairs[i]);
      } else {
        train_idx.push_back(i);
      }
    }
    const std::vector<std::size_t> sampled = sample_positives(pairs, train_idx, dcfg.sample_ratio, cfg.seed + 2 + f);

    std::vector<std::pair<std::size_t, std::size_t>> observed;
    for (std::size_t i : sampled)
      if (pairs[i].positive) observed.emplace_back(pairs[i].a, pairs[i].b);
    std::sort(observed.begin(), observed.end());

    const HetGraph train_graph = filter_links(g, [&](const Link& l) {
      if (l.kind != LinkKind::kRetweet) return true;
      const std::size_t a = g.require_index(l.src);
      const std::size_t b = g.require_index(l.dst);
      return std::binary_search(observed.begin(), observed.end(), std::pair(std::min(a, b), std::max(a, b)));
    });
    const CascadeSet train_cascades = restrict_cascades(cascades, observed);

    const ProximityStack stack = graph_proximity(train_graph, diffusion.max_order);
    const FeatureMatrix features = combined_features(train_graph, build_vocab(train_graph));
    const TrainResult trained = train(train_graph, features, stack, &train_cascades, diffusion);

    const Matrix zu = trained.embedding.topRows(static_cast<Index>(g.num_users()));
    const std::vector<double> scores = pair_logits(zu, test);
    std::vector<char> labels;
    for (const LabeledPair& p : test) labels.push_back(p.positive ? 1 : 0);

    FoldResult& r = run.folds[f];
    r.fold = fold;
    r.auc = auc(scores, labels);
    r.precision = precision_at_k(scores, labels, dcfg.top_k);
    r.train_positives = observed.size();
    r.test_positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    r.test_negatives = labels.size() - r.test_positives;
  });

  for (const FoldResult& r : run.folds) {
    run.mean_auc += r.auc;
    run.mean_precision += r.precision;
  }
  run.mean_auc /= static_cast<double>(run.folds.size());
  run.mean_precision /= static_cast<double>(run.folds.size());
  return run;
}

nlohmann::json scaler_to_json(const ColumnScaler& s) {
  return {{"lo", std::vector<double>(s.lo.data(), s.lo.data() + s.lo.size())},
          {"hi", std::vector<double>(s.hi.data(), s.hi.data() + s.hi.size())}};
}

ColumnScaler scaler_from_json(const nlohmann::json& j) {
  const auto lo = j.at("lo").get<std::vector<double>>();
  const auto hi = j.at("hi").get<std::vector<double>>();
  if (lo.size() != hi.size()) throw Error("scaler bounds differ in length");
  ColumnScaler s;
  s.lo = Eigen::Map<const Vector>(lo.data(), static_cast<Index>(lo.size()));
  s.hi = Eigen::Map<const Vector>(hi.data(), static_cast<Index>(hi.size()));
  return s;
}

}  // namespace latte
