#include <map>
#include <numeric>
#include <set>

#include "doctest.h"
#include "latte/error.hpp"
#include "latte/synth.hpp"
#include "support.hpp"

using namespace latte;

namespace {

SynthConfig cascade_config(double q) {
  SynthConfig cfg;
  cfg.users = 100;
  cfg.q = q;
  cfg.cascades = 50;
  return cfg;
}

double mean_cascade_size(const HetGraph& g, double q, int runs) {
  double total = 0.0;
  int count = 0;
  for (int r = 0; r < runs; ++r) {
    SynthConfig cfg = cascade_config(q);
    cfg.seed = static_cast<std::uint64_t>(1000 + r);
    for (const Cascade& c : simulate_cascades(g, cfg).cascades) {
      total += static_cast<double>(c.activated.size());
      ++count;
    }
  }
  return total / count;
}

// Union-find check that the edges of a cascade never close a cycle.
bool is_forest(const Cascade& c) {
  std::map<std::size_t, std::size_t> parent;
  for (std::size_t u : c.activated) parent[u] = u;
  auto find = [&parent](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (auto [a, b] : c.edges) {
    const std::size_t ra = find(a), rb = find(b);
    if (ra == rb) return false;
    parent[ra] = rb;
  }
  return true;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK(SynthConfig{}.validate().empty());
  SynthConfig cfg;
  cfg.p_out = 0.5;
  cfg.p_in = 0.4;
  cfg.cascades = cfg.topics + 1;
  cfg.q = 1.5;
  CHECK(cfg.validate().size() == 3);
  CHECK_THROWS_AS(generate_graph(cfg), ConfigError);
}

TEST_CASE("generated graph shape") {
  SynthConfig cfg;
  cfg.users = 40;
  cfg.blocks = 4;
  const auto [g, truth] = generate_graph(cfg);
  CHECK(g.num_users() == 40);
  CHECK(g.num_posts() >= 40 * cfg.posts_min);
  CHECK(g.num_posts() <= 40 * cfg.posts_max);
  CHECK(truth.k == 4);
  CHECK(truth.sizes() == std::vector<std::size_t>{10, 10, 10, 10});
  CHECK(g.topics().size() == cfg.topics);
  std::size_t writes = 0;
  for (const Link& l : g.links()) writes += l.kind == LinkKind::kWrite ? 1 : 0;
  CHECK(writes == g.num_posts());
  for (std::size_t p = 0; p < g.num_posts(); ++p) {
    CHECK(g.post_attrs(p).words.size() == cfg.words_per_post);
    CHECK(g.post_attrs(p).hour.has_value());
    CHECK(g.post_attrs(p).topics.size() == cfg.topics);
  }
}

TEST_CASE("p_in one and p_out zero give disjoint cliques") {
  SynthConfig cfg;
  cfg.users = 12;
  cfg.blocks = 2;
  cfg.p_in = 1.0;
  cfg.p_out = 0.0;
  const auto [g, truth] = generate_graph(cfg);
  const Matrix a(user_adjacency(g).matrix);
  for (Index i = 0; i < 12; ++i)
    for (Index j = 0; j < 12; ++j) {
      const double expected = (i != j && truth.labels[i] == truth.labels[j]) ? 1.0 : 0.0;
      CHECK(a(i, j) == expected);
    }
}

TEST_CASE("intra-block edge share is close to its expectation") {
  SynthConfig cfg;
  cfg.users = 200;
  cfg.blocks = 4;
  const auto [g, truth] = generate_graph(cfg);
  const Matrix a(user_adjacency(g).matrix);
  double intra = 0.0, inter = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = i + 1; j < a.cols(); ++j) (truth.labels[i] == truth.labels[j] ? intra : inter) += a(i, j);
  const double intra_pairs = 4.0 * 50 * 49 / 2;
  const double inter_pairs = 200.0 * 199 / 2 - intra_pairs;
  const double sd_intra = std::sqrt(intra_pairs * cfg.p_in * (1 - cfg.p_in));
  const double sd_inter = std::sqrt(inter_pairs * cfg.p_out * (1 - cfg.p_out));
  CHECK(std::abs(intra - cfg.p_in * intra_pairs) < 3 * sd_intra);
  CHECK(std::abs(inter - cfg.p_out * inter_pairs) < 3 * sd_inter);
}

TEST_CASE("generation is deterministic") {
  SynthConfig cfg;
  cfg.users = 60;
  const SyntheticNetwork a = generate_network(cfg);
  const SyntheticNetwork b = generate_network(cfg);
  CHECK(a.graph == b.graph);
  CHECK(a.truth == b.truth);
  CHECK(a.cascades == b.cascades);
  cfg.seed = 2;
  CHECK_FALSE(generate_network(cfg).graph == a.graph);
}

TEST_CASE("attributes lean towards the author's block") {
  SynthConfig cfg;
  cfg.users = 200;
  const auto [g, truth] = generate_graph(cfg);
  // Word index modulo the block count matches the author's block far more
  // often than the uniform 1/blocks rate.
  std::map<std::string, std::size_t> author;
  for (const Link& l : g.links())
    if (l.kind == LinkKind::kWrite) author[l.dst] = g.require_index(l.src);
  double hits = 0.0, total = 0.0;
  for (std::size_t p = 0; p < g.num_posts(); ++p) {
    const int block = truth.labels[author.at(g.node(g.num_users() + p).id)];
    for (const std::string& w : g.post_attrs(p).words) {
      const int index = std::stoi(w.substr(1));
      hits += index % static_cast<int>(cfg.blocks) == block ? 1.0 : 0.0;
      total += 1.0;
    }
  }
  const double expected = cfg.attribute_signal + (1 - cfg.attribute_signal) / static_cast<double>(cfg.blocks);
  CHECK(std::abs(hits / total - expected) < 0.03);
}

TEST_CASE("cascades") {
  const auto [g, truth] = generate_graph(cascade_config(0.1));

  SUBCASE("q zero keeps only the seed user") {
    const CascadeSimulation sim = simulate_cascades(g, cascade_config(0.0));
    REQUIRE(sim.cascades.size() == 50);
    for (const Cascade& c : sim.cascades) {
      CHECK(c.activated.size() == 1);
      CHECK(c.edges.empty());
    }
    CHECK(sim.retweets.empty());
  }
  SUBCASE("q one floods the seed's component") {
    const CascadeSimulation sim = simulate_cascades(g, cascade_config(1.0));
    const Matrix a(user_adjacency(g).matrix);
    for (const Cascade& c : sim.cascades) {
      // Breadth-first closure of the activated set over friend links.
      std::set<std::size_t> reach(c.activated.begin(), c.activated.end());
      for (std::size_t u : c.activated)
        for (Index v = 0; v < a.cols(); ++v)
          if (a(static_cast<Index>(u), v) != 0.0) CHECK(reach.count(static_cast<std::size_t>(v)) == 1);
      CHECK(c.edges.size() == c.activated.size() - 1);
    }
  }
  SUBCASE("edges form a forest over activated users") {
    const CascadeSimulation sim = simulate_cascades(g, cascade_config(0.3));
    for (const Cascade& c : sim.cascades) {
      CHECK(is_forest(c));
      for (auto [a, b] : c.edges) {
        CHECK(c.contains(a));
        CHECK(c.contains(b));
      }
    }
  }
  SUBCASE("retweets are the distinct activation edges") {
    const CascadeSimulation sim = simulate_cascades(g, cascade_config(0.3));
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (const Cascade& c : sim.cascades) edges.insert(c.edges.begin(), c.edges.end());
    CHECK(sim.retweets.size() == edges.size());
    for (const Link& l : sim.retweets) {
      CHECK(l.kind == LinkKind::kRetweet);
      const std::size_t a = g.require_index(l.src), b = g.require_index(l.dst);
      CHECK(edges.count({std::min(a, b), std::max(a, b)}) == 1);
    }
  }
  SUBCASE("mean size grows with q") {
    const double s05 = mean_cascade_size(g, 0.05, 20);
    const double s10 = mean_cascade_size(g, 0.1, 20);
    const double s20 = mean_cascade_size(g, 0.2, 20);
    CHECK(s05 < s10);
    CHECK(s10 < s20);
  }
}

TEST_CASE("network bundle round trip") {
  SynthConfig cfg;
  cfg.users = 50;
  cfg.q = 0.3;
  const SyntheticNetwork net = generate_network(cfg);
  testing::TempDir tmp;
  save_network(net, tmp.path());
  for (const char* f : {"nodes.tsv", "links.tsv", "topics.json", "user_attrs.json", "post_attrs.json", "cascades.json",
                        "ground_truth.json"})
    CHECK(std::filesystem::exists(tmp / f));
  const HetGraph g = load_graph(tmp.path());
  CHECK(g == net.graph);
  CHECK(load_cascades(g, tmp / "cascades.json") == net.cascades);
  CHECK(load_ground_truth(g, tmp / "ground_truth.json") == net.truth);

  testing::write_file(tmp / "bad_truth.json", R"({"k": 2, "communities": {"u00": 3}})");
  CHECK_THROWS_AS(load_ground_truth(g, tmp / "bad_truth.json"), Error);
  testing::write_file(tmp / "bad_cascades.json", R"({"t00": {"activated": ["u00"], "edges": [["u00", "u01"]]}})");
  CHECK_THROWS_AS(load_cascades(g, tmp / "bad_cascades.json"), Error);
}

TEST_CASE("cascade canonical form") {
  Cascade c;
  c.activated = {3, 1, 3, 2};
  c.edges = {{3, 1}, {1, 3}};
  canonicalize(c);
  CHECK(c.activated == std::vector<std::size_t>{1, 2, 3});
  CHECK(c.edges == std::vector<std::pair<std::size_t, std::size_t>>{{1, 3}});
  CHECK(c.has_edge(3, 1));
  CHECK_FALSE(c.has_edge(1, 2));
  Cascade bad;
  bad.activated = {1};
  bad.edges = {{1, 2}};
  CHECK_THROWS_AS(canonicalize(bad), Error);
}
