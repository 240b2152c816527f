#include "latte/synth.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "json.hpp"
#include "latte/error.hpp"
#include "latte/rawfeat.hpp"

namespace latte {

std::vector<std::string> SynthConfig::validate() const {
  std::vector<std::string> errors;
  if (users < 2) errors.push_back("synth.users must be at least 2");
  if (blocks < 1 || blocks > users) errors.push_back("synth.blocks must lie in [1, users]");
  if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0)) errors.push_back("synth probabilities need 0 <= p_out < p_in <= 1");
  if (posts_min > posts_max) errors.push_back("synth.posts_min exceeds synth.posts_max");
  if (vocab < blocks) errors.push_back("synth.vocab must be at least synth.blocks");
  if (name_vocab < blocks) errors.push_back("synth.name_vocab must be at least synth.blocks");
  if (locations < blocks) errors.push_back("synth.locations must be at least synth.blocks");
  if (topics < 1) errors.push_back("synth.topics must be positive");
  if (cascades > topics) errors.push_back("synth.cascades cannot exceed synth.topics");
  if (!(checkin_prob >= 0.0 && checkin_prob <= 1.0)) errors.push_back("synth.checkin_prob must lie in [0, 1]");
  if (!(q >= 0.0 && q <= 1.0)) errors.push_back("synth.q must lie in [0, 1]");
  if (!(attribute_signal >= 0.0 && attribute_signal <= 1.0)) errors.push_back("synth.attribute_signal must lie in [0, 1]");
  return errors;
}

namespace {

std::string padded(char prefix, std::size_t i, std::size_t count) {
  const std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
  std::string digits = std::to_string(i);
  return prefix + std::string(width - std::min(width, digits.size()), '0') + digits;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Draws an index in [0, size): with probability `signal` from the tokens
// owned by `block` (index % blocks == block), otherwise uniformly.
class BlockPool {
 public:
  BlockPool(std::size_t size, std::size_t blocks, double signal) : size_(size), blocks_(blocks), signal_(signal) {}

  std::size_t draw(std::size_t block, std::mt19937_64& rng) const {
    std::bernoulli_distribution informative(signal_);
    const std::size_t owned = (size_ - block + blocks_ - 1) / blocks_;
    if (owned > 0 && informative(rng)) {
      std::uniform_int_distribution<std::size_t> pick(0, owned - 1);
      return block + pick(rng) * blocks_;
    }
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    return pick(rng);
  }

 private:
  std::size_t size_;
  std::size_t blocks_;
  double signal_;
};

}  // namespace

std::pair<HetGraph, CommunityAssignment> generate_graph(const SynthConfig& cfg) {
  if (auto errors = cfg.validate(); !errors.empty()) throw ConfigError(errors.front());

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution informative(cfg.attribute_signal);

  const BlockPool names(cfg.name_vocab, cfg.blocks, cfg.attribute_signal);
  const BlockPool words(cfg.vocab, cfg.blocks, cfg.attribute_signal);
  const BlockPool places(cfg.locations, cfg.blocks, cfg.attribute_signal);
  const BlockPool topics(cfg.topics, cfg.blocks, cfg.attribute_signal);

  GraphParts parts;
  CommunityAssignment truth;
  truth.k = static_cast<int>(cfg.blocks);
  for (std::size_t t = 0; t < cfg.topics; ++t) parts.topics.push_back(padded('t', t, cfg.topics));

  std::vector<std::string> user_ids;
  for (std::size_t u = 0; u < cfg.users; ++u) {
    user_ids.push_back(padded('u', u, cfg.users));
    parts.nodes.push_back({user_ids.back(), NodeKind::kUser});
    truth.labels.push_back(static_cast<int>(u % cfg.blocks));
  }

  for (std::size_t a = 0; a < cfg.users; ++a) {
    for (std::size_t b = a + 1; b < cfg.users; ++b) {
      const double p = truth.labels[a] == truth.labels[b] ? cfg.p_in : cfg.p_out;
      if (unit(rng) < p) parts.links.push_back({user_ids[a], user_ids[b], LinkKind::kFriend});
    }
  }

  // Generous upper bound on the post count, only used for id padding.
  const std::size_t max_posts = cfg.users * std::max<std::size_t>(cfg.posts_max, 1);
  std::size_t post_count = 0;
  std::uniform_int_distribution<std::size_t> post_num(cfg.posts_min, cfg.posts_max);
  std::uniform_int_distribution<int> any_hour(0, static_cast<int>(kHoursPerDay) - 1);
  std::uniform_int_distribution<int> jitter(0, 2);
  const int block_span = static_cast<int>(kHoursPerDay / cfg.blocks) > 0 ? static_cast<int>(kHoursPerDay / cfg.blocks) : 1;

  for (std::size_t u = 0; u < cfg.users; ++u) {
    const auto block = static_cast<std::size_t>(truth.labels[u]);
    UserAttributes ua;
    ua.name = {padded('n', names.draw(block, rng), cfg.name_vocab), padded('n', names.draw(block, rng), cfg.name_vocab)};
    ua.gender = unit(rng) < 0.5 ? "f" : "m";
    if (informative(rng)) {
      ua.age = 18 + 8 * static_cast<int>(block) + static_cast<int>(unit(rng) * 8.0);
    } else {
      ua.age = 18 + static_cast<int>(unit(rng) * 8.0 * static_cast<double>(cfg.blocks));
    }
    ua.hometown = padded('l', places.draw(block, rng), cfg.locations);
    parts.user_attrs.emplace(user_ids[u], std::move(ua));

    const std::size_t posts = post_num(rng);
    for (std::size_t i = 0; i < posts; ++i) {
      const std::string pid = padded('p', post_count++, max_posts);
      parts.nodes.push_back({pid, NodeKind::kPost});
      parts.links.push_back({user_ids[u], pid, LinkKind::kWrite});

      PostAttributes pa;
      for (std::size_t w = 0; w < cfg.words_per_post; ++w) pa.words.push_back(padded('w', words.draw(block, rng), cfg.vocab));
      pa.hour = informative(rng) ? (static_cast<int>(block) * block_span + jitter(rng)) % static_cast<int>(kHoursPerDay)
                                 : any_hour(rng);
      if (unit(rng) < cfg.checkin_prob)
        parts.links.push_back({pid, padded('l', places.draw(block, rng), cfg.locations), LinkKind::kLocate});
      pa.topics.assign(cfg.topics, 0.0);
      pa.topics[topics.draw(block, rng)] = 0.5 + 0.5 * unit(rng);
      parts.post_attrs.emplace(pid, std::move(pa));
    }
  }

  return {HetGraph::build(std::move(parts)), std::move(truth)};
}

CascadeSimulation simulate_cascades(const HetGraph& g, const SynthConfig& cfg) {
  if (!(cfg.q >= 0.0 && cfg.q <= 1.0)) throw ConfigError("synth.q must lie in [0, 1]");
  if (cfg.cascades > g.topics().size()) throw ConfigError("more cascades than topics");
  const std::size_t n = g.num_users();
  if (n == 0) return {};

  std::vector<std::vector<std::size_t>> friends(n);
  for (const Link& l : g.links()) {
    if (l.kind != LinkKind::kFriend) continue;
    const std::size_t a = g.require_index(l.src);
    const std::size_t b = g.require_index(l.dst);
    friends[a].push_back(b);
    friends[b].push_back(a);
  }
  for (auto& f : friends) std::sort(f.begin(), f.end());

  CascadeSimulation sim;
  std::set<std::pair<std::size_t, std::size_t>> retweeted;
  for (std::size_t t = 0; t < cfg.cascades; ++t) {
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(t + 1)));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Cascade c;
    c.topic = g.topics()[t];
    std::vector<char> active(n, 0);
    std::vector<std::size_t> frontier{pick(rng)};
    active[frontier.front()] = 1;
    c.activated.push_back(frontier.front());
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const std::size_t u = frontier[head];
      for (std::size_t v : friends[u]) {
        if (active[v] || !(unit(rng) < cfg.q)) continue;
        active[v] = 1;
        frontier.push_back(v);
        c.activated.push_back(v);
        c.edges.emplace_back(u, v);
        retweeted.emplace(std::min(u, v), std::max(u, v));
      }
    }
    canonicalize(c);
    sim.cascades.push_back(std::move(c));
  }
  for (auto [a, b] : retweeted) sim.retweets.push_back({g.node(a).id, g.node(b).id, LinkKind::kRetweet});
  return sim;
}

SyntheticNetwork generate_network(const SynthConfig& cfg) {
  auto [base, truth] = generate_graph(cfg);
  CascadeSimulation sim = simulate_cascades(base, cfg);
  SyntheticNetwork net;
  net.graph = add_links(base, sim.retweets);
  net.truth = std::move(truth);
  net.cascades = std::move(sim.cascades);
  return net;
}

void save_ground_truth(const CommunityAssignment& truth, const HetGraph& g, const std::filesystem::path& path) {
  nlohmann::json j;
  j["k"] = truth.k;
  j["communities"] = nlohmann::json::object();
  for (std::size_t u = 0; u < truth.labels.size(); ++u) j["communities"][g.node(u).id] = truth.labels[u] + 1;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

CommunityAssignment load_ground_truth(const HetGraph& g, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file " + path.string());
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    CommunityAssignment a;
    a.k = j.at("k").get<int>();
    a.labels.assign(g.num_users(), -1);
    for (const auto& [id, label] : j.at("communities").items()) {
      const std::size_t u = g.require_index(id);
      if (u >= g.num_users()) throw Error("ground truth entry '" + id + "' is not a user");
      const int l = label.get<int>();
      if (l < 1 || l > a.k) throw Error("ground truth label out of range for '" + id + "'");
      a.labels[u] = l - 1;
    }
    if (std::find(a.labels.begin(), a.labels.end(), -1) != a.labels.end())
      throw Error("ground truth does not cover every user");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.filename().string() + ": " + e.what());
  }
}

void save_network(const SyntheticNetwork& net, const std::filesystem::path& dir) {
  save_graph(net.graph, dir);
  save_cascades(net.cascades, net.graph, dir / "cascades.json");
  save_ground_truth(net.truth, net.graph, dir / "ground_truth.json");
}

}  // namespace latte
