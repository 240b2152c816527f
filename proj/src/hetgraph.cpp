#include "latte/hetgraph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "latte/error.hpp"

namespace latte {

using nlohmann::json;

std::string_view to_string(NodeKind kind) {
  return kind == NodeKind::kUser ? "user" : "post";
}

std::string_view to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::kFriend: return "friend";
    case LinkKind::kRetweet: return "retweet";
    case LinkKind::kWrite: return "write";
    case LinkKind::kLocate: return "locate";
  }
  return "?";
}

std::optional<NodeKind> node_kind_from_string(std::string_view s) {
  if (s == "user") return NodeKind::kUser;
  if (s == "post") return NodeKind::kPost;
  return std::nullopt;
}

std::optional<LinkKind> link_kind_from_string(std::string_view s) {
  if (s == "friend") return LinkKind::kFriend;
  if (s == "retweet") return LinkKind::kRetweet;
  if (s == "write") return LinkKind::kWrite;
  if (s == "locate") return LinkKind::kLocate;
  return std::nullopt;
}

namespace {

std::size_t line_or_zero(const std::vector<std::size_t>& lines, std::size_t i) {
  return i < lines.size() ? lines[i] : 0;
}

}  // namespace

HetGraph HetGraph::build(GraphParts parts, const SourceLines& where) {
  const std::string kNodes = "nodes.tsv";
  const std::string kLinks = "links.tsv";

  std::unordered_map<std::string, NodeKind> kinds;
  for (std::size_t i = 0; i < parts.nodes.size(); ++i) {
    const Node& n = parts.nodes[i];
    if (n.id.empty()) throw GraphError(kNodes, line_or_zero(where.nodes, i), "empty node id");
    if (!kinds.emplace(n.id, n.kind).second)
      throw GraphError(kNodes, line_or_zero(where.nodes, i), "duplicate id '" + n.id + "'");
  }

  std::vector<Node> nodes = std::move(parts.nodes);
  std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) {
    return std::tie(a.kind, a.id) < std::tie(b.kind, b.id);
  });

  std::vector<Link> links;
  links.reserve(parts.links.size());
  std::set<std::tuple<LinkKind, std::string, std::string>> seen;
  for (std::size_t i = 0; i < parts.links.size(); ++i) {
    Link l = parts.links[i];
    const std::size_t line = line_or_zero(where.links, i);
    auto endpoint_kind = [&](const std::string& id) {
      auto it = kinds.find(id);
      if (it == kinds.end()) throw GraphError(kLinks, line, "dangling endpoint '" + id + "'");
      return it->second;
    };
    const NodeKind src_kind = endpoint_kind(l.src);
    switch (l.kind) {
      case LinkKind::kFriend:
      case LinkKind::kRetweet: {
        const NodeKind dst_kind = endpoint_kind(l.dst);
        if (src_kind != NodeKind::kUser || dst_kind != NodeKind::kUser)
          throw GraphError(kLinks, line, std::string(to_string(l.kind)) + " link must join two users");
        if (l.src == l.dst) throw GraphError(kLinks, line, "self-loop on '" + l.src + "'");
        if (l.dst < l.src) std::swap(l.src, l.dst);
        break;
      }
      case LinkKind::kWrite: {
        const NodeKind dst_kind = endpoint_kind(l.dst);
        if (src_kind != NodeKind::kUser || dst_kind != NodeKind::kPost)
          throw GraphError(kLinks, line, "write link must go from a user to a post");
        break;
      }
      case LinkKind::kLocate:
        if (src_kind != NodeKind::kPost) throw GraphError(kLinks, line, "locate link must start at a post");
        if (l.dst.empty()) throw GraphError(kLinks, line, "locate link without location");
        break;
    }
    if (!seen.emplace(l.kind, l.src, l.dst).second)
      throw GraphError(kLinks, line, "duplicate " + std::string(to_string(l.kind)) + " link " + l.src + " " + l.dst);
    links.push_back(std::move(l));
  }
  std::sort(links.begin(), links.end(), [](const Link& a, const Link& b) {
    return std::tie(a.kind, a.src, a.dst) < std::tie(b.kind, b.src, b.dst);
  });

  std::unordered_map<std::string, std::size_t> topic_index;
  for (const auto& t : parts.topics) {
    if (!topic_index.emplace(t, topic_index.size()).second)
      throw GraphError("topics.json", 0, "duplicate topic '" + t + "'");
  }

  for (const auto& [id, attrs] : parts.user_attrs) {
    auto it = kinds.find(id);
    if (it == kinds.end() || it->second != NodeKind::kUser)
      throw GraphError("user_attrs.json", 0, "attributes for unknown user '" + id + "'");
    if (attrs.age && *attrs.age < 0) throw GraphError("user_attrs.json", 0, "negative age for '" + id + "'");
  }
  for (const auto& [id, attrs] : parts.post_attrs) {
    auto it = kinds.find(id);
    if (it == kinds.end() || it->second != NodeKind::kPost)
      throw GraphError("post_attrs.json", 0, "attributes for unknown post '" + id + "'");
    if (attrs.hour && (*attrs.hour < 0 || *attrs.hour > 23))
      throw GraphError("post_attrs.json", 0, "hour out of range for '" + id + "'");
    if (!attrs.topics.empty() && attrs.topics.size() != parts.topics.size())
      throw GraphError("post_attrs.json", 0, "topic vector length mismatch for '" + id + "'");
    for (double v : attrs.topics) {
      if (!(v >= 0.0 && v <= 1.0))
        throw GraphError("post_attrs.json", 0, "topic confidence outside [0,1] for '" + id + "'");
    }
    if (!attrs.checkins.empty())
      throw GraphError("post_attrs.json", 0, "check-ins come from locate links, not attributes ('" + id + "')");
  }

  return assemble(GraphParts{std::move(nodes), std::move(links), std::move(parts.user_attrs),
                            std::move(parts.post_attrs), std::move(parts.topics)});
}

// Expects validated, sorted parts.
HetGraph HetGraph::assemble(GraphParts parts) {
  HetGraph g;
  g.nodes_ = std::move(parts.nodes);
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
    g.index_.emplace(g.nodes_[i].id, i);
    if (g.nodes_[i].kind == NodeKind::kUser) ++g.num_users_;
  }
  g.topics_ = std::move(parts.topics);
  g.user_attrs_.resize(g.num_users_);
  g.post_attrs_.resize(g.nodes_.size() - g.num_users_);
  for (auto& [id, attrs] : parts.user_attrs) {
    g.user_attrs_[g.index_.at(id)] = std::move(attrs);
  }
  for (auto& [id, attrs] : parts.post_attrs) {
    g.post_attrs_[g.index_.at(id) - g.num_users_] = std::move(attrs);
  }
  g.links_ = std::move(parts.links);
  for (const Link& l : g.links_) {
    if (l.kind == LinkKind::kLocate) g.post_attrs_[g.index_.at(l.src) - g.num_users_].checkins.push_back(l.dst);
  }
  return g;
}

std::optional<std::size_t> HetGraph::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t HetGraph::require_index(std::string_view id) const {
  auto idx = index_of(id);
  if (!idx) throw Error("unknown node id '" + std::string(id) + "'");
  return *idx;
}

GraphParts HetGraph::parts() const {
  GraphParts p;
  p.nodes = nodes_;
  p.links = links_;
  p.topics = topics_;
  for (std::size_t u = 0; u < num_users_; ++u) p.user_attrs.emplace(nodes_[u].id, user_attrs_[u]);
  for (std::size_t i = 0; i < post_attrs_.size(); ++i) {
    PostAttributes a = post_attrs_[i];
    a.checkins.clear();
    p.post_attrs.emplace(nodes_[num_users_ + i].id, std::move(a));
  }
  return p;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw GraphError(p.filename().string(), 0, "missing file " + p.string());
  return in;
}

json read_json(const std::filesystem::path& p) {
  auto in = open_or_throw(p);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw GraphError(p.filename().string(), 0, std::string("malformed JSON: ") + e.what());
  }
}

std::vector<std::string> string_list(const json& j, const std::string& file, const std::string& ctx) {
  if (!j.is_array()) throw GraphError(file, 0, ctx + ": expected a list of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw GraphError(file, 0, ctx + ": expected a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

HetGraph load_graph(const std::filesystem::path& dir) {
  GraphParts parts;
  SourceLines where;

  {
    auto in = open_or_throw(dir / "nodes.tsv");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto f = split_tabs(line);
      if (f.size() != 2) throw GraphError("nodes.tsv", lineno, "expected 2 fields, got " + std::to_string(f.size()));
      auto kind = node_kind_from_string(f[1]);
      if (!kind) throw GraphError("nodes.tsv", lineno, "unknown node kind '" + f[1] + "'");
      parts.nodes.push_back({f[0], *kind});
      where.nodes.push_back(lineno);
    }
  }
  {
    auto in = open_or_throw(dir / "links.tsv");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto f = split_tabs(line);
      if (f.size() != 3) throw GraphError("links.tsv", lineno, "expected 3 fields, got " + std::to_string(f.size()));
      auto kind = link_kind_from_string(f[2]);
      if (!kind) throw GraphError("links.tsv", lineno, "unknown link kind '" + f[2] + "'");
      parts.links.push_back({f[0], f[1], *kind});
      where.links.push_back(lineno);
    }
  }

  const json topics = read_json(dir / "topics.json");
  parts.topics = string_list(topics, "topics.json", "topics");

  const json users = read_json(dir / "user_attrs.json");
  if (!users.is_object()) throw GraphError("user_attrs.json", 0, "expected an object keyed by user id");
  for (const auto& [id, rec] : users.items()) {
    UserAttributes a;
    try {
      if (rec.contains("name")) a.name = string_list(rec["name"], "user_attrs.json", id + ".name");
      if (rec.contains("gender")) a.gender = rec["gender"].get<std::string>();
      if (rec.contains("age")) a.age = rec["age"].get<int>();
      if (rec.contains("hometown")) a.hometown = rec["hometown"].get<std::string>();
    } catch (const json::exception& e) {
      throw GraphError("user_attrs.json", 0, "bad record for '" + id + "': " + e.what());
    }
    parts.user_attrs.emplace(id, std::move(a));
  }

  const json posts = read_json(dir / "post_attrs.json");
  if (!posts.is_object()) throw GraphError("post_attrs.json", 0, "expected an object keyed by post id");
  for (const auto& [id, rec] : posts.items()) {
    PostAttributes a;
    try {
      if (rec.contains("words")) a.words = string_list(rec["words"], "post_attrs.json", id + ".words");
      if (rec.contains("hour")) a.hour = rec["hour"].get<int>();
      if (rec.contains("topics")) a.topics = rec["topics"].get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw GraphError("post_attrs.json", 0, "bad record for '" + id + "': " + e.what());
    }
    parts.post_attrs.emplace(id, std::move(a));
  }

  return HetGraph::build(std::move(parts), where);
}

void save_graph(const HetGraph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "nodes.tsv");
    for (const Node& n : g.nodes()) out << n.id << '\t' << to_string(n.kind) << '\n';
  }
  {
    std::ofstream out(dir / "links.tsv");
    for (const Link& l : g.links()) out << l.src << '\t' << l.dst << '\t' << to_string(l.kind) << '\n';
  }
  {
    json users = json::object();
    for (std::size_t u = 0; u < g.num_users(); ++u) {
      const UserAttributes& a = g.user_attrs(u);
      json rec = json::object();
      if (!a.name.empty()) rec["name"] = a.name;
      if (!a.gender.empty()) rec["gender"] = a.gender;
      if (a.age) rec["age"] = *a.age;
      if (!a.hometown.empty()) rec["hometown"] = a.hometown;
      users[g.node(u).id] = std::move(rec);
    }
    std::ofstream(dir / "user_attrs.json") << users.dump(1) << '\n';
  }
  {
    json posts = json::object();
    for (std::size_t p = 0; p < g.num_posts(); ++p) {
      const PostAttributes& a = g.post_attrs(p);
      json rec = json::object();
      if (!a.words.empty()) rec["words"] = a.words;
      if (a.hour) rec["hour"] = *a.hour;
      if (!a.topics.empty()) rec["topics"] = a.topics;
      posts[g.node(g.num_users() + p).id] = std::move(rec);
    }
    std::ofstream(dir / "post_attrs.json") << posts.dump(1) << '\n';
  }
  std::ofstream(dir / "topics.json") << json(g.topics()).dump() << '\n';
}

HetGraph filter_links(const HetGraph& g, const std::function<bool(const Link&)>& keep) {
  GraphParts p = g.parts();
  std::erase_if(p.links, [&](const Link& l) { return !keep(l); });
  return HetGraph::build(std::move(p));
}

HetGraph add_links(const HetGraph& g, const std::vector<Link>& extra) {
  GraphParts p = g.parts();
  p.links.insert(p.links.end(), extra.begin(), extra.end());
  return HetGraph::build(std::move(p));
}

namespace {

AdjacencyMatrix from_pairs(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * pairs.size());
  for (auto [a, b] : pairs) {
    triplets.emplace_back(static_cast<int>(a), static_cast<int>(b), 1.0);
    triplets.emplace_back(static_cast<int>(b), static_cast<int>(a), 1.0);
  }
  AdjacencyMatrix adj;
  adj.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  // Entries stay binary even if the same pair arrives through two link kinds.
  adj.matrix.setFromTriplets(triplets.begin(), triplets.end(), [](double, double) { return 1.0; });
  adj.symmetric = true;
  return adj;
}

}  // namespace

AdjacencyMatrix full_adjacency(const HetGraph& g) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const Link& l : g.links()) {
    if (l.kind == LinkKind::kLocate) continue;
    pairs.emplace_back(g.require_index(l.src), g.require_index(l.dst));
  }
  return from_pairs(g.num_nodes(), pairs);
}

AdjacencyMatrix user_adjacency(const HetGraph& g) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const Link& l : g.links()) {
    if (l.kind != LinkKind::kFriend) continue;
    pairs.emplace_back(g.require_index(l.src), g.require_index(l.dst));
  }
  return from_pairs(g.num_users(), pairs);
}

}  // namespace latte
