#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "latte/types.hpp"

namespace latte {

enum class NodeKind { kUser, kPost };

// Only the link kinds present in the crawled Twitter data are supported. New
// kinds (like/reply/share) would slot in here and in link_kind_from_string.
enum class LinkKind { kFriend, kRetweet, kWrite, kLocate };

std::string_view to_string(NodeKind kind);
std::string_view to_string(LinkKind kind);
std::optional<NodeKind> node_kind_from_string(std::string_view s);
std::optional<LinkKind> link_kind_from_string(std::string_view s);

struct Node {
  std::string id;
  NodeKind kind;

  bool operator==(const Node&) const = default;
};

// For kLocate, `dst` is a location token rather than a node id: locations are
// attributes of posts, not graph nodes.
struct Link {
  std::string src;
  std::string dst;
  LinkKind kind;

  bool operator==(const Link&) const = default;
};

struct UserAttributes {
  std::vector<std::string> name;
  std::string gender;    // empty when unknown
  std::optional<int> age;
  std::string hometown;  // empty when unknown

  bool operator==(const UserAttributes&) const = default;
};

struct PostAttributes {
  std::vector<std::string> words;
  std::optional<int> hour;
  std::vector<double> topics;  // empty, or one confidence per topic
  // Filled from kLocate links; a post may check in more than once.
  std::vector<std::string> checkins;

  bool operator==(const PostAttributes&) const = default;
};

// Raw, unvalidated contents of a graph bundle.
struct GraphParts {
  std::vector<Node> nodes;
  std::vector<Link> links;
  std::unordered_map<std::string, UserAttributes> user_attrs;
  std::unordered_map<std::string, PostAttributes> post_attrs;
  std::vector<std::string> topics;
};

// TSV line numbers of each node/link in GraphParts, for error reporting.
struct SourceLines {
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> links;
};

// Heterogeneous social network: users and posts, friend/retweet/write/locate
// links, node attributes and the topic set. Immutable once built.
//
// Node order is fixed: users by ascending id, then posts by ascending id, so
// user rows of every matrix form a contiguous prefix.
class HetGraph {
 public:
  HetGraph() = default;

  // Validates and canonicalizes. Throws GraphError.
  static HetGraph build(GraphParts parts, const SourceLines& lines = {});

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_users() const { return num_users_; }
  std::size_t num_posts() const { return nodes_.size() - num_users_; }

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t index) const { return nodes_[index]; }
  std::optional<std::size_t> index_of(std::string_view id) const;
  std::size_t require_index(std::string_view id) const;

  // Canonical order: sorted by (kind, src, dst). Friend and retweet links have
  // src < dst.
  const std::vector<Link>& links() const { return links_; }
  const std::vector<std::string>& topics() const { return topics_; }

  // Indexed by user index (0..num_users).
  const UserAttributes& user_attrs(std::size_t user) const { return user_attrs_[user]; }
  // Indexed by post number (0..num_posts), i.e. node index - num_users.
  const PostAttributes& post_attrs(std::size_t post) const { return post_attrs_[post]; }

  // Parts view, suitable for modification and rebuilding.
  GraphParts parts() const;

  bool operator==(const HetGraph&) const = default;

 private:
  static HetGraph assemble(GraphParts parts);

  std::vector<Node> nodes_;
  std::size_t num_users_ = 0;
  std::vector<Link> links_;
  std::vector<UserAttributes> user_attrs_;
  std::vector<PostAttributes> post_attrs_;
  std::vector<std::string> topics_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Reads a bundle directory (nodes.tsv, links.tsv, user_attrs.json,
// post_attrs.json, topics.json). Errors name the file and, for TSV, the line.
HetGraph load_graph(const std::filesystem::path& dir);
void save_graph(const HetGraph& g, const std::filesystem::path& dir);

HetGraph filter_links(const HetGraph& g, const std::function<bool(const Link&)>& keep);
HetGraph add_links(const HetGraph& g, const std::vector<Link>& extra);

struct AdjacencyMatrix {
  SparseMatrix matrix;
  bool symmetric = true;
};

// Binary symmetric |V|x|V| matrix over friend, retweet and write links. Node
// and link kinds are treated equally; locate links carry no node.
AdjacencyMatrix full_adjacency(const HetGraph& g);

// |U|x|U| friend-link matrix. Retweets are excluded: they are the labels of
// the diffusion task.
AdjacencyMatrix user_adjacency(const HetGraph& g);

}  // namespace latte
