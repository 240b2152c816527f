#include "latte/cascade.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "latte/error.hpp"

namespace latte {

bool Cascade::contains(std::size_t user) const {
  return std::binary_search(activated.begin(), activated.end(), user);
}

bool Cascade::has_edge(std::size_t a, std::size_t b) const {
  if (b < a) std::swap(a, b);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(a, b));
}

void canonicalize(Cascade& c) {
  std::sort(c.activated.begin(), c.activated.end());
  c.activated.erase(std::unique(c.activated.begin(), c.activated.end()), c.activated.end());
  for (auto& e : c.edges) {
    if (e.first == e.second) throw Error("cascade '" + c.topic + "': self-loop diffusion edge");
    if (e.second < e.first) std::swap(e.first, e.second);
  }
  std::sort(c.edges.begin(), c.edges.end());
  c.edges.erase(std::unique(c.edges.begin(), c.edges.end()), c.edges.end());
  for (const auto& e : c.edges) {
    if (!c.contains(e.first) || !c.contains(e.second))
      throw Error("cascade '" + c.topic + "': diffusion edge endpoint not activated");
  }
}

void save_cascades(const CascadeSet& cascades, const HetGraph& g, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::object();
  for (const Cascade& c : cascades) {
    nlohmann::json rec;
    rec["activated"] = nlohmann::json::array();
    for (std::size_t u : c.activated) rec["activated"].push_back(g.node(u).id);
    rec["edges"] = nlohmann::json::array();
    for (auto [a, b] : c.edges) rec["edges"].push_back({g.node(a).id, g.node(b).id});
    j[c.topic] = std::move(rec);
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

CascadeSet load_cascades(const HetGraph& g, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file " + path.string());
  CascadeSet out;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    auto user = [&](const std::string& id) {
      const std::size_t idx = g.require_index(id);
      if (idx >= g.num_users()) throw Error("cascade member '" + id + "' is not a user");
      return idx;
    };
    for (const auto& [topic, rec] : j.items()) {
      Cascade c;
      c.topic = topic;
      for (const auto& id : rec.at("activated")) c.activated.push_back(user(id.get<std::string>()));
      for (const auto& e : rec.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw Error("cascade '" + topic + "': edge must be a pair");
        c.edges.emplace_back(user(e[0].get<std::string>()), user(e[1].get<std::string>()));
      }
      canonicalize(c);
      out.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.filename().string() + ": " + e.what());
  }
  return out;
}

}  // namespace latte
