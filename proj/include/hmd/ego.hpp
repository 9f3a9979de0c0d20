#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmd/graph.hpp"

namespace hmd {

struct EgoNode {
  std::string id;
  std::optional<double> prob;
};

/// Focal user, its followers and followees, and every edge among them.
/// Nodes are listed in graph index order (sorted by id).
struct EgoExport {
  std::string ego;
  std::vector<EgoNode> nodes;
  std::vector<std::pair<std::string, std::string>> edges;

  std::string to_dot() const {
    std::string out = "digraph ego {\n";
    for (const auto& n : nodes) {
      out += "  " + quote(n.id);
      std::string attrs;
      if (n.prob) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", *n.prob);
        attrs += "prob=\"" + std::string(buf) + "\"";
      }
      if (n.id == ego) attrs += std::string(attrs.empty() ? "" : ", ") + "ego=\"true\"";
      if (!attrs.empty()) out += " [" + attrs + "]";
      out += ";\n";
    }
    for (const auto& [src, dst] : edges) out += "  " + quote(src) + " -> " + quote(dst) + ";\n";
    out += "}\n";
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["ego"] = ego;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : nodes) {
      nlohmann::json node = {{"id", n.id}, {"prob", nullptr}};
      if (n.prob) node["prob"] = *n.prob;
      j["nodes"].push_back(std::move(node));
    }
    j["edges"] = nlohmann::json::array();
    for (const auto& [src, dst] : edges) j["edges"].push_back({src, dst});
    return j;
  }

 private:
  static std::string quote(std::string_view id) {
    std::string out = "\"";
    for (char c : id) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  }
};

inline EgoExport ego_network(const UserGraph& g, std::string_view user,
                             const std::unordered_map<std::string, double>& probabilities) {
  const NodeId u = g.index_of(user);
  std::vector<NodeId> members(g.neighbors(u).begin(), g.neighbors(u).end());
  members.push_back(u);
  std::sort(members.begin(), members.end());

  EgoExport out;
  out.ego = g.user_id(u);
  for (NodeId v : members) {
    EgoNode node{g.user_id(v), std::nullopt};
    if (auto it = probabilities.find(node.id); it != probabilities.end()) node.prob = it->second;
    out.nodes.push_back(std::move(node));
  }
  for (NodeId a : members) {
    for (NodeId b : g.out_neighbors(a)) {
      if (std::binary_search(members.begin(), members.end(), b)) {
        out.edges.emplace_back(g.user_id(a), g.user_id(b));
      }
    }
  }
  return out;
}

}  // namespace hmd
