#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hmd/errors.hpp"
#include "hmd/parallel.hpp"

namespace hmd {

using NodeId = std::uint32_t;

/// One follower -> followee pair as read from an edge file. `line` is the
/// 1-based source line, or 0 for edges built in memory.
struct Edge {
  std::string src;
  std::string dst;
  std::size_t line = 0;
};

/// Immutable directed follower graph. Users are re-indexed to [0, n) in
/// lexicographic order of their ids, so no result depends on the order edges
/// were supplied in. Adjacency lists are sorted and duplicate-free; the
/// undirected projection merges (a,b) and (b,a) into one neighbor entry.
class UserGraph {
 public:
  UserGraph() = default;

  /// `ids` must be sorted and unique; pairs index into `ids`. Self-loops and
  /// repeated pairs are dropped.
  static UserGraph from_indexed_edges(std::vector<std::string> ids,
                                      std::vector<std::pair<NodeId, NodeId>> pairs) {
    UserGraph g;
    g.ids_ = std::move(ids);
    g.index_.reserve(g.ids_.size());
    for (NodeId i = 0; i < g.ids_.size(); ++i) g.index_.emplace(g.ids_[i], i);

    std::erase_if(pairs, [](const auto& p) { return p.first == p.second; });
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    const std::size_t n = g.ids_.size();
    g.out_ = Csr::build(n, pairs, false);
    g.in_ = Csr::build(n, pairs, true);

    // Undirected projection: per-node sorted union of in and out lists.
    g.und_.offsets.assign(n + 1, 0);
    std::vector<NodeId> merged;
    for (NodeId u = 0; u < n; ++u) {
      const auto out = g.out_.row(u);
      const auto in = g.in_.row(u);
      merged.clear();
      std::set_union(out.begin(), out.end(), in.begin(), in.end(), std::back_inserter(merged));
      g.und_.targets.insert(g.und_.targets.end(), merged.begin(), merged.end());
      g.und_.offsets[u + 1] = g.und_.targets.size();
    }
    return g;
  }

  std::size_t node_count() const noexcept { return ids_.size(); }
  std::size_t edge_count() const noexcept { return out_.targets.size(); }
  /// Number of edges in the undirected projection.
  std::size_t undirected_edge_count() const noexcept { return und_.targets.size() / 2; }
  bool empty() const noexcept { return ids_.empty(); }

  std::span<const NodeId> out_neighbors(NodeId u) const { return out_.row(u); }
  std::span<const NodeId> in_neighbors(NodeId u) const { return in_.row(u); }
  std::span<const NodeId> neighbors(NodeId u) const { return und_.row(u); }
  std::size_t degree(NodeId u) const { return und_.row(u).size(); }

  bool has_edge(NodeId src, NodeId dst) const {
    const auto row = out_.row(src);
    return std::binary_search(row.begin(), row.end(), dst);
  }
  bool adjacent(NodeId a, NodeId b) const {
    const auto row = und_.row(a);
    return std::binary_search(row.begin(), row.end(), b);
  }

  const std::string& user_id(NodeId u) const { return ids_.at(u); }
  const std::vector<std::string>& user_ids() const noexcept { return ids_; }

  std::optional<NodeId> find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  NodeId index_of(std::string_view id) const {
    if (auto u = find(id)) return *u;
    throw Error(ErrorKind::kNotFound, "unknown user '" + std::string(id) + "'");
  }

  /// All directed edges as index pairs, sorted by (src, dst).
  std::vector<std::pair<NodeId, NodeId>> edge_pairs() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(edge_count());
    for (NodeId u = 0; u < node_count(); ++u) {
      for (NodeId v : out_neighbors(u)) out.emplace_back(u, v);
    }
    return out;
  }

  /// Same users and same directed edges.
  bool operator==(const UserGraph& other) const {
    return ids_ == other.ids_ && out_.offsets == other.out_.offsets &&
           out_.targets == other.out_.targets;
  }

  /// Induced subgraph on `nodes` (any order, duplicates ignored). Relative
  /// order of the kept ids is preserved, so indices stay sorted by id.
  UserGraph induced_subgraph(std::span<const NodeId> nodes) const {
    std::vector<NodeId> keep(nodes.begin(), nodes.end());
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());

    constexpr NodeId kAbsent = std::numeric_limits<NodeId>::max();
    std::vector<NodeId> remap(node_count(), kAbsent);
    std::vector<std::string> ids;
    ids.reserve(keep.size());
    for (NodeId i = 0; i < keep.size(); ++i) {
      remap.at(keep[i]) = i;
      ids.push_back(ids_[keep[i]]);
    }
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (NodeId u : keep) {
      for (NodeId v : out_neighbors(u)) {
        if (remap[v] != kAbsent) pairs.emplace_back(remap[u], remap[v]);
      }
    }
    return from_indexed_edges(std::move(ids), std::move(pairs));
  }

 private:
  struct Csr {
    std::vector<std::size_t> offsets{0};
    std::vector<NodeId> targets;

    std::span<const NodeId> row(NodeId u) const {
      return {targets.data() + offsets.at(u), targets.data() + offsets.at(u + 1)};
    }

    // `pairs` sorted by (first, second); transposed rows come out sorted
    // because sources are visited in increasing order.
    static Csr build(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& pairs,
                     bool transpose) {
      Csr c;
      c.offsets.assign(n + 1, 0);
      for (const auto& [a, b] : pairs) ++c.offsets[(transpose ? b : a) + 1];
      for (std::size_t i = 0; i < n; ++i) c.offsets[i + 1] += c.offsets[i];
      c.targets.resize(pairs.size());
      std::vector<std::size_t> cursor(c.offsets.begin(), c.offsets.end() - 1);
      for (const auto& [a, b] : pairs) {
        const NodeId row = transpose ? b : a;
        c.targets[cursor[row]++] = transpose ? a : b;
      }
      return c;
    }
  };

  std::vector<std::string> ids_;
  std::unordered_map<std::string, NodeId> index_;
  Csr out_;
  Csr in_;
  Csr und_;
};

/// Builds the deduplicated, self-loop-free graph. `extra_nodes` adds users
/// that may have no edges (e.g. labeled users missing from the edge list).
inline UserGraph build_graph(std::span<const Edge> edges,
                             std::span<const std::string> extra_nodes = {}) {
  std::vector<std::string> ids;
  ids.reserve(edges.size() * 2 + extra_nodes.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (e.src.empty() || e.dst.empty()) {
      const std::size_t line = e.line != 0 ? e.line : i + 1;
      throw Error(ErrorKind::kParse,
                  std::string("edge is missing its ") + (e.src.empty() ? "source" : "target") +
                      " endpoint",
                  line);
    }
    ids.push_back(e.src);
    ids.push_back(e.dst);
  }
  for (const auto& id : extra_nodes) {
    if (id.empty()) throw Error(ErrorKind::kValidation, "empty user id");
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::unordered_map<std::string_view, NodeId> index;
  index.reserve(ids.size());
  for (NodeId i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);

  std::vector<std::pair<NodeId, NodeId>> pairs;
  pairs.reserve(edges.size());
  for (const auto& e : edges) pairs.emplace_back(index.at(e.src), index.at(e.dst));
  return UserGraph::from_indexed_edges(std::move(ids), std::move(pairs));
}

/// Weakly connected component id per node. Components are numbered in order
/// of their smallest node index.
inline std::vector<std::uint32_t> weak_components(const UserGraph& g,
                                                  std::size_t* component_count = nullptr) {
  constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> comp(g.node_count(), kUnset);
  std::vector<NodeId> stack;
  std::uint32_t next = 0;
  for (NodeId start = 0; start < g.node_count(); ++start) {
    if (comp[start] != kUnset) continue;
    comp[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : g.neighbors(u)) {
        if (comp[v] == kUnset) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  if (component_count != nullptr) *component_count = next;
  return comp;
}

/// Node indices of the largest weakly connected component; ties go to the
/// component holding the smallest node index.
inline std::vector<NodeId> largest_component_nodes(const UserGraph& g) {
  if (g.empty()) throw Error(ErrorKind::kEmptyInput, "graph has no nodes");
  std::size_t count = 0;
  const auto comp = weak_components(g, &count);
  std::vector<std::size_t> sizes(count, 0);
  for (auto c : comp) ++sizes[c];
  const auto best = static_cast<std::uint32_t>(
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<NodeId> nodes;
  nodes.reserve(sizes[best]);
  for (NodeId u = 0; u < g.node_count(); ++u) {
    if (comp[u] == best) nodes.push_back(u);
  }
  return nodes;
}

inline UserGraph largest_weakly_connected_component(const UserGraph& g) {
  const auto nodes = largest_component_nodes(g);
  if (nodes.size() == g.node_count()) return g;
  return g.induced_subgraph(nodes);
}

/// Local clustering coefficient of one node in the undirected projection;
/// 0 for degree < 2.
inline double local_clustering(const UserGraph& g, NodeId u) {
  const auto nu = g.neighbors(u);
  const std::size_t d = nu.size();
  if (d < 2) return 0.0;
  std::size_t twice_links = 0;
  for (NodeId v : nu) {
    const auto nv = g.neighbors(v);
    auto a = nu.begin();
    auto b = nv.begin();
    while (a != nu.end() && b != nv.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        ++twice_links;
        ++a;
        ++b;
      }
    }
  }
  return static_cast<double>(twice_links) / (static_cast<double>(d) * static_cast<double>(d - 1));
}

/// Mean local clustering coefficient over all nodes (not global
/// transitivity). Summed in node order regardless of `threads`.
inline double clustering_coefficient(const UserGraph& g, std::size_t threads = 1) {
  if (g.empty()) throw Error(ErrorKind::kEmptyInput, "graph has no nodes");
  std::vector<double> local(g.node_count());
  parallel_for(g.node_count(), threads,
               [&](std::size_t u) { local[u] = local_clustering(g, static_cast<NodeId>(u)); });
  double sum = 0.0;
  for (double c : local) sum += c;
  return sum / static_cast<double>(g.node_count());
}

inline std::vector<std::uint32_t> undirected_degrees(const UserGraph& g) {
  std::vector<std::uint32_t> deg(g.node_count());
  for (NodeId u = 0; u < g.node_count(); ++u) deg[u] = static_cast<std::uint32_t>(g.degree(u));
  return deg;
}

struct PowerLawFit {
  double gamma = std::numeric_limits<double>::infinity();
  std::uint32_t d_min = 0;
  std::size_t tail_size = 0;
  /// Max CCDF gap between the tail and the fitted law.
  double ks_distance = 1.0;
  /// Tail holds fewer than two distinct degrees; gamma is +inf.
  bool degenerate = true;
};

/// Continuous MLE with continuity correction,
///   gamma = 1 + n / sum ln(d_i / (d_min - 0.5)),  over d_i >= d_min.
inline PowerLawFit powerlaw_mle(std::span<const std::uint32_t> degrees, std::uint32_t d_min) {
  if (d_min == 0) throw Error(ErrorKind::kValidation, "d_min must be positive");
  std::vector<std::uint32_t> tail;
  for (auto d : degrees) {
    if (d >= d_min) tail.push_back(d);
  }
  if (tail.empty()) {
    throw Error(ErrorKind::kInsufficientData,
                "no node has degree >= " + std::to_string(d_min));
  }
  std::sort(tail.begin(), tail.end());

  PowerLawFit fit;
  fit.d_min = d_min;
  fit.tail_size = tail.size();
  if (tail.front() == tail.back()) return fit;

  const double shift = static_cast<double>(d_min) - 0.5;
  double log_sum = 0.0;
  for (auto d : tail) log_sum += std::log(static_cast<double>(d) / shift);
  fit.gamma = 1.0 + static_cast<double>(tail.size()) / log_sum;
  fit.degenerate = false;

  // KS distance between empirical and fitted CCDF at each distinct degree.
  const double n = static_cast<double>(tail.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < tail.size();) {
    std::size_t j = i;
    while (j < tail.size() && tail[j] == tail[i]) ++j;
    const double empirical = (n - static_cast<double>(i)) / n;
    const double model =
        std::pow((static_cast<double>(tail[i]) - 0.5) / shift, 1.0 - fit.gamma);
    ks = std::max(ks, std::abs(empirical - model));
    i = j;
  }
  fit.ks_distance = ks;
  return fit;
}

/// Exponent of the undirected degree distribution for a fixed lower cutoff.
/// Returns +inf when the tail has a single distinct degree.
inline double powerlaw_gamma(const UserGraph& g, std::uint32_t d_min = 2) {
  const auto deg = undirected_degrees(g);
  return powerlaw_mle(deg, d_min).gamma;
}

/// Scans every distinct degree as cutoff and keeps the fit with the smallest
/// KS distance among tails of at least `min_tail` nodes.
inline PowerLawFit fit_powerlaw(std::span<const std::uint32_t> degrees, std::size_t min_tail = 50) {
  std::vector<std::uint32_t> candidates;
  for (auto d : degrees) {
    if (d > 0) candidates.push_back(d);
  }
  if (candidates.empty()) throw Error(ErrorKind::kInsufficientData, "all degrees are zero");
  std::sort(candidates.begin(), candidates.end());
  const std::size_t total = candidates.size();
  min_tail = std::min(min_tail, total);

  std::optional<PowerLawFit> best;
  for (std::size_t i = 0; i < total;) {
    const std::uint32_t d = candidates[i];
    if (total - i < min_tail) break;
    auto fit = powerlaw_mle(candidates, d);
    if (!fit.degenerate && (!best || fit.ks_distance < best->ks_distance)) best = fit;
    while (i < total && candidates[i] == d) ++i;
  }
  if (!best) return powerlaw_mle(candidates, candidates.front());
  return *best;
}

struct GraphStats {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  double clustering_coefficient = 0.0;
  double powerlaw_gamma = std::numeric_limits<double>::infinity();
  std::uint32_t powerlaw_d_min = 0;
  std::size_t component_count = 0;
};

inline GraphStats compute_stats(const UserGraph& g, std::size_t threads = 1) {
  GraphStats s;
  s.node_count = g.node_count();
  s.edge_count = g.edge_count();
  s.clustering_coefficient = clustering_coefficient(g, threads);
  weak_components(g, &s.component_count);
  const auto deg = undirected_degrees(g);
  if (std::any_of(deg.begin(), deg.end(), [](auto d) { return d > 0; })) {
    const auto fit = fit_powerlaw(deg);
    s.powerlaw_gamma = fit.gamma;
    s.powerlaw_d_min = fit.d_min;
  }
  return s;
}

}  // namespace hmd
