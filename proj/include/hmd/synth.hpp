#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmd/dataset_io.hpp"
#include "hmd/errors.hpp"
#include "hmd/graph.hpp"
#include "hmd/random.hpp"

namespace hmd {

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
};

/// Planted-community benchmark: preferential-attachment follower graph,
/// homophilous rewiring toward same-class users, and class-conditional Beta
/// post scores.
struct SynthConfig {
  std::size_t n_users = 2000;
  std::size_t attach_m = 3;
  double hate_fraction = 0.25;
  double homophily = 0.8;
  std::size_t posts_min = 1;
  std::size_t posts_max = 20;
  BetaParams score_dist_hateful{5.0, 5.0};
  BetaParams score_dist_benign{2.0, 8.0};
  std::uint64_t seed = 42;
  std::size_t rewire_retries = 20;

  void validate() const {
    auto fail = [](const std::string& key, const std::string& why) {
      throw Error(ErrorKind::kConfig, "'" + key + "' " + why);
    };
    if (attach_m < 1) fail("attach_m", "must be at least 1");
    if (n_users <= attach_m + 1) fail("n_users", "must exceed attach_m + 1");
    if (n_users > std::numeric_limits<NodeId>::max() / 2) fail("n_users", "is too large");
    if (!(hate_fraction > 0.0 && hate_fraction < 1.0)) fail("hate_fraction", "must lie in (0,1)");
    if (!(homophily >= 0.0 && homophily <= 1.0)) fail("homophily", "must lie in [0,1]");
    if (posts_min > posts_max) fail("posts_per_user", "min exceeds max");
    for (const auto& [key, b] : {std::pair{"score_dist_hateful", score_dist_hateful},
                                 std::pair{"score_dist_benign", score_dist_benign}}) {
      if (!(b.alpha > 0.0 && b.beta > 0.0)) fail(key, "Beta parameters must be positive");
    }
  }

  nlohmann::json to_json() const {
    return {{"n_users", n_users},
            {"attach_m", attach_m},
            {"hate_fraction", hate_fraction},
            {"homophily", homophily},
            {"posts_per_user", {posts_min, posts_max}},
            {"score_dist_hateful", {score_dist_hateful.alpha, score_dist_hateful.beta}},
            {"score_dist_benign", {score_dist_benign.alpha, score_dist_benign.beta}},
            {"seed", seed},
            {"rewire_retries", rewire_retries}};
  }

  /// Missing keys keep their defaults; unknown keys and ill-typed values are
  /// rejected with the key named.
  static SynthConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorKind::kConfig, "synth config must be a JSON object");
    SynthConfig c;
    auto bad = [](const std::string& key, const char* expected) {
      throw Error(ErrorKind::kConfig, "'" + key + "' must be " + expected);
    };
    auto count = [&](const std::string& key, const nlohmann::json& v) -> std::size_t {
      if (!v.is_number_unsigned()) bad(key, "a non-negative integer");
      return v.get<std::size_t>();
    };
    auto real = [&](const std::string& key, const nlohmann::json& v) -> double {
      if (!v.is_number()) bad(key, "a number");
      return v.get<double>();
    };
    auto pair = [&](const std::string& key, const nlohmann::json& v) {
      if (!v.is_array() || v.size() != 2) bad(key, "a two-element array");
      return std::pair{v[0], v[1]};
    };
    for (const auto& [key, v] : j.items()) {
      if (key == "n_users") {
        c.n_users = count(key, v);
      } else if (key == "attach_m") {
        c.attach_m = count(key, v);
      } else if (key == "hate_fraction") {
        c.hate_fraction = real(key, v);
      } else if (key == "homophily") {
        c.homophily = real(key, v);
      } else if (key == "posts_per_user") {
        const auto [lo, hi] = pair(key, v);
        c.posts_min = count(key, lo);
        c.posts_max = count(key, hi);
      } else if (key == "score_dist_hateful" || key == "score_dist_benign") {
        const auto [a, b] = pair(key, v);
        BetaParams params{real(key, a), real(key, b)};
        (key == "score_dist_hateful" ? c.score_dist_hateful : c.score_dist_benign) = params;
      } else if (key == "seed") {
        c.seed = count(key, v);
      } else if (key == "rewire_retries") {
        c.rewire_retries = count(key, v);
      } else {
        throw Error(ErrorKind::kConfig, "unknown key '" + key + "'");
      }
    }
    c.validate();
    return c;
  }
};

/// Zero-padded ids so lexicographic order equals creation order.
inline std::vector<std::string> synthetic_user_ids(std::size_t n) {
  const std::size_t width = std::to_string(n == 0 ? 0 : n - 1).size();
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto digits = std::to_string(i);
    ids[i] = "u" + std::string(width - digits.size(), '0') + digits;
  }
  return ids;
}

/// Exactly round(n * hate_fraction) hateful users, clamped to [1, n - 1].
inline std::vector<std::uint8_t> assign_classes(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_users;
  auto hateful = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.hate_fraction));
  hateful = std::clamp<std::size_t>(hateful, 1, n - 1);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(cfg.seed, "classes"));
  shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> classes(n, 0);
  for (std::size_t i = 0; i < hateful; ++i) classes[order[i]] = 1;
  return classes;
}

/// Preferential attachment: a complete seed graph on attach_m + 1 users, then
/// each new user follows attach_m distinct existing users picked with
/// probability proportional to degree. Afterwards each edge, with
/// probability `homophily`, re-targets to a uniform user of the follower's
/// class (self-loops and duplicates rejected, bounded retries).
inline UserGraph generate_graph(const SynthConfig& cfg, std::span<const std::uint8_t> classes) {
  cfg.validate();
  const std::size_t n = cfg.n_users;
  const std::size_t m = cfg.attach_m;
  if (classes.size() != n) throw Error(ErrorKind::kDimensionMismatch, "one class per user required");

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(n * m + m * (m + 1) / 2);
  std::vector<NodeId> endpoints;  // each node repeated once per incident edge
  endpoints.reserve(2 * edges.capacity());
  for (NodeId i = 0; i <= m; ++i) {
    for (NodeId j = 0; j < i; ++j) {
      edges.emplace_back(i, j);
      endpoints.push_back(i);
      endpoints.push_back(j);
    }
  }
  Rng rng(derive_seed(cfg.seed, "attach"));
  std::vector<NodeId> picked;
  for (auto v = static_cast<NodeId>(m + 1); v < n; ++v) {
    picked.clear();
    while (picked.size() < m) {
      const NodeId t = endpoints[uniform_below(rng, endpoints.size())];
      if (std::find(picked.begin(), picked.end(), t) == picked.end()) picked.push_back(t);
    }
    for (NodeId t : picked) {
      edges.emplace_back(v, t);
      endpoints.push_back(v);
      endpoints.push_back(t);
    }
  }

  if (cfg.homophily > 0.0) {
    std::vector<NodeId> by_class[2];
    for (NodeId u = 0; u < n; ++u) by_class[classes[u] != 0].push_back(u);
    auto key = [](NodeId a, NodeId b) { return (static_cast<std::uint64_t>(a) << 32) | b; };
    std::unordered_set<std::uint64_t> present;
    present.reserve(edges.size() * 2);
    for (const auto& [a, b] : edges) present.insert(key(a, b));
    Rng rewire(derive_seed(cfg.seed, "rewire"));
    for (auto& [src, dst] : edges) {
      if (uniform01(rewire) >= cfg.homophily) continue;
      const auto& pool = by_class[classes[src] != 0];
      for (std::size_t attempt = 0; attempt < cfg.rewire_retries; ++attempt) {
        const NodeId t = pool[uniform_below(rewire, pool.size())];
        if (t == src || t == dst || present.count(key(src, t)) != 0) continue;
        present.erase(key(src, dst));
        present.insert(key(src, t));
        dst = t;
        break;
      }
    }
  }
  return UserGraph::from_indexed_edges(synthetic_user_ids(n), std::move(edges));
}

/// Draws from Beta(alpha, beta) as X / (X + Y) with X, Y Gamma-distributed.
inline double sample_beta(Rng& rng, const BetaParams& b) {
  std::gamma_distribution<double> ga(b.alpha, 1.0);
  std::gamma_distribution<double> gb(b.beta, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y == 0.0) return 0.5;
  return std::clamp(x / (x + y), 0.0, 1.0);
}

/// Per user: a uniform post count in [posts_min, posts_max], each score drawn
/// from the Beta distribution of the user's class.
inline std::vector<std::vector<double>> sample_scores(const SynthConfig& cfg,
                                                      std::span<const std::uint8_t> classes) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "scores"));
  std::vector<std::vector<double>> scores(classes.size());
  const std::size_t span = cfg.posts_max - cfg.posts_min + 1;
  for (std::size_t u = 0; u < classes.size(); ++u) {
    const std::size_t count = cfg.posts_min + uniform_below(rng, span);
    const auto& dist = classes[u] ? cfg.score_dist_hateful : cfg.score_dist_benign;
    scores[u].reserve(count);
    for (std::size_t j = 0; j < count; ++j) scores[u].push_back(sample_beta(rng, dist));
  }
  return scores;
}

/// Full synthetic dataset restricted to its largest weakly connected
/// component. Every user is labeled.
inline Dataset generate_dataset(const SynthConfig& cfg) {
  const auto classes = assign_classes(cfg);
  Dataset d;
  d.graph = generate_graph(cfg, classes);
  d.scores = sample_scores(cfg, classes);
  d.labels.assign(classes.begin(), classes.end());
  return restrict_to_lcc(d);
}

}  // namespace hmd
