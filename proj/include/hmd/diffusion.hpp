#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hmd/errors.hpp"
#include "hmd/graph.hpp"
#include "hmd/parallel.hpp"
#include "hmd/random.hpp"

namespace hmd {

struct DiffusionState {
  std::vector<double> beliefs;
  std::size_t iteration = 0;
  /// Seeded node indices, sorted. Their beliefs are clamped to their labels.
  std::vector<NodeId> seeds;
  std::vector<std::uint8_t> is_seed;
};

struct DiffusionOptions {
  double seed_fraction = 0.05;
  double prior = 0.5;
  std::size_t iterations = 10;
  double threshold = 0.5;
};

/// Seeds a stratified random sample of labeled nodes with their labels and
/// gives every other node `prior`. The sample holds round(fraction * L)
/// nodes (at least one), split across classes by largest remainder.
/// `labels` is per node: -1 unlabeled, 0 or 1.
inline DiffusionState seed_beliefs(std::span<const std::int8_t> labels, double seed_fraction,
                                   std::uint64_t seed, double prior = 0.5) {
  if (!(seed_fraction > 0.0 && seed_fraction <= 1.0)) {
    throw Error(ErrorKind::kValidation, "seed_fraction must lie in (0,1]");
  }
  if (!(prior >= 0.0 && prior <= 1.0)) throw Error(ErrorKind::kValidation, "prior must lie in [0,1]");

  std::vector<NodeId> by_class[2];
  for (NodeId u = 0; u < labels.size(); ++u) {
    if (labels[u] == 0 || labels[u] == 1) by_class[labels[u]].push_back(u);
  }
  const std::size_t labeled = by_class[0].size() + by_class[1].size();
  if (labeled == 0) throw Error(ErrorKind::kInsufficientData, "no labeled users to seed from");

  auto total = static_cast<std::size_t>(std::llround(seed_fraction * static_cast<double>(labeled)));
  total = std::clamp<std::size_t>(total, 1, labeled);
  std::size_t take[2];
  double remainder[2];
  for (int c = 0; c < 2; ++c) {
    const double exact = static_cast<double>(total) * static_cast<double>(by_class[c].size()) /
                         static_cast<double>(labeled);
    take[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - static_cast<double>(take[c]);
  }
  if (take[0] + take[1] < total) {
    // Larger remainder wins; exact ties go to the positive class.
    const int c = remainder[1] >= remainder[0] ? 1 : 0;
    if (take[c] < by_class[c].size()) ++take[c]; else ++take[1 - c];
  }

  DiffusionState s;
  s.beliefs.assign(labels.size(), prior);
  s.is_seed.assign(labels.size(), 0);
  Rng rng(derive_seed(seed, "diffusion-seeds"));
  for (int c = 0; c < 2; ++c) {
    auto& pool = by_class[c];
    shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t i = 0; i < take[c]; ++i) {
      s.seeds.push_back(pool[i]);
      s.is_seed[pool[i]] = 1;
      s.beliefs[pool[i]] = static_cast<double>(c);
    }
  }
  std::sort(s.seeds.begin(), s.seeds.end());
  return s;
}

/// One synchronous update: each unseeded node takes the mean belief of its
/// undirected neighbors; isolated and seeded nodes keep their belief.
inline DiffusionState degroot_step(const UserGraph& g, const DiffusionState& s,
                                   std::size_t threads = 1) {
  if (s.beliefs.size() != g.node_count()) {
    throw Error(ErrorKind::kDimensionMismatch, "one belief per node required");
  }
  DiffusionState next;
  next.seeds = s.seeds;
  next.is_seed = s.is_seed;
  next.iteration = s.iteration + 1;
  next.beliefs.resize(s.beliefs.size());
  parallel_for(g.node_count(), threads, [&](std::size_t i) {
    const auto u = static_cast<NodeId>(i);
    const auto nbrs = g.neighbors(u);
    if ((!s.is_seed.empty() && s.is_seed[u]) || nbrs.empty()) {
      next.beliefs[u] = s.beliefs[u];
      return;
    }
    double sum = 0.0;
    for (NodeId v : nbrs) sum += s.beliefs[v];
    next.beliefs[u] = sum / static_cast<double>(nbrs.size());
  });
  return next;
}

struct DiffusionResult {
  DiffusionState state;
  std::vector<std::uint8_t> predictions;
};

inline DiffusionResult degroot_run(const UserGraph& g, DiffusionState state,
                                   std::size_t iterations = 10, double threshold = 0.5,
                                   std::size_t threads = 1) {
  if (iterations < 1) throw Error(ErrorKind::kValidation, "need at least one iteration");
  for (std::size_t i = 0; i < iterations; ++i) state = degroot_step(g, state, threads);
  DiffusionResult r;
  r.predictions.reserve(state.beliefs.size());
  for (double b : state.beliefs) r.predictions.push_back(b >= threshold);
  r.state = std::move(state);
  return r;
}

}  // namespace hmd
