#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hmd/dataset_io.hpp"
#include "hmd/errors.hpp"
#include "hmd/graph.hpp"
#include "hmd/matrix.hpp"
#include "hmd/parallel.hpp"
#include "hmd/random.hpp"
#include "hmd/training.hpp"
#include "hmd/utterance.hpp"

namespace hmd {

/// node2vec settings. Defaults: 10 walks of length 20 per node, p = q = 1,
/// window 10, 128 dimensions, 50 epochs, 5 negative samples.
struct WalkConfig {
  std::size_t walks_per_node = 10;
  std::size_t walk_length = 20;
  double p = 1.0;
  double q = 1.0;
  std::size_t window = 10;
  std::size_t dim = 128;
  std::size_t epochs = 50;
  std::size_t negatives = 5;
  double learning_rate = 0.025;
  double min_learning_rate = 0.0001;
  bool shrink_window = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (walks_per_node == 0 || walk_length == 0 || window == 0 || dim == 0 || epochs == 0 ||
        negatives == 0) {
      throw Error(ErrorKind::kValidation, "walk and embedding sizes must be positive");
    }
    if (!(p > 0.0) || !(q > 0.0)) throw Error(ErrorKind::kValidation, "p and q must be positive");
  }
};

using Walk = std::vector<NodeId>;

/// Second-order biased walks over the undirected projection. Walk r of node
/// u is stored at index r * n + u and draws from its own RNG stream, so the
/// output does not depend on `threads`. A walk stops early at a node with no
/// neighbors.
inline std::vector<Walk> generate_walks(const UserGraph& g, const WalkConfig& cfg,
                                        std::size_t threads = 1) {
  cfg.validate();
  if (g.empty()) throw Error(ErrorKind::kEmptyInput, "graph has no nodes");
  const std::size_t n = g.node_count();
  const bool uniform = cfg.p == 1.0 && cfg.q == 1.0;
  std::vector<Walk> walks(n * cfg.walks_per_node);
  parallel_for(walks.size(), threads, [&](std::size_t idx) {
    const auto start = static_cast<NodeId>(idx % n);
    const std::size_t r = idx / n;
    Rng rng(derive_seed(cfg.seed, "walk", static_cast<std::uint64_t>(start) * cfg.walks_per_node + r));
    Walk& walk = walks[idx];
    walk.reserve(cfg.walk_length);
    walk.push_back(start);
    std::vector<double> cumulative;
    while (walk.size() < cfg.walk_length) {
      const NodeId cur = walk.back();
      const auto nbrs = g.neighbors(cur);
      if (nbrs.empty()) break;
      if (uniform || walk.size() == 1) {
        walk.push_back(nbrs[uniform_below(rng, nbrs.size())]);
        continue;
      }
      const NodeId prev = walk[walk.size() - 2];
      cumulative.resize(nbrs.size());
      double total = 0.0;
      for (std::size_t i = 0; i < nbrs.size(); ++i) {
        const NodeId x = nbrs[i];
        total += x == prev ? 1.0 / cfg.p : (g.adjacent(prev, x) ? 1.0 : 1.0 / cfg.q);
        cumulative[i] = total;
      }
      const double draw = uniform01(rng) * total;
      const auto pick = std::upper_bound(cumulative.begin(), cumulative.end(), draw) - cumulative.begin();
      walk.push_back(nbrs[std::min<std::size_t>(pick, nbrs.size() - 1)]);
    }
  });
  return walks;
}

class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t nodes, std::size_t dim) : dim_(dim), values_(nodes * dim, 0.0) {}

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<double> row(std::size_t u) { return {values_.data() + u * dim_, dim_}; }
  std::span<const double> row(std::size_t u) const { return {values_.data() + u * dim_, dim_}; }

  bool operator==(const EmbeddingTable&) const = default;

 private:
  std::size_t dim_;
  std::vector<double> values_;
};

namespace detail {

// Eight interleaved partial sums: fixed association order that the compiler
// can map onto SIMD lanes.
inline float dot(const float* a, const float* b, std::size_t n) noexcept {
  float acc[8] = {};
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[k + l] * b[k + l];
  }
  for (; k < n; ++k) acc[k % 8] += a[k] * b[k];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

}  // namespace detail

/// Skip-gram with negative sampling. For each center position the context
/// is every node within a window of `window` positions, shrunk per center to
/// a uniform size in [1, window] when `shrink_window` is set (the word2vec
/// convention). Negatives come from the unigram^0.75 distribution and the
/// learning rate decays linearly over all epochs. Updates run
/// single-threaded in walk order, so the table is a pure function of
/// (walks, cfg).
inline EmbeddingTable train_skipgram(std::span<const Walk> walks, std::size_t node_count,
                                     const WalkConfig& cfg) {
  cfg.validate();
  if (walks.empty()) throw Error(ErrorKind::kEmptyInput, "no walks to train on");
  const std::size_t dim = cfg.dim;
  std::vector<float> input(node_count * dim);
  std::vector<float> output(node_count * dim, 0.0f);

  Rng rng(derive_seed(cfg.seed, "sgns"));
  for (auto& v : input) v = static_cast<float>((uniform01(rng) - 0.5) / static_cast<double>(dim));

  std::vector<double> freq(node_count, 0.0);
  std::size_t tokens = 0;
  for (const auto& w : walks) {
    for (NodeId u : w) {
      if (u >= node_count) throw Error(ErrorKind::kValidation, "walk visits unknown node");
      freq[u] += 1.0;
    }
    tokens += w.size();
  }
  std::vector<double> noise(node_count);
  double total = 0.0;
  for (std::size_t u = 0; u < node_count; ++u) {
    total += std::pow(freq[u], 0.75);
    noise[u] = total;
  }
  auto sample_noise = [&]() -> NodeId {
    const double draw = uniform01(rng) * total;
    const auto it = std::upper_bound(noise.begin(), noise.end(), draw);
    return static_cast<NodeId>(std::min<std::ptrdiff_t>(it - noise.begin(),
                                                        static_cast<std::ptrdiff_t>(node_count) - 1));
  };

  const double total_tokens = static_cast<double>(tokens * cfg.epochs);
  double processed = 0.0;
  std::vector<float> grad_in(dim);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& walk : walks) {
      for (std::size_t i = 0; i < walk.size(); ++i, processed += 1.0) {
        const auto lr = static_cast<float>(std::max(
            cfg.min_learning_rate, cfg.learning_rate - (cfg.learning_rate - cfg.min_learning_rate) *
                                                           processed / total_tokens));
        const std::size_t window =
            cfg.shrink_window ? 1 + uniform_below(rng, cfg.window) : cfg.window;
        float* h = input.data() + static_cast<std::size_t>(walk[i]) * dim;
        const std::size_t lo = i >= window ? i - window : 0;
        const std::size_t hi = std::min(walk.size() - 1, i + window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const NodeId context = walk[j];
          std::fill(grad_in.begin(), grad_in.end(), 0.0f);
          for (std::size_t s = 0; s <= cfg.negatives; ++s) {
            NodeId target = context;
            float label = 1.0f;
            if (s > 0) {
              target = sample_noise();
              if (target == context) continue;
              label = 0.0f;
            }
            float* out = output.data() + static_cast<std::size_t>(target) * dim;
            const float dot = detail::dot(h, out, dim);
            const float g = (label - static_cast<float>(logistic(dot))) * lr;
            for (std::size_t k = 0; k < dim; ++k) {
              grad_in[k] += g * out[k];
              out[k] += g * h[k];
            }
          }
          for (std::size_t k = 0; k < dim; ++k) h[k] += grad_in[k];
        }
      }
    }
  }

  EmbeddingTable table(node_count, dim);
  for (std::size_t u = 0; u < node_count; ++u) {
    auto row = table.row(u);
    for (std::size_t k = 0; k < dim; ++k) row[k] = input[u * dim + k];
  }
  return table;
}

inline EmbeddingTable embed_graph(const UserGraph& g, const WalkConfig& cfg,
                                  std::size_t threads = 1) {
  const auto walks = generate_walks(g, cfg, threads);
  return train_skipgram(walks, g.node_count(), cfg);
}

/// Cross-validates logistic regression on the embeddings of the labeled
/// nodes of `d`. `table` must be indexed like `d.graph`.
inline EvalReport evaluate_embeddings(const Dataset& d, const EmbeddingTable& table,
                                      const CvOptions& cv) {
  if (table.size() != d.graph.node_count()) {
    throw Error(ErrorKind::kDimensionMismatch, "one embedding per node required");
  }
  const auto nodes = d.labeled_nodes();
  FeatureMatrix X(nodes.size(), table.dim());
  for (std::size_t i = 0; i < table.dim(); ++i) X.names.push_back("e" + std::to_string(i));
  std::vector<std::uint8_t> y;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto e = table.row(nodes[i]);
    std::copy(e.begin(), e.end(), X.row(i).begin());
    y.push_back(static_cast<std::uint8_t>(d.labels[nodes[i]]));
  }
  auto report = kfold_cv(X, y, cv, "node2vec");
  report.mode = "node2vec";
  report.hyperparameters["labeled_users"] = nodes.size();
  return report;
}

/// LCC, walks, skip-gram, then logistic-regression CV on the embeddings.
inline EvalReport embed_and_classify(const Dataset& dataset, const WalkConfig& cfg,
                                     const CvOptions& cv, EmbeddingTable* table_out = nullptr,
                                     Dataset* lcc_out = nullptr) {
  Dataset lcc = restrict_to_lcc(dataset);
  auto table = embed_graph(lcc.graph, cfg, cv.threads);
  auto report = evaluate_embeddings(lcc, table, cv);
  report.hyperparameters["walks_per_node"] = cfg.walks_per_node;
  report.hyperparameters["walk_length"] = cfg.walk_length;
  report.hyperparameters["p"] = cfg.p;
  report.hyperparameters["q"] = cfg.q;
  report.hyperparameters["window"] = cfg.window;
  report.hyperparameters["dim"] = cfg.dim;
  report.hyperparameters["epochs"] = cfg.epochs;
  report.hyperparameters["negatives"] = cfg.negatives;
  if (table_out != nullptr) *table_out = std::move(table);
  if (lcc_out != nullptr) *lcc_out = std::move(lcc);
  return report;
}

inline std::string embeddings_csv(const UserGraph& g, const EmbeddingTable& table) {
  std::string out = "user_id";
  for (std::size_t k = 0; k < table.dim(); ++k) out += ",e" + std::to_string(k);
  out += '\n';
  for (NodeId u = 0; u < g.node_count(); ++u) {
    out += csv::escape(g.user_id(u));
    for (double v : table.row(u)) out += "," + detail::format_double(v);
    out += '\n';
  }
  return out;
}

}  // namespace hmd
