#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hmd/csv.hpp"
#include "hmd/dataset_io.hpp"
#include "hmd/errors.hpp"
#include "hmd/graph.hpp"
#include "hmd/matrix.hpp"
#include "hmd/parallel.hpp"

namespace hmd {

/// Feature constructions, one per user-level model variant:
///   F    post count above tau_t
///   R    own count, follower and followee hateful fractions, missing flags
///   Db   softmaxed histogram over fixed [0,1] bins
///   Dq   softmaxed histogram over the user's own [min, max] score range
///   DbDq Db then Dq
///   FULL R then Db then Dq
enum class FeatureMode { kF, kR, kDb, kDq, kDbDq, kFull };

inline constexpr std::array<FeatureMode, 6> kAllFeatureModes = {
    FeatureMode::kF,  FeatureMode::kR,    FeatureMode::kDb,
    FeatureMode::kDq, FeatureMode::kDbDq, FeatureMode::kFull};

inline std::string_view to_string(FeatureMode mode) noexcept {
  switch (mode) {
    case FeatureMode::kF: return "F";
    case FeatureMode::kR: return "R";
    case FeatureMode::kDb: return "Db";
    case FeatureMode::kDq: return "Dq";
    case FeatureMode::kDbDq: return "DbDq";
    case FeatureMode::kFull: return "FULL";
  }
  return "?";
}

inline FeatureMode parse_feature_mode(std::string_view s) {
  for (auto m : kAllFeatureModes) {
    if (s == to_string(m)) return m;
  }
  throw Error(ErrorKind::kConfig,
              "unknown mode '" + std::string(s) + "'; valid modes: F, R, Db, Dq, DbDq, FULL");
}

struct FeatureParams {
  double tau_t = 0.5;
  double tau_u = 1.0;
  std::size_t bins = 10;
};

inline std::size_t fixed_threshold_count(std::span<const double> scores, double tau_t) {
  return static_cast<std::size_t>(
      std::count_if(scores.begin(), scores.end(), [tau_t](double s) { return s >= tau_t; }));
}

inline int fixed_threshold_classify(std::size_t count, double tau_u) {
  return static_cast<double>(count) >= tau_u ? 1 : 0;
}

inline void check_bins(std::size_t k) {
  if (k < 2) throw Error(ErrorKind::kValidation, "need at least 2 bins");
}

namespace detail {

/// Bin of `s` given the k lower edges `edge(0..k-1)`: the largest i with
/// edge(i) <= s, clamped to [0, k-1]. The floor estimate is corrected
/// against the edges themselves so rounding in `guess` never misplaces a
/// score that sits exactly on an edge.
template <class EdgeFn>
std::size_t place(double s, double guess, std::size_t k, EdgeFn edge) {
  std::size_t i = 0;
  if (guess > 0.0) i = std::min(static_cast<std::size_t>(guess), k - 1);
  while (i > 0 && s < edge(i)) --i;
  while (i + 1 < k && s >= edge(i + 1)) ++i;
  return i;
}

}  // namespace detail

/// Counts over [i/k, (i+1)/k), the last bin closed at 1.
inline std::vector<std::size_t> bin_histogram(std::span<const double> scores, std::size_t k) {
  check_bins(k);
  std::vector<std::size_t> counts(k, 0);
  const double kd = static_cast<double>(k);
  auto edge = [kd](std::size_t i) { return static_cast<double>(i) / kd; };
  for (double s : scores) ++counts[detail::place(s, std::floor(s * kd), k, edge)];
  return counts;
}

/// Counts over k equal-width bins spanning this user's [min, max], with
/// lower edges min + i * (max - min) / k; the last bin is closed. A
/// zero-width range puts everything in bin 0.
inline std::vector<std::size_t> quantile_histogram(std::span<const double> scores, std::size_t k) {
  check_bins(k);
  if (scores.empty()) throw Error(ErrorKind::kEmptyInput, "user has no posts");
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / static_cast<double>(k);
  std::vector<std::size_t> counts(k, 0);
  if (!(width > 0.0)) {
    counts[0] = scores.size();
    return counts;
  }
  auto edge = [lo, width](std::size_t i) { return lo + static_cast<double>(i) * width; };
  for (double s : scores) ++counts[detail::place(s, std::floor((s - lo) / width), k, edge)];
  return counts;
}

inline std::vector<double> softmax(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorKind::kEmptyInput, "softmax of empty vector");
  const double hi = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - hi);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

inline std::vector<double> softmax_counts(std::span<const std::size_t> counts) {
  std::vector<double> v(counts.begin(), counts.end());
  return softmax(v);
}

struct RelationalFeatures {
  std::size_t own_count = 0;
  double follower_frac = 0.0;
  double followee_frac = 0.0;
  bool missing_followers = false;
  bool missing_followees = false;
};

/// Mean hateful flag over followers and over followees. An empty neighbor
/// set yields fraction 0 with its missing flag raised.
inline RelationalFeatures relational_features(const UserGraph& g, NodeId u,
                                              std::span<const std::uint8_t> flags,
                                              std::size_t own_count) {
  if (u >= g.node_count()) throw Error(ErrorKind::kNotFound, "node index out of range");
  if (flags.size() != g.node_count()) {
    throw Error(ErrorKind::kDimensionMismatch, "one flag per node required");
  }
  auto mean_flag = [&](std::span<const NodeId> nbrs, bool& missing) {
    missing = nbrs.empty();
    if (missing) return 0.0;
    std::size_t hits = 0;
    for (NodeId v : nbrs) hits += flags[v] != 0;
    return static_cast<double>(hits) / static_cast<double>(nbrs.size());
  };
  RelationalFeatures r;
  r.own_count = own_count;
  r.follower_frac = mean_flag(g.in_neighbors(u), r.missing_followers);
  r.followee_frac = mean_flag(g.out_neighbors(u), r.missing_followees);
  return r;
}

inline RelationalFeatures relational_features(const UserGraph& g, std::string_view user,
                                              const std::unordered_map<std::string, int>& flags,
                                              std::size_t own_count) {
  const NodeId u = g.index_of(user);
  std::vector<std::uint8_t> dense(g.node_count(), 0);
  for (NodeId v = 0; v < g.node_count(); ++v) {
    const auto it = flags.find(g.user_id(v));
    if (it == flags.end()) {
      throw Error(ErrorKind::kValidation, "no flag for user '" + g.user_id(v) + "'");
    }
    dense[v] = it->second != 0;
  }
  return relational_features(g, u, dense, own_count);
}

/// Every aggregate for one user. `model_features()` picks the slots a mode
/// feeds to the learner.
struct UserFeatureVector {
  std::string user_id;
  FeatureMode mode = FeatureMode::kFull;
  std::size_t own_count = 0;
  std::uint8_t own_flag = 0;
  double follower_frac = 0.0;
  double followee_frac = 0.0;
  std::uint8_t miss_in = 0;
  std::uint8_t miss_out = 0;
  std::vector<double> bin_hist;
  std::vector<double> quantile_hist;

  std::vector<double> model_features() const {
    std::vector<double> out;
    const bool relational = mode == FeatureMode::kR || mode == FeatureMode::kFull;
    const bool bins = mode == FeatureMode::kDb || mode == FeatureMode::kDbDq ||
                      mode == FeatureMode::kFull;
    const bool quantiles = mode == FeatureMode::kDq || mode == FeatureMode::kDbDq ||
                           mode == FeatureMode::kFull;
    if (mode == FeatureMode::kF) out.push_back(static_cast<double>(own_count));
    if (relational) {
      out.insert(out.end(), {static_cast<double>(own_count), follower_frac, followee_frac,
                             static_cast<double>(miss_in), static_cast<double>(miss_out)});
    }
    if (bins) out.insert(out.end(), bin_hist.begin(), bin_hist.end());
    if (quantiles) out.insert(out.end(), quantile_hist.begin(), quantile_hist.end());
    return out;
  }
};

inline std::size_t feature_dimension(FeatureMode mode, std::size_t k) {
  switch (mode) {
    case FeatureMode::kF: return 1;
    case FeatureMode::kR: return 5;
    case FeatureMode::kDb:
    case FeatureMode::kDq: return k;
    case FeatureMode::kDbDq: return 2 * k;
    case FeatureMode::kFull: return 5 + 2 * k;
  }
  return 0;
}

inline std::vector<std::string> feature_names(FeatureMode mode, std::size_t k) {
  std::vector<std::string> names;
  auto hist = [&](char prefix) {
    for (std::size_t i = 0; i < k; ++i) names.push_back(prefix + std::to_string(i));
  };
  if (mode == FeatureMode::kF) names.push_back("own_count");
  if (mode == FeatureMode::kR || mode == FeatureMode::kFull) {
    names.insert(names.end(), {"own_count", "follower_frac", "followee_frac", "miss_in", "miss_out"});
  }
  if (mode == FeatureMode::kDb || mode == FeatureMode::kDbDq || mode == FeatureMode::kFull) hist('b');
  if (mode == FeatureMode::kDq || mode == FeatureMode::kDbDq || mode == FeatureMode::kFull) hist('q');
  return names;
}

/// Per-node hateful-post counts and user flags, computed once per dataset
/// and shared by every user's feature assembly.
class FeatureContext {
 public:
  FeatureContext(const UserGraph& graph, std::span<const std::vector<double>> scores,
                 FeatureParams params, std::size_t threads = 1)
      : graph_(&graph), scores_(scores), params_(params) {
    if (scores.size() != graph.node_count()) {
      throw Error(ErrorKind::kDimensionMismatch, "one score list per node required");
    }
    check_bins(params.bins);
    counts_.resize(graph.node_count());
    flags_.resize(graph.node_count());
    parallel_for(graph.node_count(), threads, [&](std::size_t u) {
      counts_[u] = fixed_threshold_count(scores_[u], params_.tau_t);
      flags_[u] = static_cast<std::uint8_t>(fixed_threshold_classify(counts_[u], params_.tau_u));
    });
  }

  explicit FeatureContext(const Dataset& d, FeatureParams params, std::size_t threads = 1)
      : FeatureContext(d.graph, d.scores, params, threads) {}

  const UserGraph& graph() const noexcept { return *graph_; }
  const FeatureParams& params() const noexcept { return params_; }
  std::span<const std::size_t> counts() const noexcept { return counts_; }
  std::span<const std::uint8_t> flags() const noexcept { return flags_; }

  UserFeatureVector assemble(NodeId u, FeatureMode mode) const {
    const auto& g = *graph_;
    if (u >= g.node_count()) throw Error(ErrorKind::kNotFound, "node index out of range");
    UserFeatureVector f;
    f.user_id = g.user_id(u);
    f.mode = mode;
    const auto rel = relational_features(g, u, flags_, counts_[u]);
    f.own_count = rel.own_count;
    f.own_flag = flags_[u];
    f.follower_frac = rel.follower_frac;
    f.followee_frac = rel.followee_frac;
    f.miss_in = rel.missing_followers;
    f.miss_out = rel.missing_followees;
    const auto& s = scores_[u];
    f.bin_hist = softmax_counts(bin_histogram(s, params_.bins));
    if (s.empty()) {
      f.quantile_hist = softmax(std::vector<double>(params_.bins, 0.0));
    } else {
      f.quantile_hist = softmax_counts(quantile_histogram(s, params_.bins));
    }
    return f;
  }

  /// One row per node in `nodes`, in that order.
  FeatureMatrix matrix(std::span<const NodeId> nodes, FeatureMode mode,
                       std::size_t threads = 1) const {
    FeatureMatrix X(nodes.size(), feature_dimension(mode, params_.bins));
    X.names = feature_names(mode, params_.bins);
    parallel_for(nodes.size(), threads, [&](std::size_t i) {
      const auto row = assemble(nodes[i], mode).model_features();
      std::copy(row.begin(), row.end(), X.row(i).begin());
    });
    return X;
  }

 private:
  const UserGraph* graph_;
  std::span<const std::vector<double>> scores_;
  FeatureParams params_;
  std::vector<std::size_t> counts_;
  std::vector<std::uint8_t> flags_;
};

inline UserFeatureVector assemble_features(const Dataset& d, std::string_view user,
                                           FeatureMode mode, FeatureParams params = {}) {
  const NodeId u = d.graph.index_of(user);
  return FeatureContext(d, params).assemble(u, mode);
}

/// CSV with every slot: user_id, own_count, own_flag, follower_frac,
/// followee_frac, miss_in, miss_out, b0.., q0..
inline std::string feature_table_csv(const FeatureContext& ctx, std::span<const NodeId> nodes) {
  const std::size_t k = ctx.params().bins;
  std::string out = "user_id,own_count,own_flag,follower_frac,followee_frac,miss_in,miss_out";
  for (std::size_t i = 0; i < k; ++i) out += ",b" + std::to_string(i);
  for (std::size_t i = 0; i < k; ++i) out += ",q" + std::to_string(i);
  out += '\n';
  for (NodeId u : nodes) {
    const auto f = ctx.assemble(u, FeatureMode::kFull);
    out += csv::escape(f.user_id) + "," + std::to_string(f.own_count) + "," +
           std::to_string(f.own_flag) + "," + detail::format_double(f.follower_frac) + "," +
           detail::format_double(f.followee_frac) + "," + std::to_string(f.miss_in) + "," +
           std::to_string(f.miss_out);
    for (double v : f.bin_hist) out += "," + detail::format_double(v);
    for (double v : f.quantile_hist) out += "," + detail::format_double(v);
    out += '\n';
  }
  return out;
}

}  // namespace hmd
