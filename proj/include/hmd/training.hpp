#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmd/errors.hpp"
#include "hmd/features.hpp"
#include "hmd/matrix.hpp"
#include "hmd/parallel.hpp"
#include "hmd/random.hpp"
#include "hmd/utterance.hpp"

namespace hmd {

// ---------------------------------------------------------------- metrics

struct BinaryMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Some ratio had a zero denominator and was reported as 0.
  bool zero_division = false;
};

inline BinaryMetrics precision_recall_f1(std::span<const std::uint8_t> pred,
                                         std::span<const std::uint8_t> gold) {
  if (pred.size() != gold.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "prediction and gold lengths differ");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && gold[i]) ++tp;
    if (pred[i] && !gold[i]) ++fp;
    if (!pred[i] && gold[i]) ++fn;
  }
  BinaryMetrics m;
  if (tp + fp > 0) {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  } else {
    m.zero_division = true;
  }
  if (tp + fn > 0) {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  } else {
    m.zero_division = true;
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.zero_division = true;
  }
  return m;
}

/// Average precision: sum over thresholds (distinct scores, descending) of
/// precision times the recall gained at that threshold. Tied scores form a
/// single threshold.
inline double pr_auc(std::span<const double> scores, std::span<const std::uint8_t> gold) {
  if (scores.size() != gold.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "score and gold lengths differ");
  }
  const auto positives = static_cast<std::size_t>(std::count_if(
      gold.begin(), gold.end(), [](std::uint8_t g) { return g != 0; }));
  if (positives == 0) throw Error(ErrorKind::kDegenerateLabels, "PR-AUC needs a positive example");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t group_tp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_tp += gold[order[j]] != 0;
      ++j;
    }
    seen += j - i;
    tp += group_tp;
    if (group_tp > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(seen);
      ap += precision * static_cast<double>(group_tp) / static_cast<double>(positives);
    }
    i = j;
  }
  return ap;
}

inline const std::vector<int>& default_tau_u_grid() {
  static const std::vector<int> grid = {1, 3, 5, 10, 20, 50, 100};
  return grid;
}

struct ThresholdChoice {
  int tau_u = 1;
  double f1 = 0.0;
};

/// tau_u from `grid` maximizing F1 of (count >= tau_u); ties go to the
/// smaller threshold.
inline ThresholdChoice grid_search_tau_u(std::span<const std::size_t> counts,
                                         std::span<const std::uint8_t> gold,
                                         std::span<const int> grid) {
  if (grid.empty()) throw Error(ErrorKind::kValidation, "empty tau_u grid");
  std::vector<int> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  std::optional<ThresholdChoice> best;
  std::vector<std::uint8_t> pred(counts.size());
  for (int tau : sorted) {
    for (std::size_t i = 0; i < counts.size(); ++i) {
      pred[i] = static_cast<std::uint8_t>(fixed_threshold_classify(counts[i], tau));
    }
    const double f1 = precision_recall_f1(pred, gold).f1;
    if (!best || f1 > best->f1) best = ThresholdChoice{tau, f1};
  }
  return *best;
}

// ------------------------------------------------------ logistic regression

struct LogRegOptions {
  std::size_t max_iterations = 5000;
  double learning_rate = 0.1;
  /// Converged when every gradient component is below this.
  double tolerance = 1e-6;
  /// z-score features on the training rows before fitting.
  bool standardize = true;
};

/// Linear model over raw feature space: p = logistic(intercept + w.x).
struct TrainedModel {
  std::string mode;
  std::vector<double> weights;
  double intercept = 0.0;
  double decision_threshold = 0.5;
  double l2 = 1.0;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Objective after each accepted step, in the fitted (standardized) space.
  std::vector<double> loss_history;
};

inline double predict_proba(const TrainedModel& m, std::span<const double> x) {
  if (x.size() != m.weights.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "model expects " + std::to_string(m.weights.size()) +
                                                   " features, got " + std::to_string(x.size()));
  }
  double z = m.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) z += m.weights[j] * x[j];
  return logistic(z);
}

inline int predict_label(const TrainedModel& m, std::span<const double> x) {
  return predict_proba(m, x) >= m.decision_threshold ? 1 : 0;
}

namespace detail {

inline double log1p_exp(double z) noexcept {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace detail

/// L2-regularized logistic regression by full-batch gradient descent on
///   (1/n) sum NLL + (l2 / 2n) |w|^2      (intercept unpenalized).
/// A step is accepted only if it lowers the objective; otherwise the
/// learning rate is halved. Starts from zero, so the fit is deterministic.
inline TrainedModel train_logreg(const FeatureMatrix& X, std::span<const std::uint8_t> y,
                                 double l2, std::uint64_t seed, const LogRegOptions& opt = {}) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  if (n != y.size()) throw Error(ErrorKind::kDimensionMismatch, "feature rows and labels differ");
  if (n < 2) throw Error(ErrorKind::kInsufficientData, "need at least 2 training rows");
  const auto pos = std::count_if(y.begin(), y.end(), [](std::uint8_t v) { return v != 0; });
  if (pos == 0 || static_cast<std::size_t>(pos) == n) {
    throw Error(ErrorKind::kDegenerateLabels, "training labels contain a single class");
  }
  if (!(l2 >= 0.0)) throw Error(ErrorKind::kValidation, "l2 must be non-negative");

  std::vector<double> mean(d, 0.0), scale(d, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double v = X(i, j);
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::kValidation, "non-finite feature at row " + std::to_string(i) +
                                                ", column " + std::to_string(j));
      }
      mean[j] += v;
    }
  }
  if (opt.standardize) {
    for (auto& m : mean) m /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) var[j] += (X(i, j) - mean[j]) * (X(i, j) - mean[j]);
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double sd = std::sqrt(var[j] / static_cast<double>(n));
      scale[j] = sd > 1e-12 ? sd : 0.0;
    }
  } else {
    std::fill(mean.begin(), mean.end(), 0.0);
  }
  FeatureMatrix Z(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      Z(i, j) = scale[j] == 0.0 ? 0.0 : (X(i, j) - mean[j]) / scale[j];
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> w(d, 0.0), grad(d), trial(d);
  double b = 0.0;

  auto objective = [&](const std::vector<double>& wv, double bv) {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = bv;
      const auto row = Z.row(i);
      for (std::size_t j = 0; j < d; ++j) z += wv[j] * row[j];
      loss += detail::log1p_exp(z) - (y[i] ? z : 0.0);
    }
    double penalty = 0.0;
    for (double v : wv) penalty += v * v;
    return loss * inv_n + 0.5 * l2 * inv_n * penalty;
  };

  TrainedModel model;
  model.l2 = l2;
  model.seed = seed;
  double loss = objective(w, b);
  double lr = opt.learning_rate;
  bool need_grad = true;
  double grad_b = 0.0;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    model.iterations = it + 1;
    if (need_grad) {
      std::fill(grad.begin(), grad.end(), 0.0);
      grad_b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double z = b;
        const auto row = Z.row(i);
        for (std::size_t j = 0; j < d; ++j) z += w[j] * row[j];
        const double r = logistic(z) - (y[i] ? 1.0 : 0.0);
        grad_b += r;
        for (std::size_t j = 0; j < d; ++j) grad[j] += r * row[j];
      }
      grad_b *= inv_n;
      double max_abs = std::abs(grad_b);
      for (std::size_t j = 0; j < d; ++j) {
        grad[j] = grad[j] * inv_n + l2 * inv_n * w[j];
        max_abs = std::max(max_abs, std::abs(grad[j]));
      }
      if (max_abs < opt.tolerance) {
        model.converged = true;
        break;
      }
    }
    for (std::size_t j = 0; j < d; ++j) trial[j] = w[j] - lr * grad[j];
    const double trial_b = b - lr * grad_b;
    const double trial_loss = objective(trial, trial_b);
    if (trial_loss < loss) {
      w.swap(trial);
      b = trial_b;
      loss = trial_loss;
      model.loss_history.push_back(loss);
      need_grad = true;
    } else {
      lr *= 0.5;
      need_grad = false;
      if (lr < 1e-15) {
        model.converged = true;  // no descent direction left at double precision
        break;
      }
    }
  }

  // Fold the standardization into raw-space coefficients.
  model.weights.assign(d, 0.0);
  model.intercept = b;
  for (std::size_t j = 0; j < d; ++j) {
    if (scale[j] == 0.0) continue;
    model.weights[j] = w[j] / scale[j];
    model.intercept -= w[j] * mean[j] / scale[j];
  }
  return model;
}

// ---------------------------------------------------------- cross-validation

struct CvOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  double l2 = 1.0;
  std::size_t threads = 1;
  std::vector<int> tau_u_grid = default_tau_u_grid();
  /// Share of each training fold held out for threshold search.
  double validation_fraction = 0.2;
  LogRegOptions logreg;
};

/// Stratified assignment: each class is shuffled with a seeded RNG, then the
/// positives followed by the negatives are dealt round-robin to folds.
inline std::vector<std::vector<std::size_t>> stratified_folds(std::span<const std::uint8_t> y,
                                                              std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::kValidation, "need at least 2 folds");
  if (y.size() < k) {
    throw Error(ErrorKind::kInsufficientData, "only " + std::to_string(y.size()) +
                                                  " labeled users for " + std::to_string(k) +
                                                  " folds");
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? pos : neg).push_back(i);
  if (pos.size() < k || neg.size() < k) {
    throw Error(ErrorKind::kDegenerateLabels,
                "each class needs at least one user per fold (" + std::to_string(pos.size()) +
                    " positive, " + std::to_string(neg.size()) + " negative)");
  }
  Rng rng(derive_seed(seed, "folds"));
  shuffle(pos.begin(), pos.end(), rng);
  shuffle(neg.begin(), neg.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (auto idx : pos) folds[next++ % k].push_back(idx);
  for (auto idx : neg) folds[next++ % k].push_back(idx);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

/// Seeded stratified split of `indices` into (fit, validation).
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    std::span<const std::size_t> indices, std::span<const std::uint8_t> y, double fraction,
    std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (auto i : indices) (y[i] ? pos : neg).push_back(i);
  Rng rng(seed);
  shuffle(pos.begin(), pos.end(), rng);
  shuffle(neg.begin(), neg.end(), rng);
  std::vector<std::size_t> fit, val;
  for (auto* group : {&pos, &neg}) {
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(group->size())));
    if (take == 0 && group->size() >= 2) take = 1;
    for (std::size_t i = 0; i < group->size(); ++i) (i < take ? val : fit).push_back((*group)[i]);
  }
  std::sort(fit.begin(), fit.end());
  std::sort(val.begin(), val.end());
  return {fit, val};
}

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t test_positives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double pr_auc = 0.0;
  bool zero_division = false;
  std::optional<int> tau_u;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
};

/// Population standard deviation (ddof = 0).
inline MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

struct EvalReport {
  std::string method;
  std::string mode;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::vector<FoldResult> per_fold;
  MetricSummary precision, recall, f1, pr_auc;

  void finalize() {
    auto collect = [&](double FoldResult::*field) {
      std::vector<double> v;
      for (const auto& f : per_fold) v.push_back(f.*field);
      return summarize(v);
    };
    precision = collect(&FoldResult::precision);
    recall = collect(&FoldResult::recall);
    f1 = collect(&FoldResult::f1);
    pr_auc = collect(&FoldResult::pr_auc);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["method"] = method;
    j["mode"] = mode;
    j["folds"] = folds;
    j["seed"] = seed;
    j["hyperparameters"] = hyperparameters;
    auto summary = [](const MetricSummary& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}}; };
    j["precision"] = summary(precision);
    j["recall"] = summary(recall);
    j["f1"] = summary(f1);
    j["pr_auc"] = summary(pr_auc);
    j["per_fold"] = nlohmann::json::array();
    for (const auto& f : per_fold) {
      nlohmann::json jf = {{"fold", f.fold},
                           {"train_size", f.train_size},
                           {"test_size", f.test_size},
                           {"test_positives", f.test_positives},
                           {"precision", f.precision},
                           {"recall", f.recall},
                           {"f1", f.f1},
                           {"pr_auc", f.pr_auc},
                           {"zero_division", f.zero_division}};
      if (f.tau_u) jf["tau_u"] = *f.tau_u;
      j["per_fold"].push_back(std::move(jf));
    }
    return j;
  }

  static std::string csv_header() {
    return "method,precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std,"
           "prauc_mean,prauc_std\n";
  }

  std::string csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", precision.mean,
                  precision.std, recall.mean, recall.std, f1.mean, f1.std, pr_auc.mean, pr_auc.std);
    return csv::escape(method) + "," + buf + "\n";
  }

  std::string to_csv() const { return csv_header() + csv_row(); }
};

namespace detail {

inline FoldResult score_fold(std::span<const std::uint8_t> pred, std::span<const double> scores,
                             std::span<const std::uint8_t> gold) {
  FoldResult r;
  const auto m = precision_recall_f1(pred, gold);
  r.precision = m.precision;
  r.recall = m.recall;
  r.f1 = m.f1;
  r.zero_division = m.zero_division;
  r.pr_auc = pr_auc(scores, gold);
  r.test_size = gold.size();
  r.test_positives = static_cast<std::size_t>(
      std::count_if(gold.begin(), gold.end(), [](std::uint8_t g) { return g != 0; }));
  return r;
}

inline std::vector<std::uint8_t> gather(std::span<const std::uint8_t> y,
                                        std::span<const std::size_t> idx) {
  std::vector<std::uint8_t> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(y[i]);
  return out;
}

inline std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> sorted) {
  std::vector<std::size_t> out;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (k < sorted.size() && sorted[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace detail

/// k-fold CV of logistic regression on the rows of X.
inline EvalReport kfold_cv(const FeatureMatrix& X, std::span<const std::uint8_t> y,
                           const CvOptions& opt, std::string method = "logreg") {
  if (X.rows() != y.size()) throw Error(ErrorKind::kDimensionMismatch, "feature rows and labels differ");
  const auto folds = stratified_folds(y, opt.folds, opt.seed);
  EvalReport report;
  report.method = std::move(method);
  report.folds = opt.folds;
  report.seed = opt.seed;
  report.hyperparameters = {{"l2", opt.l2},
                            {"decision_threshold", 0.5},
                            {"max_iterations", opt.logreg.max_iterations},
                            {"learning_rate", opt.logreg.learning_rate},
                            {"standardize", opt.logreg.standardize}};
  report.per_fold.resize(folds.size());
  parallel_for(folds.size(), opt.threads, [&](std::size_t f) {
    const auto& test = folds[f];
    const auto train = detail::complement(y.size(), test);
    const auto ytrain = detail::gather(y, train);
    const auto model = train_logreg(X.select_rows(train), ytrain, opt.l2,
                                    derive_seed(opt.seed, "logreg", f), opt.logreg);
    std::vector<double> proba;
    std::vector<std::uint8_t> pred;
    for (auto i : test) {
      proba.push_back(predict_proba(model, X.row(i)));
      pred.push_back(proba.back() >= model.decision_threshold);
    }
    auto r = detail::score_fold(pred, proba, detail::gather(y, test));
    r.fold = f;
    r.train_size = train.size();
    report.per_fold[f] = r;
  });
  report.finalize();
  return report;
}

/// k-fold CV of the fixed-threshold rule count >= tau_u, with tau_u picked
/// per fold on a stratified validation split of the training fold.
inline EvalReport kfold_cv_fixed_threshold(std::span<const std::size_t> counts,
                                           std::span<const std::uint8_t> y, const CvOptions& opt) {
  if (counts.size() != y.size()) throw Error(ErrorKind::kDimensionMismatch, "counts and labels differ");
  const auto folds = stratified_folds(y, opt.folds, opt.seed);
  EvalReport report;
  report.method = "fixed_threshold";
  report.mode = "F";
  report.folds = opt.folds;
  report.seed = opt.seed;
  report.hyperparameters = {{"tau_u_grid", opt.tau_u_grid},
                            {"validation_fraction", opt.validation_fraction}};
  report.per_fold.resize(folds.size());
  parallel_for(folds.size(), opt.threads, [&](std::size_t f) {
    const auto& test = folds[f];
    const auto train = detail::complement(y.size(), test);
    const auto [fit, val] = stratified_split(train, y, opt.validation_fraction,
                                             derive_seed(opt.seed, "inner-split", f));
    std::vector<std::size_t> val_counts;
    for (auto i : val) val_counts.push_back(counts[i]);
    const auto choice = grid_search_tau_u(val_counts, detail::gather(y, val), opt.tau_u_grid);
    std::vector<double> scores;
    std::vector<std::uint8_t> pred;
    for (auto i : test) {
      scores.push_back(static_cast<double>(counts[i]));
      pred.push_back(static_cast<std::uint8_t>(fixed_threshold_classify(counts[i], choice.tau_u)));
    }
    auto r = detail::score_fold(pred, scores, detail::gather(y, test));
    r.fold = f;
    r.train_size = train.size();
    r.tau_u = choice.tau_u;
    report.per_fold[f] = r;
  });
  report.finalize();
  return report;
}

/// Largest-component protocol: restrict to the LCC, take its labeled users,
/// build `mode` features and cross-validate.
inline EvalReport evaluate_mode(const Dataset& dataset, FeatureMode mode,
                                const FeatureParams& params, const CvOptions& opt) {
  const Dataset lcc = restrict_to_lcc(dataset);
  const auto nodes = lcc.labeled_nodes();
  std::vector<std::uint8_t> y;
  for (auto u : nodes) y.push_back(static_cast<std::uint8_t>(lcc.labels[u]));
  const FeatureContext ctx(lcc, params, opt.threads);

  EvalReport report;
  if (mode == FeatureMode::kF) {
    std::vector<std::size_t> counts;
    for (auto u : nodes) counts.push_back(ctx.counts()[u]);
    report = kfold_cv_fixed_threshold(counts, y, opt);
  } else {
    report = kfold_cv(ctx.matrix(nodes, mode, opt.threads), y, opt,
                      "logreg_" + std::string(to_string(mode)));
    report.mode = std::string(to_string(mode));
  }
  report.hyperparameters["tau_t"] = params.tau_t;
  if (mode != FeatureMode::kF) report.hyperparameters["tau_u"] = params.tau_u;
  report.hyperparameters["bins"] = params.bins;
  report.hyperparameters["labeled_users"] = nodes.size();
  return report;
}

}  // namespace hmd
