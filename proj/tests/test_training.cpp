#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hmd/hmd.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using Labels = std::vector<std::uint8_t>;

hmd::FeatureMatrix column(const std::vector<double>& x) {
  hmd::FeatureMatrix X(x.size(), 1);
  for (std::size_t i = 0; i < x.size(); ++i) X(i, 0) = x[i];
  return X;
}

/// {(-1, 0), (+1, 1)} repeated 20 times.
std::pair<hmd::FeatureMatrix, Labels> separable() {
  std::vector<double> x;
  Labels y;
  for (int i = 0; i < 20; ++i) {
    x.insert(x.end(), {-1.0, 1.0});
    y.insert(y.end(), {0, 1});
  }
  return {column(x), y};
}

/// Gaussian features with labels drawn independently at rate `prevalence`.
std::pair<hmd::FeatureMatrix, Labels> noise(std::size_t n, std::size_t d, double prevalence,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution b(prevalence);
  hmd::FeatureMatrix X(n, d);
  Labels y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) X(i, j) = g(rng);
    y[i] = b(rng);
  }
  return {X, y};
}

}  // namespace

// ------------------------------------------------------------------ logreg

TEST(LogReg, SeparableDataFitsPerfectly) {
  const auto [X, y] = separable();
  const auto m = hmd::train_logreg(X, y, 1.0, 0);
  for (std::size_t i = 0; i < X.rows(); ++i) EXPECT_EQ(hmd::predict_label(m, X.row(i)), y[i]);
  EXPECT_GT(hmd::predict_proba(m, std::vector<double>{1.0}), 0.9);
  EXPECT_EQ(m.weights.size(), 1u);
}

TEST(LogReg, RandomLabelsGiveChanceAccuracy) {
  double total = 0.0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto [X, y] = noise(200, 3, 0.5, 100 + r);
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < 200; ++i) (i < 100 ? train : test).push_back(i);
    const auto m = hmd::train_logreg(X.select_rows(train), Labels(y.begin(), y.begin() + 100), 1.0, r);
    double correct = 0;
    for (auto i : test) correct += hmd::predict_label(m, X.row(i)) == y[i];
    total += correct / 100.0;
  }
  const double mean = total / 20.0;
  EXPECT_GE(mean, 0.35);
  EXPECT_LE(mean, 0.65);
}

TEST(LogReg, HeavyPenaltyShrinksWeights) {
  const auto [X, y] = noise(200, 4, 0.5, 3);
  const auto m = hmd::train_logreg(X, y, 1e6, 0);
  for (double w : m.weights) EXPECT_LT(std::abs(w), 1e-2);
}

TEST(LogReg, LossNeverIncreases) {
  const auto [X, y] = noise(150, 5, 0.3, 4);
  const auto m = hmd::train_logreg(X, y, 1.0, 0);
  ASSERT_GT(m.loss_history.size(), 1u);
  for (std::size_t i = 1; i < m.loss_history.size(); ++i) {
    EXPECT_LE(m.loss_history[i], m.loss_history[i - 1]);
  }
  EXPECT_TRUE(m.converged);
}

TEST(LogReg, BitReproducible) {
  const auto [X, y] = noise(120, 6, 0.4, 5);
  const auto a = hmd::train_logreg(X, y, 0.5, 9);
  const auto b = hmd::train_logreg(X, y, 0.5, 9);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.intercept, b.intercept);
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(LogReg, SingleClassRejected) {
  const auto X = column({1, 2, 3});
  try {
    hmd::train_logreg(X, Labels{1, 1, 1}, 1.0, 0);
    FAIL();
  } catch (const hmd::Error& e) {
    EXPECT_EQ(e.kind(), hmd::ErrorKind::kDegenerateLabels);
  }
}

TEST(LogReg, NonFiniteFeatureRejected) {
  const auto X = column({1, std::nan(""), 3});
  try {
    hmd::train_logreg(X, Labels{1, 0, 1}, 1.0, 0);
    FAIL();
  } catch (const hmd::Error& e) {
    EXPECT_EQ(e.kind(), hmd::ErrorKind::kValidation);
  }
}

TEST(LogReg, ConstantColumnGetsZeroWeight) {
  hmd::FeatureMatrix X(4, 2);
  const std::vector<double> x = {-2, -1, 1, 2};
  for (std::size_t i = 0; i < 4; ++i) {
    X(i, 0) = x[i];
    X(i, 1) = 7.0;
  }
  const auto m = hmd::train_logreg(X, Labels{0, 0, 1, 1}, 1.0, 0);
  EXPECT_EQ(m.weights[1], 0.0);
  EXPECT_GT(m.weights[0], 0.0);
}

TEST(PredictProba, ZeroModelIsOneHalf) {
  hmd::TrainedModel m;
  m.weights = {0.0, 0.0};
  EXPECT_EQ(hmd::predict_proba(m, std::vector<double>{3.0, -1.0}), 0.5);
}

TEST(PredictProba, MonotoneInPositiveWeightFeature) {
  hmd::TrainedModel m;
  m.weights = {0.8, -0.3};
  m.intercept = 0.1;
  double prev = 0.0;
  for (int i = -50; i <= 50; ++i) {
    const double p = hmd::predict_proba(m, std::vector<double>{i / 5.0, 1.0});
    EXPECT_GE(p, prev);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    prev = p;
  }
}

TEST(PredictProba, DimensionMismatch) {
  hmd::TrainedModel m;
  m.weights = {1.0};
  try {
    hmd::predict_proba(m, std::vector<double>{1.0, 2.0});
    FAIL();
  } catch (const hmd::Error& e) {
    EXPECT_EQ(e.kind(), hmd::ErrorKind::kDimensionMismatch);
    EXPECT_EQ(hmd::exit_code_for(e.kind()), 1);
  }
}

// ----------------------------------------------------------------- metrics

TEST(Metrics, PerfectPrediction) {
  const auto m = hmd::precision_recall_f1(Labels{1, 0, 1}, Labels{1, 0, 1});
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_FALSE(m.zero_division);
}

TEST(Metrics, AllPositivePrediction) {
  const auto m = hmd::precision_recall_f1(Labels{1, 1, 1, 1}, Labels{1, 0, 0, 0});
  EXPECT_DOUBLE_EQ(m.precision, 0.25);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.f1, 0.4);
}

TEST(Metrics, NoPositivePredictionsFlagged) {
  const auto m = hmd::precision_recall_f1(Labels{0, 0, 0}, Labels{1, 0, 1});
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_TRUE(m.zero_division);
}

TEST(Metrics, LengthMismatch) {
  EXPECT_THROW(hmd::precision_recall_f1(Labels{1}, Labels{1, 0}), hmd::Error);
}

TEST(Metrics, MatchesConfusionOracleAndHarmonicMean) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    Labels p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng() % 2;
      g[i] = rng() % 2;
    }
    const auto m = hmd::precision_recall_f1(p, g);
    const auto o = oracle::confusion_metrics(p, g);
    EXPECT_NEAR(m.precision, o.precision, 1e-12);
    EXPECT_NEAR(m.recall, o.recall, 1e-12);
    EXPECT_NEAR(m.f1, o.f1, 1e-12);
    if (m.precision > 0 && m.recall > 0) {
      EXPECT_NEAR(m.f1, 2 * m.precision * m.recall / (m.precision + m.recall), 1e-15);
    }
  }
}

TEST(PrAuc, PerfectRankingIsOne) {
  EXPECT_DOUBLE_EQ(hmd::pr_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, Labels{1, 1, 0, 0}), 1.0);
}

TEST(PrAuc, SinglePositiveRankedLast) {
  std::vector<double> s;
  Labels g(10, 0);
  for (int i = 0; i < 10; ++i) s.push_back(1.0 - i / 10.0);
  g[9] = 1;
  EXPECT_NEAR(hmd::pr_auc(s, g), 0.1, 1e-15);
}

TEST(PrAuc, TiesFormOneThreshold) {
  // All tied: one threshold at precision 2/4.
  EXPECT_DOUBLE_EQ(hmd::pr_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, Labels{1, 0, 1, 0}), 0.5);
}

TEST(PrAuc, NoPositivesIsError) {
  try {
    hmd::pr_auc(std::vector<double>{0.1, 0.2}, Labels{0, 0});
    FAIL();
  } catch (const hmd::Error& e) {
    EXPECT_EQ(e.kind(), hmd::ErrorKind::kDegenerateLabels);
  }
}

TEST(PrAuc, MatchesEnumerationOracleAndMonotoneInvariance) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(50);
    Labels g(50);
    for (std::size_t i = 0; i < 50; ++i) {
      s[i] = trial % 3 == 0 ? std::round(u(rng) * 8) / 8 : u(rng);
      g[i] = u(rng) < 0.3;
    }
    g[0] = 1;
    const double ap = hmd::pr_auc(s, g);
    EXPECT_NEAR(ap, oracle::average_precision(s, g), 1e-12);
    std::vector<double> t;
    for (double x : s) t.push_back(std::exp(3 * x) - 7);
    EXPECT_NEAR(hmd::pr_auc(t, g), ap, 1e-12);
  }
}

// -------------------------------------------------------------- grid search

TEST(GridSearch, PicksSeparatingThreshold) {
  const std::vector<std::size_t> counts = {0, 0, 5, 7};
  const std::vector<int> grid = {1, 3, 5};
  const auto c = hmd::grid_search_tau_u(counts, Labels{0, 0, 1, 1}, grid);
  // 1, 3 and 5 all separate perfectly; the tie keeps the smallest.
  EXPECT_EQ(c.tau_u, 1);
  EXPECT_EQ(c.f1, 1.0);
  const auto o = oracle::exhaustive_tau_u(counts, Labels{0, 0, 1, 1}, grid);
  EXPECT_EQ(c.tau_u, o.tau);
}

TEST(GridSearch, SeparationOnlyAtFive) {
  const std::vector<std::size_t> counts = {0, 4, 5, 7};
  const std::vector<int> grid = {1, 3, 5};
  const auto c = hmd::grid_search_tau_u(counts, Labels{0, 0, 1, 1}, grid);
  EXPECT_EQ(c.tau_u, 5);
  EXPECT_EQ(c.f1, 1.0);
}

TEST(GridSearch, AllZeroCountsReturnSmallest) {
  const std::vector<std::size_t> counts = {0, 0, 0};
  const std::vector<int> grid = {5, 1, 3};
  const auto c = hmd::grid_search_tau_u(counts, Labels{1, 0, 1}, grid);
  EXPECT_EQ(c.tau_u, 1);
  EXPECT_EQ(c.f1, 0.0);
}

TEST(GridSearch, EmptyGridRejected) {
  EXPECT_THROW(hmd::grid_search_tau_u(std::vector<std::size_t>{1}, Labels{1}, std::vector<int>{}), hmd::Error);
}

TEST(GridSearch, DefaultGridOnSyntheticDataMatchesOracle) {
  hmd::SynthConfig cfg;
  cfg.n_users = 500;
  cfg.posts_min = 1;
  cfg.posts_max = 150;
  const auto d = hmd::generate_dataset(cfg);
  std::vector<std::size_t> counts;
  Labels y;
  for (auto u : d.labeled_nodes()) {
    counts.push_back(hmd::fixed_threshold_count(d.scores[u], 0.5));
    y.push_back(static_cast<std::uint8_t>(d.labels[u]));
  }
  const auto c = hmd::grid_search_tau_u(counts, y, hmd::default_tau_u_grid());
  const auto o = oracle::exhaustive_tau_u(counts, y, hmd::default_tau_u_grid());
  EXPECT_EQ(c.tau_u, o.tau);
  EXPECT_NEAR(c.f1, o.f1, 1e-12);
}

// ------------------------------------------------------------------- folds

TEST(Folds, PartitionAndStratification) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 20 + rng() % 200;
    Labels y(n);
    for (auto& v : y) v = rng() % 4 == 0;
    y[0] = y[1] = y[2] = y[3] = y[4] = 1;
    y[5] = y[6] = y[7] = y[8] = y[9] = 0;
    const auto folds = hmd::stratified_folds(y, 5, trial);
    std::vector<int> seen(n, 0);
    std::size_t positives = 0;
    for (auto v : y) positives += v;
    for (const auto& f : folds) {
      std::size_t pos = 0;
      for (auto i : f) {
        ++seen[i];
        pos += y[i];
      }
      EXPECT_LE(std::abs(static_cast<double>(pos) - static_cast<double>(positives) / 5.0), 1.0);
      EXPECT_GE(pos, 1u);
    }
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(Folds, TooFewUsers) {
  try {
    hmd::stratified_folds(Labels{1, 0, 1}, 5, 0);
    FAIL();
  } catch (const hmd::Error& e) {
    EXPECT_EQ(e.kind(), hmd::ErrorKind::kInsufficientData);
    EXPECT_EQ(hmd::exit_code_for(e.kind()), 3);
  }
}

TEST(Folds, ClassTooSmall) {
  Labels y(20, 0);
  y[0] = 1;
  try {
    hmd::stratified_folds(y, 5, 0);
    FAIL();
  } catch (const hmd::Error& e) {
    EXPECT_EQ(e.kind(), hmd::ErrorKind::kDegenerateLabels);
  }
}

// ---------------------------------------------------------------------- cv

TEST(KFold, PerfectFeatureScoresOne) {
  std::vector<double> x;
  Labels y;
  for (int i = 0; i < 100; ++i) {
    y.push_back(i % 4 == 0);
    x.push_back(y.back() ? 2.0 + i * 0.01 : -2.0 - i * 0.01);
  }
  hmd::CvOptions opt;
  opt.seed = 1;
  const auto r = hmd::kfold_cv(column(x), y, opt);
  EXPECT_DOUBLE_EQ(r.f1.mean, 1.0);
  EXPECT_DOUBLE_EQ(r.f1.std, 0.0);
  EXPECT_EQ(r.per_fold.size(), 5u);
}

TEST(KFold, ShuffledLabelsScoreNearPrevalence) {
  // Balanced classes: an uninformative model predicts positive about half the
  // time, so its expected F1 equals the positive-class prevalence.
  constexpr double kPrevalence = 0.5;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto [X, y] = noise(200, 5, kPrevalence, 1000 + seed);
    std::mt19937_64 rng(seed);
    std::shuffle(y.begin(), y.end(), rng);
    hmd::CvOptions opt;
    opt.seed = seed;
    total += hmd::kfold_cv(X, y, opt).f1.mean;
  }
  EXPECT_NEAR(total / 10.0, kPrevalence, 0.15);
}

TEST(KFold, SameSeedSameReport) {
  const auto [X, y] = noise(150, 4, 0.3, 21);
  hmd::CvOptions opt;
  opt.seed = 5;
  const auto a = hmd::kfold_cv(X, y, opt).to_json().dump();
  opt.threads = 4;
  EXPECT_EQ(a, hmd::kfold_cv(X, y, opt).to_json().dump());
}

TEST(KFold, MetricsInUnitInterval) {
  const auto [X, y] = noise(100, 3, 0.3, 22);
  const auto r = hmd::kfold_cv(X, y, {});
  for (const auto& f : r.per_fold) {
    for (double v : {f.precision, f.recall, f.f1, f.pr_auc}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(KFold, ReportSerialization) {
  const auto [X, y] = noise(60, 2, 0.5, 23);
  const auto r = hmd::kfold_cv(X, y, {}, "demo");
  const auto csv = r.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n') + 1), hmd::EvalReport::csv_header());
  EXPECT_EQ(csv.substr(csv.find('\n') + 1, 5), "demo,");
  const auto j = r.to_json();
  EXPECT_EQ(j["per_fold"].size(), 5u);
  EXPECT_EQ(j["folds"], 5);
  EXPECT_TRUE(j["f1"].contains("std"));
}

TEST(KFold, SummaryUsesPopulationStd) {
  const std::vector<double> v = {1.0, 3.0};
  const auto s = hmd::summarize(v);
  EXPECT_EQ(s.mean, 2.0);
  EXPECT_EQ(s.std, 1.0);
}

TEST(FixedThresholdCv, RecordsChosenThresholds) {
  std::vector<std::size_t> counts;
  Labels y;
  for (int i = 0; i < 100; ++i) {
    y.push_back(i % 4 == 0);
    counts.push_back(y.back() ? 6 + i % 3 : i % 4);
  }
  hmd::CvOptions opt;
  const auto r = hmd::kfold_cv_fixed_threshold(counts, y, opt);
  EXPECT_DOUBLE_EQ(r.f1.mean, 1.0);
  for (const auto& f : r.per_fold) {
    ASSERT_TRUE(f.tau_u.has_value());
    EXPECT_EQ(*f.tau_u, 5);
  }
}

TEST(EvaluateMode, TooFewLabeledUsers) {
  const auto edges = testutil::edges({{"a", "b"}, {"b", "c"}});
  std::vector<hmd::UserLabel> labels = {{"a", 1}, {"b", 0}};
  const auto d = hmd::make_dataset(edges, std::vector<hmd::PostScore>{}, labels);
  try {
    hmd::evaluate_mode(d, hmd::FeatureMode::kFull, {}, {});
    FAIL();
  } catch (const hmd::Error& e) {
    EXPECT_EQ(hmd::exit_code_for(e.kind()), 3);
  }
}

TEST(EvaluateMode, EasySyntheticDataFullModeAboveNinety) {
  hmd::SynthConfig cfg;
  cfg.n_users = 600;
  cfg.score_dist_hateful = {8.0, 2.0};
  const auto d = hmd::generate_dataset(cfg);
  const auto r = hmd::evaluate_mode(d, hmd::FeatureMode::kFull, {}, {});
  EXPECT_GT(r.f1.mean, 0.9);
  EXPECT_EQ(r.mode, "FULL");
  EXPECT_EQ(r.hyperparameters["bins"], 10);
}
