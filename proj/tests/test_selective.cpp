#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "alea/aleatoric.hpp"
#include "alea/eval/selective.hpp"

using namespace alea;
using namespace alea::eval;

namespace {

// Records with y_true = 0, so |error| = |y_hat|.
std::vector<PredictionRecord> random_records(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(0.2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<PredictionRecord> out(n);
  for (auto& r : out) {
    r.y_hat = e(rng) * (u(rng) < 0.5 ? -1 : 1);
    r.y_true = 0.0;
    r.score = u(rng);
  }
  return out;
}

std::vector<PredictionRecord> oracle_scored(std::vector<PredictionRecord> rs) {
  for (auto& r : rs) r.score = r.abs_error();
  return rs;
}

}  // namespace

TEST(MaeAtThreshold, AboveMaxScoreIsPlainMae) {
  std::mt19937_64 rng(1);
  const auto rs = random_records(500, rng);
  std::vector<double> y, p;
  double max_score = 0.0;
  for (const auto& r : rs) {
    y.push_back(r.y_true);
    p.push_back(r.y_hat);
    max_score = std::max(max_score, r.score);
  }
  const auto inf = mae_at_threshold(rs, std::numeric_limits<double>::infinity());
  EXPECT_EQ(*inf.mae, mae_loss(y, p));
  EXPECT_EQ(inf.keep, 1.0);
  const auto above = mae_at_threshold(rs, std::nextafter(max_score, 2.0));
  EXPECT_NEAR(*above.mae, mae_loss(y, p), 1e-12);
  EXPECT_EQ(above.n_kept, rs.size());
}

TEST(MaeAtThreshold, HandExample) {
  const std::vector<PredictionRecord> rs{{1.0, 0.1, 0.0}, {9.0, 0.9, 0.0}};
  const auto r = mae_at_threshold(rs, 0.5);
  EXPECT_EQ(*r.mae, 1.0);
  EXPECT_EQ(r.keep, 0.5);
}

TEST(MaeAtThreshold, StrictInequalityCanKeepNothing) {
  const std::vector<PredictionRecord> rs{{1.0, 0.1, 0.0}, {9.0, 0.9, 0.0}};
  const auto r = mae_at_threshold(rs, 0.1);
  EXPECT_FALSE(r.mae.has_value());
  EXPECT_EQ(r.keep, 0.0);
  EXPECT_THROW(mae_at_threshold(std::vector<PredictionRecord>{}, 1.0), DomainError);
}

TEST(ErrorKeepCurve, OracleScoreCurveIsNonDecreasing) {
  std::mt19937_64 rng(2);
  const auto rs = oracle_scored(random_records(2000, rng));
  const auto curve = error_keep_curve(rs, 100);
  ASSERT_LE(curve.points.size(), 100u);
  double prev = -1.0;
  for (const auto& p : curve.points) {
    if (!p.mae) continue;
    EXPECT_GE(*p.mae, prev - 1e-12);
    prev = *p.mae;
  }
}

TEST(ErrorKeepCurve, KeepNonDecreasingAndEndpointIsPlainMae) {
  std::mt19937_64 rng(3);
  for (std::size_t n_points : {2u, 7u, 50u, 5000u}) {
    const auto rs = random_records(1000, rng);
    const auto curve = error_keep_curve(rs, n_points);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      EXPECT_GE(curve.points[i].keep_fraction, curve.points[i - 1].keep_fraction);
    }
    EXPECT_EQ(curve.points.back().keep_fraction, 1.0);
    EXPECT_NEAR(*curve.points.back().mae, plain_mae(rs), 1e-12);
    EXPECT_EQ(curve.points.front().n_kept, 0u);
    EXPECT_EQ(curve.n_total, 1000u);
  }
}

TEST(ErrorKeepCurve, ConstantScoreDegenerates) {
  std::mt19937_64 rng(4);
  auto rs = random_records(100, rng);
  for (auto& r : rs) r.score = 0.7;
  const auto curve = error_keep_curve(rs, 50);
  ASSERT_EQ(curve.points.size(), 2u);
  EXPECT_EQ(curve.points[0].keep_fraction, 0.0);
  EXPECT_FALSE(curve.points[0].mae.has_value());
  EXPECT_EQ(curve.points[1].keep_fraction, 1.0);
  EXPECT_NEAR(*curve.points[1].mae, plain_mae(rs), 1e-12);
}

TEST(ErrorKeepCurve, IndependentScoreIsFlat) {
  std::mt19937_64 rng(5);
  const auto rs = random_records(10000, rng);
  const double full = plain_mae(rs);
  const auto curve = error_keep_curve(rs, 20);
  for (const auto& p : curve.points) {
    if (p.n_kept < 1000) continue;
    // sd(|e|) = mean for exponential errors; 5 standard errors at n >= 1000.
    EXPECT_NEAR(*p.mae, full, 5.0 * full / std::sqrt(static_cast<double>(p.n_kept)));
  }
}

TEST(ErrorKeepCurve, Errors) {
  std::mt19937_64 rng(1);
  const auto rs = random_records(5, rng);
  EXPECT_THROW(error_keep_curve(rs, 1), DomainError);
  EXPECT_THROW(error_keep_curve(std::vector<PredictionRecord>{}, 5), DomainError);
}

TEST(MaeAtKeep, FullKeepIsPlainMae) {
  std::mt19937_64 rng(6);
  const auto rs = random_records(333, rng);
  EXPECT_NEAR(mae_at_keep(rs, 1.0), plain_mae(rs), 1e-12);
}

TEST(MaeAtKeep, HalfOfFourRecords) {
  const std::vector<PredictionRecord> rs{{4.0, 0.4, 0.0}, {1.0, 0.1, 0.0}, {3.0, 0.3, 0.0}, {2.0, 0.2, 0.0}};
  EXPECT_EQ(mae_at_keep(rs, 0.5), 1.5);
}

TEST(MaeAtKeep, OracleQuarterIsMeanOfSmallestErrors) {
  std::mt19937_64 rng(7);
  const auto rs = oracle_scored(random_records(1000, rng));
  std::vector<double> errs;
  for (const auto& r : rs) errs.push_back(r.abs_error());
  std::sort(errs.begin(), errs.end());
  double expected = 0.0;
  for (int i = 0; i < 250; ++i) expected += errs[i];
  expected /= 250.0;
  EXPECT_NEAR(mae_at_keep(rs, 0.25), expected, 1e-12);
}

TEST(MaeAtKeep, KeepCountUsesCeilingWithoutFloatingNoise) {
  EXPECT_EQ(keep_count(0.41, 100), 41u);
  EXPECT_EQ(keep_count(0.25, 10), 3u);
  EXPECT_EQ(keep_count(0.995, 1000), 995u);
  EXPECT_EQ(keep_count(1e-9, 10), 1u);
  EXPECT_EQ(keep_count(1.0, 7), 7u);
}

TEST(MaeAtKeep, TiesBrokenByInputOrder) {
  const std::vector<PredictionRecord> rs{{5.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {3.0, 1.0, 0.0}};
  EXPECT_EQ(mae_at_keep(rs, 1.0 / 3.0), 5.0);
}

TEST(MaeAtKeep, Errors) {
  const std::vector<PredictionRecord> rs{{1.0, 0.0, 0.0}};
  EXPECT_THROW(mae_at_keep(rs, 0.0), DomainError);
  EXPECT_THROW(mae_at_keep(rs, 1.5), DomainError);
  EXPECT_THROW(mae_at_keep(std::vector<PredictionRecord>{}, 0.5), DomainError);
}

TEST(MaeAtKeep, PermutationInvariantForDistinctScores) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto rs = random_records(200, rng);
    std::vector<double> before;
    for (double k : kKeepGrid) before.push_back(mae_at_keep(rs, k));
    std::shuffle(rs.begin(), rs.end(), rng);
    for (std::size_t i = 0; i < kKeepGrid.size(); ++i) {
      EXPECT_NEAR(mae_at_keep(rs, kKeepGrid[i]), before[i], 1e-12);
    }
  }
}

TEST(MaeAtKeep, StrictlyIncreasingScoreTransformIsExact) {
  std::mt19937_64 rng(9);
  const auto rs = random_records(1000, rng);
  auto transformed = rs;
  for (auto& r : transformed) r.score = std::exp(3.0 * r.score) + 2.0;
  for (double k : kKeepGrid) EXPECT_EQ(mae_at_keep(rs, k), mae_at_keep(transformed, k));
}

TEST(Spearman, PerfectAndReversedRankings) {
  std::mt19937_64 rng(10);
  auto rs = oracle_scored(random_records(500, rng));
  EXPECT_NEAR(*error_score_correlation(rs).spearman_rho, 1.0, 1e-12);
  for (auto& r : rs) r.score = -r.score;
  EXPECT_NEAR(*error_score_correlation(rs).spearman_rho, -1.0, 1e-12);
}

TEST(Spearman, IndependentScoresNearZero) {
  std::mt19937_64 rng(11);
  const auto rs = random_records(10000, rng);
  const auto res = error_score_correlation(rs);
  EXPECT_LT(std::abs(*res.spearman_rho), 0.05);
  EXPECT_EQ(res.scatter.size(), 10000u);
}

TEST(Spearman, TiesUseAverageRanksAndConstantIsUndefined) {
  const std::vector<double> a{1, 2, 2, 3};
  EXPECT_EQ(average_ranks(a), (std::vector<double>{1, 2.5, 2.5, 4}));
  const std::vector<double> b{4, 3, 2, 1};
  EXPECT_NEAR(*spearman(a, b), -1.0 * (4.5 / std::sqrt(4.5 * 5.0)), 1e-12);
  const std::vector<double> c{7, 7, 7, 7};
  EXPECT_FALSE(spearman(a, c).has_value());
  const std::vector<PredictionRecord> two{{1, 0, 0}, {2, 1, 0}};
  EXPECT_THROW(error_score_correlation(two), DomainError);
}

TEST(CsvOutputs, CurveAndScatterFormats) {
  const std::vector<PredictionRecord> rs{{1.0, 0.1, 0.0}, {9.0, 0.9, 0.0}};
  std::ostringstream curve;
  write_curve_csv(curve, error_keep_curve(rs, 10));
  EXPECT_EQ(curve.str().substr(0, curve.str().find('\n')), "threshold,keep_fraction,mae,n_kept");
  EXPECT_NE(curve.str().find("0.1,0,nan,0"), std::string::npos);
  std::ostringstream scatter;
  write_scatter_csv(scatter, error_score_correlation(std::vector<PredictionRecord>{{1, 0.5, 0}, {2, 1, 0}, {4, 2, 1}}).scatter);
  EXPECT_EQ(scatter.str(), "abs_error,score\n1,0.5\n2,1\n3,2\n");
}
