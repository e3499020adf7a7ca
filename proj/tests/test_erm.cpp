#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ltts/analytic_families.hpp"
#include "ltts/erm.hpp"
#include "ltts/feature_map.hpp"
#include "ltts/quantum_oracle.hpp"
#include "ltts/rng.hpp"

using namespace ltts;

namespace {

// Black box whose values are a fixed TT on the patch.
BlackBox planted_box(const TTTensor& tt, const PatchSpec& patch) {
  return BlackBox(patch.order(), [tt, patch](std::span<const double> x) { return tt_eval(tt, normalize(x, patch)); });
}

} // namespace

TEST(SamplePatch, PointsInsidePatch) {
  PatchSpec patch{{0.5, -0.2, 1.0}, 0.1, 2, 1};
  auto g = as_black_box(ones_instance(FamilyKind::ExpSum, 3));
  auto data = sample_patch(g, patch, 500, NoiseModel::none(), 3);
  ASSERT_EQ(data.size(), 500u);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_LE(std::abs(data.point(i)[k] - patch.x0[k]), patch.r);
      EXPECT_LE(std::abs(data.normalized(i)[k]), 1.0);
    }
    EXPECT_EQ(data.y[i], g(data.point(i)));
  }
  auto again = sample_patch(g, patch, 500, NoiseModel::none(), 3);
  EXPECT_EQ(again.x, data.x);
  EXPECT_THROW(sample_patch(g, patch, 0, NoiseModel::none(), 3), DomainError);
}

TEST(SamplePatch, UniformNoiseMeanAndBound) {
  PatchSpec patch{{0.0}, 1.0, 2, 1};
  BlackBox g(1, [](std::span<const double>) { return 0.0; });
  const double sigma = 0.5;
  const std::size_t n = 100000;
  auto data = sample_patch(g, patch, n, NoiseModel::uniform(sigma), 4);
  double sum = 0.0, sq = 0.0;
  for (double y : data.y) {
    EXPECT_LE(std::abs(y), sigma);
    sum += y;
    sq += y * y;
  }
  EXPECT_LT(std::abs(sum / n), 3 * sigma / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(sq / n, sigma * sigma / 3, 0.01 * sigma * sigma);
}

TEST(SamplePatch, ShotNoiseLabelsBounded) {
  auto model = QcnnModel::random(4, 2);
  auto g = as_black_box(model, 4);
  PatchSpec patch{{1.0, 1.0, 1.0, 1.0}, 0.2, 2, 1};
  auto data = sample_patch(g, patch, 300, NoiseModel::shot_noise(50), 5);
  for (double y : data.y) {
    EXPECT_LE(std::abs(y), 1.0);
    // 2k/50 - 1 lies on the grid of multiples of 1/25
    EXPECT_NEAR(std::round((y + 1) * 25) / 25 - 1, y, 1e-12);
  }
}

TEST(ERMConfig, Validation) {
  ERMConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.max_sweeps = 0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = {};
  cfg.rel_tol = 0.0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = {};
  cfg.ridge = -1.0;
  EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(AlsFit, PlantedModelRecovery) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    PatchSpec patch{{0.0, 0.0, 0.0, 0.0}, 1.0, 2, 2};
    std::vector<std::size_t> ranks{2, 2, 2};
    auto rng = substream(seed, "planted");
    auto truth = random_tt(4, 3, ranks, 1.0, rng);
    auto g = planted_box(truth, patch);
    auto train = sample_patch(g, patch, 20 * param_count(truth), NoiseModel::none(), seed);
    ERMConfig cfg;
    cfg.chi = 2;
    cfg.seed = seed;
    cfg.max_sweeps = 100;
    cfg.ridge = 0.0;
    auto fit = als_fit(train, cfg);
    EXPECT_LE(fit.report.final_risk, 1e-12);
    auto test_points = sample_uniform_patch(patch, 2000, seed + 100);
    EXPECT_LE(clean_rmse(fit.tt, g, patch, test_points), 1e-6) << "seed " << seed;
  }
}

TEST(AlsFit, SinglePointInterpolates) {
  PatchSpec patch{{0.0, 0.0, 0.0}, 1.0, 2, 1};
  auto g = as_black_box(draw_instance(FamilyKind::Trig, 3, 2, 1));
  auto data = sample_patch(g, patch, 1, NoiseModel::none(), 1);
  ERMConfig cfg;
  cfg.chi = 1;
  auto fit = als_fit(data, cfg);
  // only the 1e-10 ridge keeps the residual from vanishing
  EXPECT_LE(fit.report.final_risk, 1e-16 * data.y[0] * data.y[0]);
}

TEST(AlsFit, HalfSweepsAreMonotone) {
  PatchSpec patch{{0.0, 0.0, 0.0, 0.0}, 0.8, 2, 3};
  auto g = as_black_box(draw_instance(FamilyKind::Gauss, 4, 2, 5));
  auto data = sample_patch(g, patch, 400, NoiseModel::uniform(0.05), 6);
  ERMConfig cfg;
  cfg.chi = 3;
  cfg.seed = 7;
  cfg.rel_tol = 1e-14;
  auto fit = als_fit(data, cfg);
  const auto& h = fit.report.half_sweep_risks;
  ASSERT_GT(h.size(), 3u);
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1] + 1e-12) << "step " << i;
  EXPECT_EQ(fit.report.sweep_risks.size(), fit.report.sweeps + 1);
  EXPECT_DOUBLE_EQ(fit.report.final_risk, empirical_risk(fit.tt, data));
  EXPECT_NEAR(fit.report.norm, tt_norm(fit.tt), 1e-12 * fit.report.norm);
}

TEST(AlsFit, WarmStartKeepsTensorAndNeverIncreasesRisk) {
  PatchSpec patch{{0.0, 0.0, 0.0}, 0.5, 2, 3};
  auto f = draw_instance(FamilyKind::Trig, 3, 2, 9);
  auto g = as_black_box(f);
  auto data = sample_patch(g, patch, 300, NoiseModel::none(), 2);
  auto a = embed(exact_derivatives(f, patch.x0, 2), patch);
  auto warm = tt_svd(a.densify(), 1).tt;
  ERMConfig cfg;
  cfg.chi = 3;
  cfg.init = warm;
  auto fit = als_fit(data, cfg);
  EXPECT_NEAR(fit.report.sweep_risks.front(), empirical_risk(warm, data), 1e-14);
  EXPECT_LE(fit.report.final_risk, empirical_risk(warm, data));
  EXPECT_EQ(fit.tt.max_rank(), 3u);

  cfg.chi = 1;
  cfg.init = tt_svd(a.densify(), 3).tt;
  EXPECT_THROW(als_fit(data, cfg), ShapeError);
}

TEST(AlsFit, BudgetMonitoring) {
  PatchSpec patch{{0.0, 0.0}, 1.0, 2, 2};
  auto g = as_black_box(make_exp_sum({2.0, 2.0}));
  auto data = sample_patch(g, patch, 200, NoiseModel::none(), 3);
  ERMConfig cfg;
  cfg.chi = 2;
  cfg.lambda_budget = 1.0;
  auto fit = als_fit(data, cfg);
  EXPECT_TRUE(fit.report.budget_violation);
  EXPECT_FALSE(fit.report.rescaled);
  EXPECT_GT(tt_norm(fit.tt), 1.0);
  cfg.rescale_to_budget = true;
  auto scaled = als_fit(data, cfg);
  EXPECT_TRUE(scaled.report.rescaled);
  EXPECT_NEAR(tt_norm(scaled.tt), 1.0, 1e-10);
}

TEST(AlsFit, RankDeficientWithoutRidgeRetries) {
  // every label and point identical: the design matrix has rank one
  PatchSpec patch{{0.0, 0.0}, 1.0, 2, 2};
  Dataset data;
  data.dim = 2;
  for (int i = 0; i < 10; ++i) {
    data.x.insert(data.x.end(), {0.5, 0.5});
    data.xi.insert(data.xi.end(), {0.5, 0.5});
    data.y.push_back(1.0);
  }
  ERMConfig cfg;
  cfg.chi = 2;
  cfg.ridge = 0.0;
  auto fit = als_fit(data, cfg);
  EXPECT_GT(fit.report.ridge_retries, 0u);
  EXPECT_LE(fit.report.final_risk, 1e-12);
}

TEST(EmpiricalRisk, ExactFitAndZeroTarget) {
  PatchSpec patch{{0.0, 0.0}, 1.0, 1, 1};
  std::vector<std::size_t> ranks{1};
  std::mt19937_64 rng(3);
  auto tt = random_tt(2, 2, ranks, 1.0, rng);
  auto g = planted_box(tt, patch);
  auto data = sample_patch(g, patch, 50, NoiseModel::none(), 1);
  EXPECT_LE(empirical_risk(tt, data), 1e-30);
  auto zero = TTTensor::zeros(2, 2, ranks);
  BlackBox zero_box(2, [](std::span<const double>) { return 0.0; });
  auto pts = sample_uniform_patch(patch, 100, 2);
  EXPECT_EQ(clean_rmse(zero, zero_box, patch, pts), 0.0);
}

TEST(EmpiricalRisk, NoiseVarianceIdentity) {
  PatchSpec patch{{0.0, 0.0, 0.0}, 0.5, 2, 2};
  auto f = draw_instance(FamilyKind::Gauss, 3, 2, 3);
  auto g = as_black_box(f);
  const double sigma = 0.3;
  auto data = sample_patch(g, patch, 100000, NoiseModel::uniform(sigma), 8);
  auto tt = tt_svd(embed(exact_derivatives(f, patch.x0, 2), patch).densify(), 2).tt;
  std::vector<double> clean(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) clean[i] = evaluate(f, data.point(i));
  const double l_hat = empirical_risk(tt, data);
  const double r_hat = std::pow(clean_rmse(tt, data.xi, clean), 2);
  // standard error of the per-sample difference of squared residuals
  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double h = tt_eval(tt, data.normalized(i));
    const double d = std::pow(data.y[i] - h, 2) - std::pow(clean[i] - h, 2);
    mean += d;
    sq += d * d;
  }
  const double n = static_cast<double>(data.size());
  mean /= n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(l_hat - r_hat, sigma * sigma / 3, 3 * se);
}

TEST(PredictionBound, NormTimesBesselConstant) {
  std::vector<std::size_t> ranks{3, 3, 3};
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto tt = random_tt(4, 3, ranks, 1.0, rng);
  const double bound = tt_norm(tt) * feature_norm_bound(4);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> xi{u(rng), u(rng), u(rng), u(rng)};
    EXPECT_LE(std::abs(tt_eval(tt, xi)), bound);
  }
}

TEST(PadRanks, PreservesTensor) {
  std::vector<std::size_t> ranks{1, 2};
  std::mt19937_64 rng(1);
  auto tt = random_tt(3, 3, ranks, 1.0, rng);
  std::vector<std::size_t> target{3, 3};
  auto padded = pad_ranks(tt, target, 5);
  EXPECT_EQ(padded.ranks(), target);
  EXPECT_LE(tt_distance_dense(padded, densify(tt)), 1e-14);
}
