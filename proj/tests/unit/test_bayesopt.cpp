/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/

#include "support.hpp"

using namespace ntsp;
using ntsp::test::expect_error;

namespace {

GpHyperparameters se(double length, double signal = 1.0, double noise = 1e-6) {
  return GpHyperparameters{KernelKind::squared_exponential, length, signal, noise};
}

double bowl(const std::vector<double> &x) {
  const double a = x[0] - 0.3, b = x[1] + 0.2;
  return -(a * a + b * b);
}

ObservationSet bowl_grid(std::size_t per_axis) {
  ObservationSet obs(Bounds::uniform(2, -1, 1));
  for (std::size_t i = 0; i < per_axis; ++i)
    for (std::size_t j = 0; j < per_axis; ++j) {
      const std::vector<double> x{-1 + 2.0 * i / (per_axis - 1), -1 + 2.0 * j / (per_axis - 1)};
      obs.add(x, bowl(x));
    }
  return obs;
}

double distance(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(s);
}

} // namespace

TEST(GpPosterior, InterpolatesSingleObservation) {
  ObservationSet obs(Bounds::uniform(1, 0, 10));
  obs.add({2.0}, 3.5);
  const auto m = GpModel::fit(obs, se(1.0));
  const auto p = m.posterior({2.0});
  EXPECT_NEAR(p.mean, 3.5, 1e-5);
  EXPECT_LT(p.variance, 1e-5);
}

TEST(GpPosterior, RevertsToPriorFarFromData) {
  ObservationSet obs(Bounds::uniform(1, 0, 100));
  obs.add({1.0}, 2.0);
  obs.add({2.0}, 4.0);
  const auto m = GpModel::fit(obs, se(0.5, 1.0));
  const auto p = m.posterior({90.0});
  // Prior mean is the sample mean, prior variance signal * sample variance.
  EXPECT_NEAR(p.mean, 3.0, 1e-9);
  EXPECT_NEAR(p.variance, 2.0, 1e-6);
}

TEST(GpPosterior, QuadraticWithinTwoStd) {
  ObservationSet obs(Bounds::uniform(1, -2, 2));
  for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) obs.add({x}, x * x);
  const auto m = GpModel::fit(obs, se(1.0, 1.0));
  for (double x : {-1.5, -0.5, 0.5, 1.5}) {
    const auto p = m.posterior({x});
    EXPECT_LE(std::abs(p.mean - x * x), 2 * p.stddev() + 1e-9) << x;
  }
}

TEST(GpPosterior, SymmetricMidpointAveragesValues) {
  for (auto kernel : {KernelKind::squared_exponential, KernelKind::matern52}) {
    ObservationSet obs(Bounds::uniform(2, -5, 5));
    obs.add({-1.0, 0.5}, 1.0);
    obs.add({1.0, -0.5}, 7.0);
    const auto m = GpModel::fit(obs, GpHyperparameters{kernel, 1.3, 1.0, 1e-6});
    EXPECT_NEAR(m.posterior({0.0, 0.0}).mean, 4.0, 1e-9);
  }
}

TEST(GpPosterior, VarianceNonNegativeAndNonIncreasing) {
  Rng rng(2);
  ObservationSet obs(Bounds::uniform(2, 0, 1));
  std::vector<std::vector<double>> queries;
  for (int i = 0; i < 10; ++i) queries.push_back({rng.uniform(), rng.uniform()});
  std::vector<double> prev(queries.size(), INFINITY);
  for (int k = 0; k < 25; ++k) {
    const std::vector<double> x{rng.uniform(), rng.uniform()};
    obs.add(x, std::sin(3 * x[0]) + x[1]);
    const auto m = GpModel::fit(obs, se(0.3, 1.0, 1e-4));
    // Standardisation rescales the prior, so compare in standardised units.
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const auto p = m.posterior(queries[q]);
      EXPECT_GE(p.variance, 0.0);
      double var = 0, mean = 0;
      for (double y : obs.values()) mean += y;
      mean /= static_cast<double>(obs.size());
      for (double y : obs.values()) var += (y - mean) * (y - mean);
      const double scale = obs.size() > 1 ? var / static_cast<double>(obs.size() - 1) : 1.0;
      const double standardised = p.variance / (scale > 1e-24 ? scale : 1.0);
      EXPECT_LE(standardised, prev[q] + 1e-9);
      prev[q] = standardised;
    }
  }
}

TEST(GpPosterior, ReproducesTrainingValues) {
  const auto obs = bowl_grid(5);
  for (double noise : {1e-6, 1e-4}) {
    const auto m = GpModel::fit(obs, se(0.8, 1.0, noise));
    // Tolerance in raw units: the noise variance applies to standardised values.
    double var = 0, mean = 0;
    for (double y : obs.values()) mean += y;
    mean /= static_cast<double>(obs.size());
    for (double y : obs.values()) var += (y - mean) * (y - mean);
    const double scale = std::sqrt(var / static_cast<double>(obs.size() - 1));
    for (std::size_t i = 0; i < obs.size(); ++i)
      EXPECT_NEAR(m.posterior(obs.points()[i]).mean, obs.values()[i], 3 * std::sqrt(noise) * scale);
  }
}

TEST(GpPosterior, Errors) {
  ObservationSet obs(Bounds::uniform(2, 0, 1));
  expect_error(ErrorKind::invalid_value, [&] { GpModel::fit(obs, se(1)); });
  expect_error(ErrorKind::invalid_value, [&] { obs.add({2.0, 0.5}, 1.0); });
  obs.add({0.5, 0.5}, 1.0);
  const auto m = GpModel::fit(obs, se(1));
  expect_error(ErrorKind::invalid_value, [&] { m.posterior({1.5, 0.5}); });
  expect_error(ErrorKind::length_mismatch, [&] { m.posterior({0.5}); });
}

TEST(GpPosterior, OptimizedFitImprovesLikelihood) {
  const auto obs = bowl_grid(4);
  const auto start = se(5.0);
  const auto fixed = GpModel::fit(obs, start);
  const auto tuned = GpModel::fit_optimized(obs, start);
  EXPECT_GE(tuned.log_marginal_likelihood(), fixed.log_marginal_likelihood());
}

TEST(Observations, DuplicatesAreAveraged) {
  ObservationSet obs(Bounds::uniform(1, 0, 1));
  obs.add({0.5}, 1.0);
  obs.add({0.5 + 1e-12}, 3.0);
  obs.add({0.7}, 0.0);
  ASSERT_EQ(obs.size(), 2u);
  EXPECT_DOUBLE_EQ(obs.values()[0], 2.0);
  EXPECT_DOUBLE_EQ(obs.best_value(), 2.0);
}

TEST(Acquisition, Examples) {
  const AcquisitionConfig ucb{AcquisitionKind::ucb, 2.576, 0};
  EXPECT_NEAR(acquisition(AcquisitionKind::ucb, 1, 2, 0, ucb), 6.152, 1e-12);
  const AcquisitionConfig ei{AcquisitionKind::ei, 0, 0.75};
  EXPECT_DOUBLE_EQ(acquisition(AcquisitionKind::ei, 1.0, 0, 0.5, ei), 0.0);
  EXPECT_DOUBLE_EQ(acquisition(AcquisitionKind::ei, 1.25, 0, 0.5, ei), 0.0);
  EXPECT_NEAR(acquisition(AcquisitionKind::ei, 1.55, 0, 0.5, ei), 0.3, 1e-12);
  expect_error(ErrorKind::invalid_value, [&] { acquisition(AcquisitionKind::ucb, 0, -1, 0, ucb); });
}

TEST(Acquisition, ExpectedImprovementMatchesIntegral) {
  // E[max(Y - t, 0)] for Y ~ N(mu, s^2) by trapezoidal quadrature.
  const AcquisitionConfig ei{AcquisitionKind::ei, 0, 0.1};
  for (double mu : {-1.0, 0.0, 0.4, 2.0})
    for (double s : {0.1, 0.5, 1.5}) {
      const double t = 0.3 + 0.1;
      double sum = 0;
      const int m = 200000;
      const double a = mu - 12 * s, b = mu + 12 * s, h = (b - a) / m;
      for (int i = 0; i <= m; ++i) {
        const double y = a + i * h;
        const double f = std::max(y - t, 0.0) * std::exp(-0.5 * (y - mu) * (y - mu) / (s * s)) / (s * std::sqrt(2 * pi));
        sum += (i == 0 || i == m ? 0.5 : 1.0) * f;
      }
      EXPECT_NEAR(acquisition(AcquisitionKind::ei, mu, s, 0.3, ei), sum * h, 1e-7);
    }
}

TEST(Acquisition, LogKernelIsStableAndContinuous) {
  for (double z = -7.9; z <= 5; z += 0.1) {
    const double h = z * detail::std_normal_cdf(z) + detail::std_normal_pdf(z);
    const auto [log_h, slope] = detail::log_ei_kernel(z);
    EXPECT_NEAR(log_h, std::log(h), 1e-9);
    EXPECT_NEAR(slope, detail::std_normal_cdf(z) / h, 1e-6 * std::max(1.0, std::abs(slope)));
  }
  const auto below = detail::log_ei_kernel(-8 - 1e-9), above = detail::log_ei_kernel(-8 + 1e-9);
  EXPECT_NEAR(below.first, above.first, 1e-4);
  EXPECT_NEAR(below.second, above.second, 1e-3);
  const auto far = detail::log_ei_kernel(-40);
  EXPECT_TRUE(std::isfinite(far.first));
  EXPECT_NEAR(far.second, 40, 0.1);
}

TEST(Suggest, LargeKappaExplores) {
  ObservationSet obs(Bounds::uniform(2, 0, 1));
  obs.add({0.2, 0.2}, 1.0);
  const auto m = GpModel::fit(obs, se(0.2));
  const auto x = suggest(m, AcquisitionConfig{AcquisitionKind::ucb, 100, 0}, 1.0, 3);
  EXPECT_GT(distance(x, {0.2, 0.2}), 0.5);
}

TEST(Suggest, ExpectedImprovementFindsGridArgmax) {
  const auto obs = bowl_grid(7);
  const auto m = GpModel::fit(obs, se(0.6));
  const AcquisitionConfig ei{AcquisitionKind::ei, 0, 0};
  const double best = obs.best_value();
  const auto x = suggest(m, ei, best, 11);
  double grid_best = -INFINITY;
  std::vector<double> grid_x;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) {
      const std::vector<double> p{-1 + i / 100.0, -1 + j / 100.0};
      const auto post = m.posterior(p);
      const double a = acquisition(AcquisitionKind::ei, post.mean, post.stddev(), best, ei);
      if (a > grid_best) grid_best = a, grid_x = p;
    }
  const auto px = m.posterior(x);
  EXPECT_GE(acquisition(AcquisitionKind::ei, px.mean, px.stddev(), best, ei), grid_best - 1e-6);
  EXPECT_LT(distance(x, grid_x), 0.05);
  EXPECT_LT(distance(x, {0.3, -0.2}), 2.0 / 6);
}

TEST(Suggest, DeterministicUnderSeed) {
  const auto obs = bowl_grid(3);
  const auto m = GpModel::fit(obs, se(0.5));
  const AcquisitionConfig ucb;
  EXPECT_EQ(suggest(m, ucb, obs.best_value(), 5), suggest(m, ucb, obs.best_value(), 5));
}

TEST(Suggest, ZeroKappaMaximisesMean) {
  const auto obs = bowl_grid(5);
  const auto m = GpModel::fit(obs, se(0.7));
  const auto x = suggest(m, AcquisitionConfig{AcquisitionKind::ucb, 0, 0}, 0, 2);
  double grid_best = -INFINITY;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) grid_best = std::max(grid_best, m.posterior({-1 + i / 100.0, -1 + j / 100.0}).mean);
  EXPECT_GE(m.posterior(x).mean, grid_best - 1e-6);
}

TEST(Optimizer, StaysInBoundsAndIsDeterministic) {
  auto run = [](std::uint64_t seed) {
    BayesOptConfig cfg;
    cfg.seed = seed;
    cfg.random_starts = 16;
    BayesianOptimizer opt(Bounds::uniform(3, 0, pi), cfg);
    std::vector<std::vector<double>> trace;
    for (int k = 0; k < 30; ++k) {
      auto x = opt.next();
      EXPECT_TRUE(opt.observations().bounds().contains(x)) << k;
      opt.observe(x, -std::abs(x[0] - 1) - std::abs(x[1] - 2) + std::cos(x[2]));
      trace.push_back(std::move(x));
    }
    return trace;
  };
  EXPECT_EQ(run(4), run(4));
  EXPECT_NE(run(4), run(5));
}

TEST(Optimizer, ImprovesOnInitialDesign) {
  BayesOptConfig cfg;
  cfg.acquisition = AcquisitionConfig{AcquisitionKind::ei, 0, 0};
  cfg.seed = 9;
  BayesianOptimizer opt(Bounds::uniform(2, -1, 1), cfg);
  double initial_best = -INFINITY;
  for (int k = 0; k < 40; ++k) {
    const auto x = opt.next();
    const double y = bowl(x);
    if (k < 5) initial_best = std::max(initial_best, y);
    opt.observe(x, y);
  }
  EXPECT_GT(opt.best_observed(), initial_best);
  EXPECT_GT(opt.best_observed(), -0.01);
}

TEST(OutputWarp, SymlogIsOddAndMonotone) {
  EXPECT_DOUBLE_EQ(warp_value(OutputWarp::symlog, 0), 0);
  EXPECT_DOUBLE_EQ(warp_value(OutputWarp::none, -7.5), -7.5);
  double prev = -INFINITY;
  for (double y = -50; y <= 50; y += 0.25) {
    const double w = warp_value(OutputWarp::symlog, y);
    EXPECT_GT(w, prev);
    EXPECT_NEAR(w, -warp_value(OutputWarp::symlog, -y), 1e-15);
    prev = w;
  }
}
