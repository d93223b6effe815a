// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "coopcov/coverage.hpp"
#include "coopcov/simulator.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace coopcov;

namespace {

const SinrModel far_mean{Phase::MeanTheta, Distance::FarField, false};

std::vector<SinrModel> all_models(bool dpc) {
  std::vector<SinrModel> out;
  for (Phase ph : {Phase::ExactTheta, Phase::MeanTheta}) {
    for (Distance d : {Distance::FarField, Distance::Exact}) out.push_back({ph, d, dpc});
  }
  return out;
}

NetworkRealization realization(std::uint64_t seed, double area, double rho = 0.5,
                               const SimOptions& options = {}) {
  SystemParams params;
  params.rho = rho;
  auto rng = substream(seed, 0, 0);
  return build_realization(params, Window::square(area), rng, options);
}

}  // namespace

TEST(BuildRealization, MeanAtomCount) {
  SystemParams params;
  Window w = Window::square(20.0);
  const int n = 10000;
  double total = 0.0;
  std::size_t redraws = 0;
  for (int k = 0; k < n; ++k) {
    auto rng = substream(101, k, 0);
    NetworkRealization real = build_realization(params, w, rng);
    total += static_cast<double>(real.atoms.size());
    redraws += real.redraws;
  }
  EXPECT_NEAR(total / n, 20.0, 3.0 * std::sqrt(20.0 / n));
  EXPECT_EQ(redraws, 0u);
}

TEST(BuildRealization, Invariants) {
  for (bool torus : {false, true}) {
    SimOptions options;
    options.toroidal = torus;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      NetworkRealization real = realization(seed, 60.0, 0.6, options);
      ASSERT_EQ(real.users.size(), real.atoms.size());
      EXPECT_LE(real.typical.r1, real.typical.r2);
      EXPECT_EQ(real.typical_action, policy_action(real.typical.r1, real.typical.r2, 0.6));
      TwoNearest center = two_nearest(real.window.center(), real.atoms, real.metric);
      EXPECT_EQ(center.i1, real.typical.i1);
      EXPECT_EQ(center.i2, real.typical.i2);
      for (std::size_t i = 0; i < real.users.size(); ++i) {
        const CellUser& u = real.users[i];
        ASSERT_TRUE(real.window.contains(u.position));
        TwoNearest tn = two_nearest(u.position, real.atoms, real.metric);
        ASSERT_EQ(tn.i1, i);
        ASSERT_EQ(u.b1_index, i);
        ASSERT_EQ(u.b2_index, tn.i2);
        ASSERT_DOUBLE_EQ(u.r1, tn.r1);
        ASSERT_DOUBLE_EQ(u.r2, tn.r2);
        ASSERT_EQ(u.action, policy_action(u.r1, u.r2, 0.6));
      }
    }
  }
}

TEST(BuildRealization, PolicyConsistencyAfterReapply) {
  NetworkRealization real = realization(7, 100.0);
  for (double rho : {0.0, 0.3, 1.0}) {
    apply_policy(real, rho);
    for (const auto& u : real.users) ASSERT_EQ(u.action, policy_action(u.r1, u.r2, rho));
    EXPECT_EQ(real.typical_action, policy_action(real.typical.r1, real.typical.r2, rho));
  }
  EXPECT_ERRC(apply_policy(real, 1.5), errc::invalid_argument);
}

TEST(BuildRealization, Errors) {
  SystemParams params;
  auto rng = substream(1, 0, 0);
  EXPECT_ERRC(build_realization(params, Window::square(3.0), rng), errc::invalid_argument);
  SimOptions one_try;
  one_try.max_redraws = 1;
  bool saw_limit = false;
  for (std::uint64_t k = 0; k < 200 && !saw_limit; ++k) {
    auto r = substream(2, k, 0);
    try {
      build_realization(params, Window::square(4.0), r, one_try);
    } catch (const error& e) {
      EXPECT_EQ(e.code(), errc::redraw_limit);
      saw_limit = true;
    }
  }
  EXPECT_TRUE(saw_limit);
  SimOptions stingy;
  stingy.max_cell_attempts = 1;
  bool saw_exhausted = false;
  for (std::uint64_t k = 0; k < 20 && !saw_exhausted; ++k) {
    auto r = substream(3, k, 0);
    try {
      build_realization(params, Window::square(50.0), r, stingy);
    } catch (const error& e) {
      EXPECT_EQ(e.code(), errc::cell_sampling_exhausted);
      saw_exhausted = true;
    }
  }
  EXPECT_TRUE(saw_exhausted);
}

TEST(BuildRealization, TypicalLocationRhoSquared) {
  const int n = 10000;
  const std::vector<double> rhos{0.3, 0.5, 0.9};
  std::vector<int> nocoop(rhos.size(), 0);
  for (int k = 0; k < n; ++k) {
    auto rng = substream(102, k, 0);
    NetworkRealization real = build_realization(SystemParams{}, Window::square(20.0), rng);
    for (std::size_t r = 0; r < rhos.size(); ++r) {
      nocoop[r] += policy_action(real.typical.r1, real.typical.r2, rhos[r]) == Action::NoCoop;
    }
  }
  for (std::size_t r = 0; r < rhos.size(); ++r) {
    double q = rhos[r] * rhos[r];
    EXPECT_NEAR(static_cast<double>(nocoop[r]) / n, q, 3.0 * oracle::binomial_sigma(q, n))
        << rhos[r];
  }
}

// Users drawn uniformly inside their own cells are a different population
// from uniform locations: small cells are over-represented, and the NoCoop
// fraction falls short of rho^2.
TEST(BuildRealization, CellUsersCooperateMoreThanLocations) {
  SimOptions torus;
  torus.toroidal = true;
  std::size_t users = 0, nocoop = 0;
  for (std::uint64_t k = 0; k < 400; ++k) {
    auto rng = substream(103, k, 0);
    NetworkRealization real = build_realization(SystemParams{}, Window::square(100.0), rng, torus);
    for (const auto& u : real.users) nocoop += u.action == Action::NoCoop;
    users += real.users.size();
  }
  double frac = static_cast<double>(nocoop) / users;
  EXPECT_LT(frac, 0.25 - 3.0 * oracle::binomial_sigma(0.25, static_cast<double>(users)));
}

TEST(BuildRealization, TypicalDistanceMoments) {
  const int n = 10000;
  std::vector<double> r1(n), r2(n);
  for (int k = 0; k < n; ++k) {
    auto rng = substream(104, k, 0);
    NetworkRealization real = build_realization(SystemParams{}, Window::square(100.0), rng);
    r1[k] = real.typical.r1;
    r2[k] = real.typical.r2;
  }
  auto m1 = oracle::moments(r1);
  auto m2 = oracle::moments(r2);
  EXPECT_NEAR(m1.mean, 0.5, 3.0 * m1.se);
  EXPECT_NEAR(m2.mean, 0.75, 3.0 * m2.se);
}

TEST(TypicalSinr, SingleInterfererPairOracle) {
  // Typical at the origin with b1 at 1, b2 at 2 and one more station at 3.
  Window w(-4, 4, -4, 4);
  std::vector<Point2> atoms{{1, 0}, {0, 2}, {0, -3}};
  NetworkRealization real{atoms, {}, {}, Action::NoCoop, w, Metric{}, 1.0, 0};
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    Point2 z{atoms[i].x * 1.1, atoms[i].y * 1.1};
    TwoNearest tn = two_nearest(z, atoms);
    ASSERT_EQ(tn.i1, i);
    real.users.push_back({z, tn.i1, tn.i2, tn.r1, tn.r2, Action::NoCoop});
  }
  real.typical = two_nearest(w.center(), atoms);
  ASSERT_DOUBLE_EQ(real.typical.r1, 1.0);
  ASSERT_DOUBLE_EQ(real.typical.r2, 2.0);
  apply_policy(real, 1.0);
  SystemParams params;
  params.rho = 1.0;
  const int n = 100000;
  const std::vector<double> Ts{1.0, 5.0, 20.0};
  std::vector<int> covered(Ts.size(), 0);
  for (int k = 0; k < n; ++k) {
    auto rng = substream(105, k, 1);
    double sinr = typical_sinr(real, params, far_mean, rng);
    for (std::size_t t = 0; t < Ts.size(); ++t) covered[t] += sinr > Ts[t];
  }
  for (std::size_t t = 0; t < Ts.size(); ++t) {
    double T = Ts[t];
    double q = 1.0 / ((1.0 + T / 16.0) * (1.0 + T / 81.0));
    EXPECT_NEAR(static_cast<double>(covered[t]) / n, q, 3.0 * oracle::binomial_sigma(q, n)) << T;
  }
}

// Pointwise only with averaged phases: silencing one half of a coherent pair
// also drops its cross term, which may have been negative.
TEST(TypicalSinr, DpcNeverLowersSinr) {
  SystemParams params;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    NetworkRealization real = realization(seed, 20.0, 0.3);
    for (const SinrModel& m : all_models(false)) {
      if (m.phase == Phase::ExactTheta) continue;
      SinrModel with = m;
      with.dpc = true;
      auto a = substream(seed, 0, 1);
      auto b = substream(seed, 0, 1);
      ASSERT_GE(typical_sinr(real, params, with, b), typical_sinr(real, params, m, a));
    }
  }
}

TEST(TypicalSinr, RangeLimitsInterference) {
  NetworkRealization real = realization(5, 100.0);
  real.interference_range = 0.0;
  auto rng = substream(5, 0, 1);
  EXPECT_EQ(typical_link(real, SystemParams{}, far_mean, rng).interference, 0.0);
}

TEST(EstimateCoverage, DeterministicAcrossRunsAndWorkers) {
  SystemParams params;
  params.threshold_T = 0.8;
  Window w = Window::square(20.0);
  std::vector<double> rhos{0.0, 0.5, 1.0}, Ts{0.1, 0.8, 2.0};
  setenv("COOPCOV_THREADS", "1", 1);
  SimGrid a = estimate_coverage_grid(params, w, far_mean, rhos, Ts, 500, 77);
  setenv("COOPCOV_THREADS", "4", 1);
  SimGrid b = estimate_coverage_grid(params, w, far_mean, rhos, Ts, 500, 77);
  unsetenv("COOPCOV_THREADS");
  for (std::size_t i = 0; i < a.estimates.size(); ++i) {
    EXPECT_EQ(a.estimates[i].covered, b.estimates[i].covered);
    EXPECT_EQ(a.estimates[i].coverage, b.estimates[i].coverage);
    EXPECT_EQ(a.estimates[i].std_error, b.estimates[i].std_error);
  }
  SimEstimate single = estimate_coverage(params.with_rho(0.5), w, far_mean, 500, 77);
  EXPECT_EQ(single.covered, a.at(1, 1).covered);
  SimEstimate other = estimate_coverage(params.with_rho(0.5), w, far_mean, 500, 78);
  EXPECT_NE(other.covered, single.covered);
  EXPECT_NEAR(single.std_error,
              std::sqrt(single.coverage * (1.0 - single.coverage) / 500.0), 1e-15);
}

TEST(EstimateCoverage, MonotoneInThreshold) {
  SystemParams params;
  auto Ts = log_grid(0.01, 10.0, 15);
  std::vector<double> rhos{0.0, 0.5, 1.0};
  SimGrid g = estimate_coverage_grid(params, Window::square(20.0), far_mean, rhos, Ts, 1000, 9);
  for (std::size_t r = 0; r < rhos.size(); ++r) {
    for (std::size_t t = 1; t < Ts.size(); ++t) {
      EXPECT_LE(g.at(r, t).covered, g.at(r, t - 1).covered);
    }
  }
  SystemParams tiny = params;
  tiny.threshold_T = 1e-9;
  EXPECT_GE(estimate_coverage(tiny, Window::square(20.0), far_mean, 2000, 10).coverage, 0.999);
}

TEST(EstimateCoverage, PhaseModelsNearlyIdentical) {
  SystemParams params;
  auto Ts = log_grid(0.01, 10.0, 20);
  std::vector<double> rhos{0.5};
  Window w = Window::square(20.0);
  for (Distance d : {Distance::FarField, Distance::Exact}) {
    SimGrid exact = estimate_coverage_grid(params, w, {Phase::ExactTheta, d, false}, rhos, Ts,
                                           20000, 11);
    SimGrid mean = estimate_coverage_grid(params, w, {Phase::MeanTheta, d, false}, rhos, Ts,
                                          20000, 11);
    double sup = 0.0;
    for (std::size_t t = 0; t < Ts.size(); ++t) {
      sup = std::max(sup, std::abs(exact.at(0, t).coverage - mean.at(0, t).coverage));
    }
    EXPECT_LT(sup, 0.02);
  }
}

// Per-realization transform of the far-field interference against the
// analytic transform for the same r2, with the field limited to the range.
TEST(Interference, EmpiricalTransformMatchesAnalytic) {
  SystemParams params;
  SimOptions options;
  options.interference_range = 9.0;
  Window w = Window::square(400.0);
  const std::vector<double> ss{0.05, 0.2, 0.5, 1.0, 3.0};
  const int n = 2000;
  for (double rho : {0.0, 1.0}) {
    std::vector<std::vector<double>> diff(ss.size(), std::vector<double>(n));
    for (int k = 0; k < n; ++k) {
      auto geo = substream(106, k, 0);
      NetworkRealization real = build_realization(params, w, geo, options);
      apply_policy(real, rho);
      auto fade = substream(106, k, 1);
      double I = typical_link(real, params, far_mean, fade).interference;
      for (std::size_t i = 0; i < ss.size(); ++i) {
        double analytic = li(ss[i], rho, real.typical.r2, params, 9.0).value.real();
        diff[i][k] = std::exp(-ss[i] * I) - analytic;
      }
    }
    for (std::size_t i = 0; i < ss.size(); ++i) {
      auto m = oracle::moments(diff[i]);
      EXPECT_LT(std::abs(m.mean), 3.0 * m.se) << "rho=" << rho << " s=" << ss[i];
    }
  }
}

// One shared run at a large window against the analytic branches.
class CrossPipeline : public ::testing::Test {
 protected:
  static constexpr int n = 10000;
  struct Row {
    bool nocoop_half;  // typical NoCoop at rho = 0.5
    double sinr_half, sinr_zero, sinr_one;
  };
  static std::vector<Row>& rows() {
    static std::vector<Row> r = [] {
      std::vector<Row> out(n);
      SystemParams params;
      Window w = Window::square(400.0);
      parallel_for(n, [&](std::size_t k) {
        auto geo = substream(107, k, 0);
        NetworkRealization real = build_realization(params, w, geo);
        Row& row = out[k];
        for (double rho : {0.5, 0.0, 1.0}) {
          apply_policy(real, rho);
          auto fade = substream(107, k, 1);
          double s = typical_sinr(real, params.with_rho(rho), far_mean, fade);
          if (rho == 0.5) {
            row.nocoop_half = real.typical_action == Action::NoCoop;
            row.sinr_half = s;
          } else if (rho == 0.0) {
            row.sinr_zero = s;
          } else {
            row.sinr_one = s;
          }
        }
      });
      return out;
    }();
    return r;
  }
};

TEST_F(CrossPipeline, NoCoopBranchAtHalf) {
  const double T = 0.8;
  int hits = 0;
  for (const Row& r : rows()) hits += r.nocoop_half && r.sinr_half > T;
  SystemParams params;
  params.threshold_T = T;
  double q = qc1(0.5, params);
  EXPECT_NEAR(static_cast<double>(hits) / n, q, 3.0 * oracle::binomial_sigma(q, n));
}

TEST_F(CrossPipeline, FullCoopEverywhere) {
  const double T = 0.8;
  int hits = 0;
  for (const Row& r : rows()) hits += r.sinr_zero > T;
  SystemParams params;
  params.threshold_T = T;
  double q = qc2(0.0, params);
  EXPECT_NEAR(static_cast<double>(hits) / n, q, 3.0 * oracle::binomial_sigma(q, n));
}

TEST_F(CrossPipeline, NoCoopEverywhere) {
  const double T = 0.8;
  int hits = 0;
  for (const Row& r : rows()) hits += r.sinr_one > T;
  SystemParams params;
  params.threshold_T = T;
  double q = qc(1.0, params).qc;
  EXPECT_NEAR(static_cast<double>(hits) / n, q, 3.0 * oracle::binomial_sigma(q, n));
}

TEST(SinrMap, RegionsShrinkWithRho) {
  SystemParams params;
  NetworkRealization real = realization(21, 40.0);
  Raster raster{real.window, 30, 30};
  auto count = [&](double rho) {
    std::size_t c = 0;
    for (const auto& px : sinr_map(real, params.with_rho(rho), raster)) {
      c += px.action == Action::FullCoop;
    }
    return c;
  };
  EXPECT_EQ(count(1.0), 0u);
  EXPECT_GT(count(0.4), count(0.9));
}

TEST(SinrMap, FullCoopPixelsOutsideDiscs) {
  SystemParams params;
  NetworkRealization real = realization(22, 40.0);
  Raster raster{real.window, 40, 40};
  for (double rho : {0.4, 0.7}) {
    auto map = sinr_map(real, params.with_rho(rho), raster);
    double pitch = real.window.width() / 40.0;
    for (std::size_t iy = 0; iy < 40; ++iy) {
      for (std::size_t ix = 0; ix < 40; ++ix) {
        const RasterCell& px = map[iy * 40 + ix];
        Point2 b1 = real.atoms[px.b1_index], b2 = real.atoms[px.b2_index];
        CoopDisc near = coop_disc(b1, b2, rho), far = coop_disc(b2, b1, rho);
        bool in_near = dist(px.center, near.center) <= near.radius;
        bool in_far = dist(px.center, far.center) <= far.radius;
        if (px.action == Action::FullCoop) {
          ASSERT_FALSE(in_near);
          ASSERT_FALSE(in_far);
        } else {
          ASSERT_TRUE(in_near);
        }
        // Where the action flips between neighbors the boundary r1 = rho r2
        // lies within one pixel.
        if (ix + 1 < 40 && map[iy * 40 + ix + 1].action != px.action &&
            map[iy * 40 + ix + 1].b1_index == px.b1_index &&
            map[iy * 40 + ix + 1].b2_index == px.b2_index) {
          double gap = dist(px.center, b1) - rho * dist(px.center, b2);
          ASSERT_LE(std::abs(gap), (1.0 + rho) * pitch);
        }
      }
    }
  }
}

TEST(SinrMap, PixelValueByHand) {
  Window w(-2, 2, -2, 2);
  std::vector<Point2> atoms{{-1, 0}, {1, 0}, {0, 1.5}};
  NetworkRealization real{atoms, {}, {}, Action::NoCoop, w, Metric{}, 0.0, 0};
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    Point2 z{atoms[i].x * 0.9, atoms[i].y * 0.9};
    TwoNearest tn = two_nearest(z, atoms);
    real.users.push_back({z, tn.i1, tn.i2, tn.r1, tn.r2, Action::NoCoop});
  }
  real.typical = two_nearest(w.center(), atoms);
  SystemParams params;
  params.rho = 0.0;
  params.threshold_T = 1.0;
  Raster raster{w, 8, 8};
  auto map = sinr_map(real, params, raster);
  const RasterCell& px = map[3 * 8 + 2];  // center (-0.75, -0.25)
  Point2 z = px.center;
  ASSERT_EQ(px.b1_index, 0u);
  double h1 = std::pow(dist(z, atoms[0]), -4.0);
  double h2 = std::pow(dist(z, atoms[px.b2_index]), -4.0);
  double signal = 0.5 * (std::sqrt(h1) + std::sqrt(h2)) * (std::sqrt(h1) + std::sqrt(h2));
  double interference = 0.0;
  for (std::size_t i = 1; i < atoms.size(); ++i) {
    const CellUser& u = real.users[i];
    interference += 0.5 * (std::pow(dist(z, atoms[u.b1_index]), -4.0) +
                           std::pow(dist(z, atoms[u.b2_index]), -4.0));
  }
  EXPECT_NEAR(px.sinr, signal / interference, 1e-12);
  Raster coarse{w, 2, 2};
  EXPECT_ERRC(sinr_map(real, params, coarse), errc::invalid_argument);
}
