// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "coopcov/channel.hpp"
#include "coopcov/errors.hpp"
#include "coopcov/interference.hpp"
#include "coopcov/parallel.hpp"
#include "coopcov/params.hpp"
#include "coopcov/quadrature.hpp"

namespace coopcov {

struct QuadratureConfig {
  double rel_tol = 1e-5;
  double abs_tol = 1e-7;
  double r_max_factor = 5.0;     // outer truncation at r_max_factor / sqrt(lambda)
  double s_max_initial = 100.0;  // first upper end of the normalized frequency range
  double s_tail_tol = 1e-7;      // stop once a panel adds less than this fraction
  // With zero noise, integrate the distance to the second station in closed form.
  bool reduce_radial = true;

  void check() const {
    require(rel_tol > 0 && abs_tol > 0 && r_max_factor > 0 && s_max_initial > 0 &&
                s_tail_tol > 0,
            errc::invalid_argument, "quadrature settings must be positive");
  }
};

struct CoverageValue {
  double qc = 0.0;
  double qc1 = 0.0;  // mass of the NoCoop branch
  double qc2 = 0.0;  // mass of the FullCoop branch
};

enum class Axis { Rho, Threshold };

struct CoveragePoint {
  double x = 0.0;
  double qc = 0.0;
  double qc1 = 0.0;
  double qc2 = 0.0;
  double rho = 0.0;  // rho used at this point (the maximizer when optimizing)
  double qc_nocoop = std::numeric_limits<double>::quiet_NaN();
  double qc_fullcoop = std::numeric_limits<double>::quiet_NaN();
};

struct CoverageCurve {
  Axis axis = Axis::Rho;
  std::vector<CoveragePoint> points;
  SystemParams params;
  bool dpc = false;
};

inline double clip_probability(double q) { return std::clamp(q, 0.0, 1.0); }

// Evaluates the coverage integrals for one path-loss exponent.
//
// Both branches are written in v = r1/r2 (density 2v on [0,1]) and
// w = lambda*pi*r2^2 (density w e^-w), which are independent. The FullCoop
// branch inverts the transform of Z/2 - T*I along the imaginary axis; the
// frequency is normalized as t = s p / r2^beta and integrated in log t on unit
// panels, so the shot-noise kernel only depends on t and is tabulated once.
class CoverageEngine {
 public:
  CoverageEngine(double beta, QuadratureConfig quad = {}) : beta_(beta), quad_(quad) {
    require(std::isfinite(beta) && beta > 2, errc::invalid_argument, "beta must exceed 2");
    quad_.check();
    std::size_t panels = static_cast<std::size_t>(table_hi_ - table_lo_);
    table_.resize(panels);
    parallel_for(panels, [&](std::size_t p) {
      double lo = table_lo_ + static_cast<double>(p);
      for (int i = 0; i < quad::Gk15::size; ++i) table_[p][i] = kernel_at(quad::Gk15::node(lo, lo + 1.0, i));
    });
  }

  double beta() const { return beta_; }
  const QuadratureConfig& config() const { return quad_; }

  double qc1(const SystemParams& params) const {
    check(params);
    const double rho = params.rho;
    if (rho == 0.0) return 0.0;
    const double T = params.threshold_T;
    if (reduced(params)) {
      auto f = [&](double v) {
        cplx c = T * std::pow(v, beta_);
        auto k = detail::shot_noise(c, beta_);
        cplx den = 1.0 + 2.0 * k.mix(rho);
        return 2.0 * v * (detail::mark_lt(c, rho) / (den * den)).real();
      };
      return quad::integrate(f, 0.0, rho, quad_.rel_tol, quad_.abs_tol);
    }
    const double wmax = w_max();
    auto f = [&](double v) {
      double vb = std::pow(v, beta_);
      cplx c = T * vb;
      cplx mix = detail::shot_noise(c, beta_).mix(rho);
      double mark = detail::mark_lt(c, rho).real();
      auto g = [&](double w) {
        double noise = vb * r2_pow_beta(w, params) * T * params.sigma2 / params.p;
        return w * std::exp(-w - noise - 2.0 * w * mix.real());
      };
      return 2.0 * v * mark * quad::integrate(g, 0.0, wmax, quad_.rel_tol, quad_.abs_tol * 1e-2);
    };
    return quad::integrate(f, 0.0, rho, quad_.rel_tol, quad_.abs_tol);
  }

  double qc2(const SystemParams& params, bool dpc) const {
    check(params);
    const double rho = params.rho;
    if (rho == 1.0) return 0.0;
    if (reduced(params)) {
      auto f = [&](double v) {
        Inner in{MuPair{std::pow(v, beta_), 1.0}, params.threshold_T, rho, dpc, -1.0, 0.0};
        return 2.0 * v * inversion(in);
      };
      return quad::integrate(f, rho, 1.0, quad_.rel_tol, quad_.abs_tol);
    }
    const double wmax = w_max();
    auto f = [&](double v) {
      MuPair mu{std::pow(v, beta_), 1.0};
      auto g = [&](double w) {
        double noise = 2.0 * pi * params.sigma2 * r2_pow_beta(w, params) / params.p;
        Inner in{mu, params.threshold_T, rho, dpc, w, noise};
        return w * std::exp(-w) * inversion(in);
      };
      return 2.0 * v * quad::integrate(g, 0.0, wmax, quad_.rel_tol, quad_.abs_tol * 1e-2);
    };
    return quad::integrate(f, rho, 1.0, quad_.rel_tol, quad_.abs_tol);
  }

  // P[Z/2 > T (sigma2 + I)] for a location with cooperating stations at r1 <= r2.
  double full_coop_conditional(double r1, double r2, const SystemParams& params,
                               bool dpc) const {
    check(params);
    require(r1 > 0 && r2 >= r1, errc::invalid_geometry, "need 0 < r1 <= r2");
    double r2b = std::pow(r2, beta_);
    Inner in{MuPair{std::pow(r1, beta_) / r2b, 1.0}, params.threshold_T, params.rho, dpc,
             params.lambda * pi * r2 * r2, 2.0 * pi * params.sigma2 * r2b / params.p};
    return inversion(in);
  }

  CoverageValue evaluate(const SystemParams& params, bool dpc) const {
    CoverageValue out;
    out.qc1 = qc1(params);
    out.qc2 = qc2(params, dpc);
    out.qc = out.qc1 + out.qc2;
    return out;
  }

 private:
  // One inner inversion: rates (v^beta, 1) in units of r2^beta/p, and either
  // the closed-form average over w (w < 0) or a fixed w with its noise factor.
  struct Inner {
    MuPair mu;
    double T;
    double rho;
    bool dpc;
    double w;
    double noise;  // phase rate 2 pi sigma2 r2^beta / p per unit t
  };

  void check(const SystemParams& params) const {
    params.check();
    require(params.beta == beta_, errc::invalid_argument,
            "engine built for beta=" + std::to_string(beta_));
  }

  bool reduced(const SystemParams& params) const {
    return quad_.reduce_radial && params.sigma2 == 0.0;
  }

  double w_max() const { return pi * quad_.r_max_factor * quad_.r_max_factor; }

  double r2_pow_beta(double w, const SystemParams& params) const {
    return std::pow(w / (params.lambda * pi), 0.5 * beta_);
  }

  detail::ShotNoise kernel_at(double x) const {
    return detail::shot_noise(cplx(0.0, 2.0 * pi * std::exp(x)), beta_);
  }

  double integrand(const Inner& in, double x, const detail::ShotNoise& k) const {
    const double t = std::exp(x);
    const cplx c(0.0, 2.0 * pi * t);
    const cplx mix = k.mix(in.rho);
    cplx field;
    if (in.w < 0.0) {
      cplx den = 1.0 + 2.0 * mix;
      field = 1.0 / (den * den);
    } else {
      field = std::exp(-2.0 * in.w * mix);
    }
    if (!in.dpc) field *= detail::mark_lt(c, in.rho);
    if (in.noise > 0.0) field *= std::polar(1.0, -in.noise * t);
    cplx lz = z_lt(cplx(0.0, -pi * t / in.T), in.mu).value;
    // 2 Re[field (L_Z - 1) / (2 j pi)]
    return (field * (lz - 1.0) * cplx(0.0, -1.0)).real() / pi;
  }

  // P[Z/2 > T I] for one inner case, by Gil-Pelaez inversion in log-frequency.
  double inversion(const Inner& in) const {
    const double ez = z_mean(in.mu);
    // Below x0 the integrand equals E[Z] t / T to first order.
    const double x0 = std::floor(std::log(quad_.s_tail_tol * in.T / ez));
    double total = ez * std::exp(x0) / in.T;
    const double x_init = std::log(quad_.s_max_initial);
    const double panel_tol = 1e-2 * std::min(quad_.abs_tol, quad_.s_tail_tol);
    int quiet = 0;
    for (double lo = x0;; lo += 1.0) {
      require(lo < x_cap_, errc::integration,
              "inversion integrand did not decay by log-frequency " + std::to_string(x_cap_));
      std::array<double, quad::Gk15::size> vals{};
      long slot = static_cast<long>(lo) - static_cast<long>(table_lo_);
      bool cached = slot >= 0 && slot < static_cast<long>(table_.size());
      double l1 = 0.0;
      for (int i = 0; i < quad::Gk15::size; ++i) {
        double x = quad::Gk15::node(lo, lo + 1.0, i);
        vals[i] = integrand(in, x, cached ? table_[slot][i] : kernel_at(x));
        l1 += quad::Gk15::kronrod_weight(i) * std::abs(vals[i]);
      }
      l1 *= 0.5;
      auto at = [&](double x) { return integrand(in, x, kernel_at(x)); };
      double part = quad::refine_panel(at, lo, lo + 1.0, vals, panel_tol, 12);
      total += part;
      if (lo + 1.0 >= x_init && l1 < quad_.s_tail_tol * std::abs(total)) {
        if (++quiet >= 2) break;
      } else {
        quiet = 0;
      }
    }
    return total;
  }

  double beta_;
  QuadratureConfig quad_;
  static constexpr double table_lo_ = -12.0;
  static constexpr double table_hi_ = 40.0;
  static constexpr double x_cap_ = 120.0;
  std::vector<std::array<detail::ShotNoise, quad::Gk15::size>> table_;
};

inline double qc1(double rho, const SystemParams& params, const QuadratureConfig& quad = {}) {
  return CoverageEngine(params.beta, quad).qc1(params.with_rho(rho));
}

inline double qc2(double rho, const SystemParams& params, const QuadratureConfig& quad = {},
                  bool dpc = false) {
  return CoverageEngine(params.beta, quad).qc2(params.with_rho(rho), dpc);
}

inline CoverageValue qc(double rho, const SystemParams& params, const QuadratureConfig& quad = {},
                        bool dpc = false) {
  return CoverageEngine(params.beta, quad).evaluate(params.with_rho(rho), dpc);
}

// Integrand of the FullCoop inversion in the original frequency s, for
// distances (r1, r2); at s = 0 its limit E[Z]/(2T) is returned.
inline cplx coverage_s_integrand(double s, double r1, double r2, const SystemParams& params,
                                 bool dpc = false) {
  params.check();
  MuPair mu = MuPair::from_distances(r1, r2, params.beta, params.p);
  const double T = params.threshold_T;
  if (s == 0.0) return z_mean(mu) / (2.0 * T);
  const cplx j(0.0, 1.0);
  cplx arg = 2.0 * pi * s * j;
  cplx field = dpc ? li_dpc(arg, params.rho, r2, params).value
                   : li(arg, params.rho, r2, params).value;
  cplx lz = z_lt(-pi * s * j / T, mu).value;
  return std::exp(-arg * params.sigma2) * field * (lz - 1.0) / arg;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  require(n >= 2 && hi > lo, errc::invalid_argument, "grid needs n >= 2 and hi > lo");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  g.back() = hi;
  return g;
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  require(lo > 0, errc::invalid_argument, "log grid needs lo > 0");
  std::vector<double> g = linear_grid(std::log(lo), std::log(hi), n);
  for (double& x : g) x = std::exp(x);
  g.front() = lo;
  g.back() = hi;
  return g;
}

inline void check_grid(std::span<const double> grid) {
  require(!grid.empty(), errc::invalid_argument, "empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    require(grid[i] > grid[i - 1], errc::invalid_argument, "grid must be strictly increasing");
  }
}

struct RhoOptimum {
  double rho = 1.0;
  CoverageValue value;
  double qc_nocoop = 0.0;    // rho = 1
  double qc_fullcoop = 0.0;  // rho = 0
};

// Grid search over rho with the given step, then one golden-section pass on
// the bracket around the best grid point.
inline RhoOptimum optimize_rho(const CoverageEngine& engine, const SystemParams& params, bool dpc,
                               double step = 0.05) {
  std::size_t n = static_cast<std::size_t>(std::llround(1.0 / step)) + 1;
  std::vector<double> grid = linear_grid(0.0, 1.0, n);
  std::vector<CoverageValue> vals(n);
  for (std::size_t i = 0; i < n; ++i) vals[i] = engine.evaluate(params.with_rho(grid[i]), dpc);
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (vals[i].qc > vals[best].qc) best = i;
  }
  RhoOptimum out{grid[best], vals[best], vals[n - 1].qc, vals[0].qc};
  double a = grid[best == 0 ? 0 : best - 1];
  double b = grid[best + 1 == n ? n - 1 : best + 1];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  CoverageValue fc = engine.evaluate(params.with_rho(c), dpc);
  CoverageValue fd = engine.evaluate(params.with_rho(d), dpc);
  auto consider = [&](double r, const CoverageValue& v) {
    if (v.qc > out.value.qc) {
      out.rho = r;
      out.value = v;
    }
  };
  while (b - a > 1e-3) {
    if (fc.qc >= fd.qc) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = engine.evaluate(params.with_rho(c), dpc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = engine.evaluate(params.with_rho(d), dpc);
    }
    consider(c, fc);
    consider(d, fd);
  }
  return out;
}

inline CoverageCurve sweep_rho(const SystemParams& params, std::span<const double> rhos,
                               const QuadratureConfig& quad = {}, bool dpc = false) {
  params.check();
  check_grid(rhos);
  CoverageEngine engine(params.beta, quad);
  CoverageCurve curve{Axis::Rho, std::vector<CoveragePoint>(rhos.size()), params, dpc};
  parallel_for(rhos.size(), [&](std::size_t i) {
    CoverageValue v = engine.evaluate(params.with_rho(rhos[i]), dpc);
    curve.points[i] = {rhos[i], v.qc, v.qc1, v.qc2, rhos[i]};
  });
  return curve;
}

inline CoverageCurve sweep_threshold(const SystemParams& params, std::span<const double> thresholds,
                                     const QuadratureConfig& quad = {}, bool dpc = false,
                                     bool optimize = false) {
  params.check();
  check_grid(thresholds);
  CoverageEngine engine(params.beta, quad);
  CoverageCurve curve{Axis::Threshold, std::vector<CoveragePoint>(thresholds.size()), params, dpc};
  parallel_for(thresholds.size(), [&](std::size_t i) {
    SystemParams at = params.with_threshold(thresholds[i]);
    CoveragePoint& pt = curve.points[i];
    pt.x = thresholds[i];
    if (optimize) {
      RhoOptimum best = optimize_rho(engine, at, dpc);
      pt.rho = best.rho;
      pt.qc = best.value.qc;
      pt.qc1 = best.value.qc1;
      pt.qc2 = best.value.qc2;
      pt.qc_nocoop = best.qc_nocoop;
      pt.qc_fullcoop = best.qc_fullcoop;
    } else {
      CoverageValue v = engine.evaluate(at, dpc);
      pt.rho = at.rho;
      pt.qc = v.qc;
      pt.qc1 = v.qc1;
      pt.qc2 = v.qc2;
      pt.qc_nocoop = engine.evaluate(at.with_rho(1.0), dpc).qc;
      pt.qc_fullcoop = engine.evaluate(at.with_rho(0.0), dpc).qc;
    }
  });
  return curve;
}

}  // namespace coopcov
