// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "coopcov/errors.hpp"
#include "coopcov/params.hpp"
#include "coopcov/quadrature.hpp"

namespace coopcov {

using cplx = std::complex<double>;

// One Laplace-transform evaluation.
struct LtValue {
  cplx s;
  cplx value;
};

// Exponential rates of the two received powers, mu_i = r_i^beta / p.
struct MuPair {
  double mu1 = 1.0;
  double mu2 = 1.0;

  static MuPair from_distances(double r1, double r2, double beta, double p) {
    return {std::pow(r1, beta) / p, std::pow(r2, beta) / p};
  }

  void check() const {
    require(std::isfinite(mu1) && std::isfinite(mu2) && mu1 > 0 && mu2 > 0,
            errc::invalid_argument, "rates must be positive");
  }
};

// Exponential power gain with mean p.
inline LtValue g_lt(cplx s, double p) {
  cplx den = 1.0 + s * p;
  require(std::abs(den) > 1e-300, errc::pole, "pole of the exponential transform");
  return {s, 1.0 / den};
}

namespace detail {

// Principal-branch complex arctangent in logarithmic form.
inline cplx atan_log(cplx w) {
  const cplx j(0.0, 1.0);
  require(!(w.real() == 0.0 && std::abs(w.imag()) >= 1.0), errc::branch_point,
          "arctangent argument on its branch cut");
  return std::log((1.0 + j * w) / (1.0 - j * w)) / (2.0 * j);
}

}  // namespace detail

// Transform of Z = (sqrt(X1) + sqrt(X2))^2 with X_i exponential of rate mu_i.
inline LtValue z_lt(cplx s, MuPair mu) {
  mu.check();
  if (s == cplx(0.0)) return {s, cplx(1.0)};
  cplx arg = 1.0 + (1.0 / mu.mu1 + 1.0 / mu.mu2) * s;
  require(arg != cplx(0.0), errc::branch_point, "g(s) vanishes");
  require(!(arg.imag() == 0.0 && arg.real() < 0.0), errc::branch_point,
          "s on the branch cut of g(s)");
  cplx g = std::sqrt(arg);
  double k = 1.0 / std::sqrt(mu.mu1 * mu.mu2);
  double ratio = std::sqrt(mu.mu1 / mu.mu2);
  cplx atans = detail::atan_log(ratio * g) + detail::atan_log(g / ratio);
  cplx num = s * k * (atans - pi) + g;
  return {s, num / (g * g * g)};
}

inline double z_mean(MuPair mu) {
  mu.check();
  double root = std::sqrt(mu.mu1 * mu.mu2);
  return (pi / 2.0 + (mu.mu1 + mu.mu2) / root) / root;
}

namespace detail {

// Density of sqrt(Z) at a: convolution of two Rayleigh densities.
inline double sqrt_z_density(double a, MuPair mu, double rel_tol) {
  if (a <= 0.0) return 0.0;
  auto f = [&](double u) {
    double w = a - u;
    return u * w * std::exp(-mu.mu1 * u * u - mu.mu2 * w * w);
  };
  return 4.0 * mu.mu1 * mu.mu2 * quad::integrate(f, 0.0, a, rel_tol, 1e-300);
}

}  // namespace detail

inline double z_pdf(double z, MuPair mu) {
  mu.check();
  require(z >= 0.0, errc::domain, "density argument must be nonnegative");
  if (z == 0.0) return 0.0;
  double a = std::sqrt(z);
  return detail::sqrt_z_density(a, mu, 1e-8) / (2.0 * a);
}

// P[Z > 2t], integrating the density of sqrt(Z) over (sqrt(2t), inf).
inline double z_tail(double t, MuPair mu) {
  mu.check();
  require(t >= 0.0, errc::domain, "tail argument must be nonnegative");
  if (t == 0.0) return 1.0;
  double a0 = std::sqrt(2.0 * t);
  auto f = [&](double a) { return detail::sqrt_z_density(a, mu, 1e-11); };
  return quad::integrate(f, a0, std::numeric_limits<double>::infinity(), 1e-9, 1e-300);
}

struct TailRow {
  double t;
  double tail_g;       // P[G > t], G exponential with rate mu
  double tail_z_half;  // P[Z/2 > t]
};

struct LaplaceRow {
  double s;
  double lt_g;       // L_G(s)
  double lt_z_half;  // L_{Z/2}(s) = L_Z(s/2)
};

struct OrderingReport {
  double mu = 1.0;
  std::vector<TailRow> tails;
  std::vector<double> crossings;  // t where P[Z/2>t] - P[G>t] changes sign
  bool stochastic_dominance = true;  // P[G>t] <= P[Z/2>t] on the whole grid
  std::vector<LaplaceRow> laplace;
  bool laplace_ordering = true;  // L_G(s) >= L_{Z/2}(s) on the s-grid
};

// Sign changes of P[Z/2 > t] - P[G > t] on a t-grid, G exponential with
// rate mu_single, each refined to a root by bracketing.
inline std::vector<double> tail_crossings(MuPair mu, double mu_single,
                                          std::span<const double> grid) {
  auto diff = [&](double t) { return z_tail(t, mu) - std::exp(-mu_single * t); };
  std::vector<double> roots;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double fa = diff(grid[i - 1]);
    double fb = diff(grid[i]);
    if (fa == 0.0) {
      roots.push_back(grid[i - 1]);
      continue;
    }
    if ((fa < 0) == (fb < 0) || fb == 0.0) continue;
    boost::uintmax_t iters = 100;
    auto r = boost::math::tools::toms748_solve(
        diff, grid[i - 1], grid[i], fa, fb, boost::math::tools::eps_tolerance<double>(40), iters);
    roots.push_back(0.5 * (r.first + r.second));
  }
  return roots;
}

// Stochastic and Laplace orderings between G ~ Exp(rate mu) and Z/2 with
// equal distances (mu1 = mu2 = mu).
inline OrderingReport ordering_checks(double mu, std::span<const double> grid) {
  require(std::isfinite(mu) && mu > 0, errc::invalid_argument, "mu must be positive");
  MuPair pair{mu, mu};
  OrderingReport rep;
  rep.mu = mu;
  for (double t : grid) {
    TailRow row{t, std::exp(-mu * t), z_tail(t, pair)};
    rep.stochastic_dominance =
        rep.stochastic_dominance && row.tail_g <= row.tail_z_half + 1e-12;
    rep.tails.push_back(row);
  }
  rep.crossings = tail_crossings(pair, mu, grid);
  rep.laplace.push_back({0.0, 1.0, 1.0});
  for (int i = 0; i <= 60; ++i) {
    double s = std::pow(10.0, -3.0 + 0.1 * i);
    LaplaceRow row{s, g_lt(s, 1.0 / mu).value.real(), z_lt(s / 2.0, pair).value.real()};
    rep.laplace_ordering = rep.laplace_ordering && row.lt_g >= row.lt_z_half - 1e-14;
    rep.laplace.push_back(row);
  }
  return rep;
}

}  // namespace coopcov
