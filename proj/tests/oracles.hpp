// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference computations used by the test suites. Nothing here
// shares code paths with the library beyond its basic value types.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "coopcov/geometry.hpp"

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

// Indices of the two closest atoms by a full sort of (distance, index).
inline std::pair<std::size_t, std::size_t> sorted_two(coopcov::Point2 q,
                                                      std::span<const coopcov::Point2> atoms) {
  std::vector<std::size_t> idx(atoms.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    double da = std::hypot(atoms[a].x - q.x, atoms[a].y - q.y);
    double db = std::hypot(atoms[b].x - q.x, atoms[b].y - q.y);
    return da < db || (da == db && a < b);
  });
  return {idx[0], idx[1]};
}

// Interference transform by direct quadrature over the distance r > r2 of
// the field, times the transform of the station at r2.
inline cplx interference_lt(cplx s, double rho, double r2, double lambda, double beta, double p,
                            bool with_boundary = true) {
  auto one = [&](double r) {
    cplx x = s * p * std::pow(r, -beta);
    return rho * rho / (1.0 + x) + (1.0 - rho * rho) / ((1.0 + 0.5 * x) * (1.0 + 0.5 * x));
  };
  // r = r2 / t maps the field onto t in (0, 1]; the endpoint singularity at
  // t = 0 suits double-exponential quadrature.
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto g = [&](double t) {
    cplx x = s * p * std::pow(t / r2, beta);
    cplx load = rho * rho / (1.0 + x) + (1.0 - rho * rho) * (1.0 + 0.25 * x) / ((1.0 + 0.5 * x) * (1.0 + 0.5 * x));
    return s * p * std::pow(r2, 2.0 - beta) * std::pow(t, beta - 3.0) * load;
  };
  auto re = [&](double t) { return g(t).real(); };
  auto im = [&](double t) { return g(t).imag(); };
  double tol = 1e-14;
  cplx radial(integrator.integrate(re, 0.0, 1.0, tol), integrator.integrate(im, 0.0, 1.0, tol));
  cplx field = std::exp(-2.0 * pi * lambda * radial);
  return with_boundary ? one(r2) * field : field;
}

// Draws Z = (sqrt(X1) + sqrt(X2))^2 with X_i exponential of rate mu_i.
template <class G>
double draw_z(G& rng, double mu1, double mu2) {
  std::exponential_distribution<double> e1(mu1), e2(mu2);
  double a = std::sqrt(e1(rng)) + std::sqrt(e2(rng));
  return a * a;
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

inline Moments moments(std::span<const double> xs) {
  double n = static_cast<double>(xs.size());
  double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

inline double binomial_sigma(double q, double n) { return std::sqrt(q * (1.0 - q) / n); }

}  // namespace oracle
