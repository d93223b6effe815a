// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "coopcov/channel.hpp"
#include "coopcov/errors.hpp"
#include "coopcov/params.hpp"
#include "coopcov/quadrature.hpp"

namespace coopcov {

namespace detail {

// Transform of one interferer's received power at normalized load x = s p d^-beta:
// Exp(mean 1) with probability rho^2, Gamma(2, 1/2) otherwise.
inline cplx mark_lt(cplx x, double rho) {
  cplx one = 1.0 + x;
  cplx half = 1.0 + 0.5 * x;
  require(std::abs(one) > 1e-300 && std::abs(half) > 1e-300, errc::pole,
          "pole of the per-interferer transform");
  double w = rho * rho;
  return w / one + (1.0 - w) / (half * half);
}

// The radial integral (1/r2^2) * int_{r2}^{r_out} (1 - L_J) r dr, split by mark
// type so that rho enters as a weight. With y = (r/r2)^(2-beta) the domain
// becomes [y_min, 1], y_min = (r_out/r2)^(2-beta), and no truncation is needed.
struct ShotNoise {
  cplx single;  // exponential marks
  cplx pair;    // Gamma(2, 1/2) marks

  cplx mix(double rho) const { return rho * rho * single + (1.0 - rho * rho) * pair; }
};

inline ShotNoise shot_noise(cplx c, double beta, double y_min = 0.0, double rel_tol = 1e-11) {
  const double a = 1.0 - 2.0 / beta;
  const double e = 1.0 / a;
  if (c == cplx(0.0)) return {0.0, 0.0};
  const double scale = 1.0 / (a * beta);
  if (y_min == 0.0 && std::abs(c) < 1e-3) {
    // Power series in c; six terms reach double precision at this load.
    cplx single(0.0), pair(0.0), ck(1.0);
    for (int k = 0; k < 6; ++k) {
      double m = 1.0 / (k * e + 1.0);
      double half = std::pow(-0.5, k);
      double coef = (k + 1) * half + (k > 0 ? 0.25 * k * half / -0.5 : 0.0);
      single += ck * ((k % 2 == 0 ? 1.0 : -1.0) * m);
      pair += ck * (coef * m);
      ck *= c;
    }
    return {c * scale * single, c * scale * pair};
  }
  if (c.imag() == 0.0 && c.real() < 0.0) {
    // Real negative loads of magnitude >= 1 put a pole inside the domain.
    require(-c.real() < 1.0, errc::pole, "shot-noise integrand has a pole");
  }
  auto single = [&](double y) { return 1.0 / (1.0 + c * std::pow(y, e)); };
  auto pair = [&](double y) {
    cplx x = c * std::pow(y, e);
    cplx den = 1.0 + 0.5 * x;
    return (c + 0.25 * c * x) / (den * den);
  };
  // Geometric panels around y* where |c| y^e = 1, so that the sharp feature of
  // large loads is resolved without deep bisection.
  std::vector<double> edges{y_min};
  double ystar = std::pow(std::abs(c), -a);
  if (ystar < 1.0) {
    double y = std::max(y_min, ystar / 16.0);
    while (y < 1.0) {
      if (y > edges.back()) edges.push_back(y);
      y *= 2.0;
    }
  }
  edges.push_back(1.0);
  ShotNoise out{0.0, 0.0};
  for (std::size_t i = 1; i < edges.size(); ++i) {
    out.single += quad::integrate(single, edges[i - 1], edges[i], rel_tol, 1e-300);
    out.pair += quad::integrate(pair, edges[i - 1], edges[i], rel_tol, 1e-300);
  }
  out.single *= c * scale;
  out.pair *= scale;
  return out;
}

inline double outer_limit(double r2, double r_out, double beta) {
  if (!std::isfinite(r_out)) return 0.0;
  require(r_out >= r2, errc::invalid_argument, "outer radius below r2");
  return std::pow(r_out / r2, 2.0 - beta);
}

}  // namespace detail

// Transform of one interferer at distance d.
inline LtValue lj(cplx s, double rho, double d, const SystemParams& params) {
  require(d > 0, errc::invalid_argument, "distance must be positive");
  return {s, detail::mark_lt(s * params.p * std::pow(d, -params.beta), rho)};
}

// Transform of the interference without the interferer at exactly r2.
// r_out restricts the field to the annulus r2 < r < r_out.
inline LtValue li_dpc(cplx s, double rho, double r2, const SystemParams& params,
                      double r_out = std::numeric_limits<double>::infinity()) {
  params.check();
  require(r2 > 0, errc::invalid_argument, "r2 must be positive");
  if (s == cplx(0.0)) return {s, 1.0};
  cplx c = s * params.p * std::pow(r2, -params.beta);
  auto k = detail::shot_noise(c, params.beta, detail::outer_limit(r2, r_out, params.beta));
  return {s, std::exp(-2.0 * pi * params.lambda * r2 * r2 * k.mix(rho))};
}

// Transform of the interference seen with the second neighbor at r2 active.
inline LtValue li(cplx s, double rho, double r2, const SystemParams& params,
                  double r_out = std::numeric_limits<double>::infinity()) {
  LtValue field = li_dpc(s, rho, r2, params, r_out);
  return {s, lj(s, rho, r2, params).value * field.value};
}

// Closed form of li for rho = 1 and beta = 4.
inline LtValue li_nocoop_beta4(cplx s, double r2, const SystemParams& params) {
  params.check();
  require(params.beta == 4.0, errc::wrong_exponent, "closed form requires beta = 4");
  require(r2 > 0, errc::invalid_argument, "r2 must be positive");
  if (s == cplx(0.0)) return {s, 1.0};
  cplx root = std::sqrt(s * params.p);
  cplx r2sq = r2 * r2;
  cplx tail = pi / 2.0 - detail::atan_log(r2sq / root);
  cplx near = 1.0 / (1.0 + s * params.p / (r2sq * r2sq));
  return {s, near * std::exp(-pi * params.lambda * root * tail)};
}

namespace detail {

inline double mean_scale(double r2, const SystemParams& params) {
  require(params.beta > 2, errc::divergent_mean, "mean interference diverges for beta <= 2");
  params.check();
  require(r2 > 0, errc::divergent_near_field, "mean interference diverges as r2 -> 0");
  double v = params.p / ((params.beta - 2.0) * std::pow(r2, params.beta));
  require(std::isfinite(v), errc::divergent_near_field, "mean interference overflows");
  return v;
}

}  // namespace detail

// Mean interference; the same for every rho, which is accepted for symmetry.
inline double mean_interference([[maybe_unused]] double rho, double r2,
                                const SystemParams& params) {
  double scale = detail::mean_scale(r2, params);
  double v = scale * (params.beta - 2.0 + 2.0 * pi * params.lambda * r2 * r2);
  require(std::isfinite(v), errc::divergent_near_field, "mean interference overflows");
  return v;
}

inline double mean_interference_dpc([[maybe_unused]] double rho, double r2,
                                    const SystemParams& params) {
  double v = detail::mean_scale(r2, params) * 2.0 * pi * params.lambda * r2 * r2;
  require(std::isfinite(v), errc::divergent_near_field, "mean interference overflows");
  return v;
}

}  // namespace coopcov
