// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include "coopcov/errors.hpp"

namespace coopcov {

// Physical constants of one network model. Units: meters, watts.
struct SystemParams {
  double lambda = 1.0;       // BS intensity, atoms per m^2
  double beta = 4.0;         // path-loss exponent
  double p = 1.0;            // per-user transmit power
  double sigma2 = 0.0;       // noise power
  double threshold_T = 1.0;  // SINR threshold
  double rho = 0.5;          // cooperation parameter

  void check() const {
    auto bad = [](const char* name, double v) {
      return std::string(name) + " out of range: " + std::to_string(v);
    };
    require(std::isfinite(lambda) && lambda > 0, errc::invalid_argument, bad("lambda", lambda));
    require(std::isfinite(beta) && beta > 2, errc::invalid_argument, bad("beta", beta));
    require(std::isfinite(p) && p > 0, errc::invalid_argument, bad("p", p));
    require(std::isfinite(sigma2) && sigma2 >= 0, errc::invalid_argument, bad("sigma2", sigma2));
    require(std::isfinite(threshold_T) && threshold_T > 0, errc::invalid_argument,
            bad("T", threshold_T));
    require(rho >= 0 && rho <= 1, errc::invalid_argument, bad("rho", rho));
  }

  SystemParams with_rho(double r) const {
    SystemParams q = *this;
    q.rho = r;
    return q;
  }

  SystemParams with_threshold(double t) const {
    SystemParams q = *this;
    q.threshold_T = t;
    return q;
  }
};

inline constexpr double pi = 3.141592653589793238462643383279502884;

}  // namespace coopcov
