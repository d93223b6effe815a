// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <string>
#include <type_traits>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "coopcov/errors.hpp"

namespace coopcov::quad {

using cplx = std::complex<double>;

template <class T>
double magnitude(const T& v) {
  return std::abs(v);
}

// Fixed 15-point Kronrod rule with its embedded 7-point Gauss rule, exposed
// node by node so callers can cache expensive factors at panel nodes.
struct Gk15 {
  static constexpr int size = 15;

  // Offsets in [-1, 1]; index 0 is the center, 1..7 positive, 8..14 negative.
  static const std::array<double, size>& offsets() {
    static const std::array<double, size> x = [] {
      const auto& a = boost::math::quadrature::gauss_kronrod<double, 15>::abscissa();
      std::array<double, size> out{};
      out[0] = a[0];
      for (int i = 1; i < 8; ++i) {
        out[i] = a[i];
        out[i + 7] = -a[i];
      }
      return out;
    }();
    return x;
  }

  static double kronrod_weight(int i) {
    const auto& w = boost::math::quadrature::gauss_kronrod<double, 15>::weights();
    return w[i < 8 ? i : i - 7];
  }

  // Gauss nodes are the even Kronrod abscissas; returns 0 for the others.
  static double gauss_weight(int i) {
    const auto& w = boost::math::quadrature::gauss<double, 7>::weights();
    int k = i < 8 ? i : i - 7;
    return k % 2 == 0 ? w[k / 2] : 0.0;
  }

  static double node(double lo, double hi, int i) {
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * offsets()[i];
  }

  template <class T>
  struct Estimate {
    T value;
    double error;
  };

  // Combines sampled values (in node order) into the Kronrod estimate and
  // the |Kronrod - Gauss| error proxy.
  template <class T>
  static Estimate<T> combine(const std::array<T, size>& f, double lo, double hi) {
    T k{};
    T g{};
    for (int i = 0; i < size; ++i) {
      k += kronrod_weight(i) * f[i];
      g += gauss_weight(i) * f[i];
    }
    double half = 0.5 * (hi - lo);
    return {half * k, half * magnitude(k - g)};
  }
};

// Panel-adaptive integration starting from precomputed node values.
template <class T, class F>
T refine_panel(F&& f, double lo, double hi, const std::array<T, Gk15::size>& values,
               double tol, int depth) {
  auto est = Gk15::combine(values, lo, hi);
  if (est.error <= tol) return est.value;
  if (depth <= 0) {
    throw error(errc::integration, "panel refinement exhausted on [" + std::to_string(lo) +
                                       ", " + std::to_string(hi) + "]");
  }
  double mid = 0.5 * (lo + hi);
  auto sample = [&](double a, double b) {
    std::array<T, Gk15::size> v{};
    for (int i = 0; i < Gk15::size; ++i) v[i] = f(Gk15::node(a, b, i));
    return v;
  };
  return refine_panel(f, lo, mid, sample(lo, mid), 0.5 * tol, depth - 1) +
         refine_panel(f, mid, hi, sample(mid, hi), 0.5 * tol, depth - 1);
}

// Globally adaptive Gauss-Kronrod on [a, b]: the panel with the largest error
// estimate is bisected until the summed estimate meets
// max(rel_tol*|I|, abs_tol). An infinite upper bound is mapped to [0, 1) by
// x = a + u/(1-u). Throws IntegrationError after max_panels panels.
template <class F>
auto integrate_finite(F&& f, double a, double b, double rel_tol, double abs_tol,
                      int max_panels) {
  using T = std::decay_t<decltype(f(a))>;
  struct Panel {
    double lo, hi;
    T value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  auto eval = [&](double lo, double hi) {
    std::array<T, Gk15::size> v{};
    for (int i = 0; i < Gk15::size; ++i) v[i] = f(Gk15::node(lo, hi, i));
    auto est = Gk15::combine(v, lo, hi);
    return Panel{lo, hi, est.value, est.error};
  };
  std::priority_queue<Panel> heap;
  Panel first = eval(a, b);
  T total = first.value;
  double total_err = first.error;
  heap.push(first);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int n = 1;; ++n) {
    double target = std::max({rel_tol * magnitude(total), abs_tol, 50.0 * eps * magnitude(total)});
    if (total_err <= target) break;
    Panel worst = heap.top();
    double mid = 0.5 * (worst.lo + worst.hi);
    if (n >= max_panels || !(mid > worst.lo && mid < worst.hi)) {
      if (total_err <= 10.0 * target) break;
      throw error(errc::integration, "adaptive quadrature on [" + std::to_string(a) + ", " +
                                         std::to_string(b) + "] did not converge (error " +
                                         std::to_string(total_err) + ")");
    }
    heap.pop();
    Panel left = eval(worst.lo, mid);
    Panel right = eval(mid, worst.hi);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of incremental updates.
  T sum{};
  while (!heap.empty()) {
    sum += heap.top().value;
    heap.pop();
  }
  if (!std::isfinite(magnitude(sum))) {
    throw error(errc::integration, "non-finite integrand on [" + std::to_string(a) + ", " +
                                       std::to_string(b) + "]");
  }
  return sum;
}

template <class F>
auto integrate(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0,
               int max_panels = 4000) {
  using T = std::decay_t<decltype(f(a))>;
  if (std::isinf(b)) {
    auto g = [&](double u) {
      double w = 1.0 - u;
      return T(f(a + u / w) / (w * w));
    };
    return integrate_finite(g, 0.0, 1.0, rel_tol, abs_tol, max_panels);
  }
  return integrate_finite(f, a, b, rel_tol, abs_tol, max_panels);
}

}  // namespace coopcov::quad
