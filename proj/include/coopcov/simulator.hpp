// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "coopcov/errors.hpp"
#include "coopcov/geometry.hpp"
#include "coopcov/parallel.hpp"
#include "coopcov/params.hpp"

namespace coopcov {

enum class Phase { ExactTheta, MeanTheta };
enum class Distance { FarField, Exact };

struct SinrModel {
  Phase phase = Phase::MeanTheta;
  Distance distance = Distance::FarField;
  bool dpc = false;  // cancel b1/b2 transmissions when the typical location cooperates
};

inline std::string to_string(const SinrModel& m) {
  std::string s = m.phase == Phase::ExactTheta ? "exact-theta" : "mean-theta";
  s += m.distance == Distance::FarField ? ",far-field" : ",exact";
  if (m.dpc) s += ",dpc";
  return s;
}

struct SimOptions {
  bool toroidal = false;
  // Stations farther than this from the typical location are ignored.
  double interference_range = std::numeric_limits<double>::infinity();
  std::uint64_t max_cell_attempts = default_cell_attempts;
  int max_redraws = 100;
};

struct CellUser {
  Point2 position;
  std::size_t b1_index = 0;
  std::size_t b2_index = 0;
  double r1 = 0.0;
  double r2 = 0.0;
  Action action = Action::NoCoop;
};

struct NetworkRealization {
  std::vector<Point2> atoms;
  std::vector<CellUser> users;  // users[i] lives in the cell of atoms[i]
  TwoNearest typical;           // seen from the window center
  Action typical_action = Action::NoCoop;
  Window window;
  Metric metric;
  double rho = 0.0;
  std::size_t redraws = 0;  // windows with fewer than 2 atoms that were discarded
  double interference_range = std::numeric_limits<double>::infinity();
};

struct SimEstimate {
  double coverage = 0.0;
  double std_error = 0.0;
  std::size_t covered = 0;
  std::size_t n_realizations = 0;
  SinrModel model;
};

inline SimEstimate make_estimate(std::size_t covered, std::size_t n, const SinrModel& model) {
  double q = static_cast<double>(covered) / static_cast<double>(n);
  return {q, std::sqrt(q * (1.0 - q) / static_cast<double>(n)), covered, n, model};
}

// Independent generator for realization k of a run keyed by seed; tag
// separates the geometry stream from the fading stream.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t k, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32), tag};
  return std::mt19937_64(seq);
}

// Recomputes every action for a new rho; geometry is untouched.
inline void apply_policy(NetworkRealization& real, double rho) {
  require(rho >= 0 && rho <= 1, errc::invalid_argument, "rho must lie in [0, 1]");
  real.rho = rho;
  for (auto& u : real.users) u.action = policy_action(u.r1, u.r2, rho);
  real.typical_action = policy_action(real.typical.r1, real.typical.r2, rho);
}

// Samples atoms, one user per cell and the typical geometry. Each user is a
// uniform point of its cell clipped to the window, drawn by rejection.
template <std::uniform_random_bit_generator G>
NetworkRealization build_realization(const SystemParams& params, const Window& window, G& rng,
                                     const SimOptions& options = {}) {
  params.check();
  require(window.area() * params.lambda >= 4.0, errc::invalid_argument,
          "window must hold at least 4 atoms on average");
  NetworkRealization real{{}, {}, {}, Action::NoCoop, window,
                          options.toroidal ? Metric::toroidal(window) : Metric{}, params.rho, 0,
                          options.interference_range};
  for (;;) {
    real.atoms = sample_ppp(params, window, rng);
    if (real.atoms.size() >= 2) break;
    if (static_cast<int>(++real.redraws) >= options.max_redraws) {
      throw error(errc::redraw_limit, "fewer than 2 atoms in " +
                                          std::to_string(options.max_redraws) + " windows");
    }
  }
  const std::size_t n = real.atoms.size();
  AtomIndex index(real.atoms, window, real.metric);
  real.users.resize(n);
  auto place = [&](std::size_t i, Point2 z) {
    TwoNearest tn = index.two_nearest(z);
    real.users[i] = {z, tn.i1, tn.i2, tn.r1, tn.r2, Action::NoCoop};
  };
  if (!options.toroidal) {
    // Proposals from the bounding box of each clipped cell, accepted when
    // the nearest atom is the cell's own.
    for (std::size_t i = 0; i < n; ++i) {
      detail::Box box = index.cell_box(i);
      std::uniform_real_distribution<double> ux(box.x0, box.x1);
      std::uniform_real_distribution<double> uy(box.y0, box.y1);
      for (std::uint64_t attempt = 0;; ++attempt) {
        if (attempt >= options.max_cell_attempts) {
          throw error(errc::cell_sampling_exhausted,
                      "cell " + std::to_string(i) + " without a user after " +
                          std::to_string(options.max_cell_attempts) + " proposals");
        }
        double x = ux(rng);
        Point2 z{x, uy(rng)};
        if (index.nearest(z) == i) {
          place(i, z);
          break;
        }
      }
    }
  } else {
    // Cells wrap around on the torus, so proposals come from the whole
    // window, each offered to the cell it lands in while that cell is empty.
    std::vector<char> filled(n, 0);
    std::size_t open = n;
    for (std::uint64_t attempt = 0; open > 0; ++attempt) {
      if (attempt >= options.max_cell_attempts) {
        throw error(errc::cell_sampling_exhausted,
                    std::to_string(open) + " cells without a user after " +
                        std::to_string(options.max_cell_attempts) + " proposals");
      }
      Point2 z = window.uniform_point(rng);
      std::size_t i = index.nearest(z);
      if (filled[i]) continue;
      filled[i] = 1;
      --open;
      place(i, z);
    }
  }
  real.typical = index.two_nearest(window.center());
  apply_policy(real, params.rho);
  return real;
}

namespace detail {

struct LinkDraw {
  double g1, g2, th1, th2;
};

template <std::uniform_random_bit_generator G>
LinkDraw draw_links(G& rng, double p) {
  std::exponential_distribution<double> gain(1.0 / p);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * pi);
  LinkDraw d;
  d.g1 = gain(rng);
  d.g2 = gain(rng);
  d.th1 = phase(rng);
  d.th2 = phase(rng);
  return d;
}

}  // namespace detail

struct LinkBudget {
  double signal = 0.0;
  double interference = 0.0;
};

// Received powers at the window center for fresh fading. Every atom consumes
// the same number of draws whatever the model, so runs that differ only in
// the model or in rho see identical fading.
template <std::uniform_random_bit_generator G>
LinkBudget typical_link(const NetworkRealization& real, const SystemParams& params,
                        const SinrModel& model, G& rng) {
  const double beta = params.beta;
  const TwoNearest& typ = real.typical;
  const Point2 o = real.window.center();
  const bool coop = real.typical_action == Action::FullCoop;

  detail::LinkDraw own = detail::draw_links(rng, params.p);
  double h1 = own.g1 * std::pow(typ.r1, -beta);
  double h2 = own.g2 * std::pow(typ.r2, -beta);
  LinkBudget out;
  out.signal = coop ? 0.5 * (std::sqrt(h1) + std::sqrt(h2)) * (std::sqrt(h1) + std::sqrt(h2)) : h1;

  auto silent = [&](std::size_t bs, double d) {
    return d > real.interference_range ||
           (model.dpc && coop && (bs == typ.i1 || bs == typ.i2));
  };
  for (std::size_t i = 0; i < real.atoms.size(); ++i) {
    detail::LinkDraw d = detail::draw_links(rng, params.p);
    if (i == typ.i1) continue;  // its user is the typical location itself
    const CellUser& u = real.users[i];
    double d1 = real.metric.d(real.atoms[u.b1_index], o);
    double d2 = model.distance == Distance::FarField ? d1
                                                     : real.metric.d(real.atoms[u.b2_index], o);
    if (u.action == Action::NoCoop) {
      if (!silent(u.b1_index, d1)) out.interference += d.g1 * std::pow(d1, -beta);
      continue;
    }
    bool on1 = !silent(u.b1_index, d1);
    // In the far-field picture both halves leave atom i.
    bool on2 = model.distance == Distance::FarField ? on1 : !silent(u.b2_index, d2);
    double p1 = on1 ? d.g1 * std::pow(d1, -beta) : 0.0;
    double p2 = on2 ? d.g2 * std::pow(d2, -beta) : 0.0;
    out.interference += 0.5 * (p1 + p2);
    if (model.phase == Phase::ExactTheta && on1 && on2) {
      out.interference += std::sqrt(p1 * p2) * std::cos(d.th1 - d.th2);
    }
  }
  return out;
}

template <std::uniform_random_bit_generator G>
double typical_sinr(const NetworkRealization& real, const SystemParams& params,
                    const SinrModel& model, G& rng) {
  LinkBudget link = typical_link(real, params, model, rng);
  double den = params.sigma2 + link.interference;
  return den > 0.0 ? link.signal / den : std::numeric_limits<double>::infinity();
}

struct SimGrid {
  std::vector<double> rhos;
  std::vector<double> thresholds;
  std::vector<SimEstimate> estimates;  // row-major: estimates[r * thresholds.size() + t]
  std::size_t redraws = 0;
  double mean_atoms = 0.0;

  const SimEstimate& at(std::size_t r, std::size_t t) const {
    return estimates[r * thresholds.size() + t];
  }
};

// Coverage for every (rho, T) pair from the same realizations and fading:
// realization k uses substream(seed, k, 0) for geometry and substream(seed,
// k, 1) for fading, so each entry equals a standalone run with that seed.
inline SimGrid estimate_coverage_grid(const SystemParams& params, const Window& window,
                                      const SinrModel& model, std::span<const double> rhos,
                                      std::span<const double> thresholds, std::size_t n,
                                      std::uint64_t seed, const SimOptions& options = {}) {
  params.check();
  require(n >= 1, errc::invalid_argument, "need at least one realization");
  require(!rhos.empty() && !thresholds.empty(), errc::invalid_argument, "empty grid");
  const std::size_t cells = rhos.size() * thresholds.size();
  const std::size_t chunk = 64;
  const std::size_t chunks = (n + chunk - 1) / chunk;
  struct Partial {
    std::vector<std::size_t> covered;
    std::size_t redraws = 0;
    std::size_t atoms = 0;
  };
  std::vector<Partial> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Partial& part = parts[c];
    part.covered.assign(cells, 0);
    for (std::size_t k = c * chunk; k < std::min(n, (c + 1) * chunk); ++k) {
      auto geo = substream(seed, k, 0);
      NetworkRealization real = build_realization(params, window, geo, options);
      part.redraws += real.redraws;
      part.atoms += real.atoms.size();
      for (std::size_t r = 0; r < rhos.size(); ++r) {
        apply_policy(real, rhos[r]);
        auto fade = substream(seed, k, 1);
        double sinr = typical_sinr(real, params.with_rho(rhos[r]), model, fade);
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
          if (sinr > thresholds[t]) ++part.covered[r * thresholds.size() + t];
        }
      }
    }
  });
  SimGrid grid{{rhos.begin(), rhos.end()}, {thresholds.begin(), thresholds.end()}, {}, 0, 0.0};
  std::vector<std::size_t> covered(cells, 0);
  std::size_t atoms = 0;
  for (const auto& part : parts) {
    for (std::size_t i = 0; i < cells; ++i) covered[i] += part.covered[i];
    grid.redraws += part.redraws;
    atoms += part.atoms;
  }
  grid.mean_atoms = static_cast<double>(atoms) / static_cast<double>(n);
  for (std::size_t i = 0; i < cells; ++i) grid.estimates.push_back(make_estimate(covered[i], n, model));
  return grid;
}

inline SimEstimate estimate_coverage(const SystemParams& params, const Window& window,
                                     const SinrModel& model, std::size_t n, std::uint64_t seed,
                                     const SimOptions& options = {}) {
  double rho = params.rho;
  double t = params.threshold_T;
  return estimate_coverage_grid(params, window, model, {&rho, 1}, {&t, 1}, n, seed, options)
      .estimates.front();
}

struct Raster {
  Window window;
  std::size_t nx = 0;
  std::size_t ny = 0;

  Point2 center(std::size_t ix, std::size_t iy) const {
    return {window.x_min() + (ix + 0.5) * window.width() / nx,
            window.y_min() + (iy + 0.5) * window.height() / ny};
  }
};

struct RasterCell {
  Point2 center;
  bool covered = false;
  Action action = Action::NoCoop;
  double sinr = 0.0;
  std::size_t b1_index = 0;
  std::size_t b2_index = 0;
};

// Fading-free SINR map: unit-mean gains, in-phase cooperative signal and
// phase-averaged interference from every user's true serving stations.
// Each pixel stands in for the user of its own cell.
inline std::vector<RasterCell> sinr_map(const NetworkRealization& real, const SystemParams& params,
                                        const Raster& raster) {
  params.check();
  require(raster.nx > 0 && raster.ny > 0, errc::invalid_argument, "empty raster");
  double pitch = std::max(raster.window.width() / raster.nx, raster.window.height() / raster.ny);
  require(pitch * std::sqrt(params.lambda) <= 0.5, errc::invalid_argument,
          "raster needs at least 2 pixels per 1/sqrt(lambda)");
  const double beta = params.beta;
  const double p = params.p;
  std::vector<Action> actions(real.users.size());
  for (std::size_t i = 0; i < real.users.size(); ++i) {
    actions[i] = policy_action(real.users[i].r1, real.users[i].r2, params.rho);
  }
  AtomIndex index(real.atoms, real.window, real.metric);
  std::vector<RasterCell> out;
  out.reserve(raster.nx * raster.ny);
  for (std::size_t iy = 0; iy < raster.ny; ++iy) {
    for (std::size_t ix = 0; ix < raster.nx; ++ix) {
      Point2 z = raster.center(ix, iy);
      TwoNearest tn = index.two_nearest(z);
      Action a = policy_action(tn.r1, tn.r2, params.rho);
      double h1 = p * std::pow(tn.r1, -beta);
      double h2 = p * std::pow(tn.r2, -beta);
      double s = a == Action::NoCoop ? h1
                                     : 0.5 * (std::sqrt(h1) + std::sqrt(h2)) *
                                           (std::sqrt(h1) + std::sqrt(h2));
      double interference = 0.0;
      for (std::size_t i = 0; i < real.users.size(); ++i) {
        if (i == tn.i1) continue;
        const CellUser& u = real.users[i];
        double q1 = p * std::pow(real.metric.d(real.atoms[u.b1_index], z), -beta);
        if (actions[i] == Action::NoCoop) {
          interference += q1;
        } else {
          interference += 0.5 * (q1 + p * std::pow(real.metric.d(real.atoms[u.b2_index], z), -beta));
        }
      }
      double den = params.sigma2 + interference;
      double sinr = den > 0.0 ? s / den : std::numeric_limits<double>::infinity();
      out.push_back({z, sinr > params.threshold_T, a, sinr, tn.i1, tn.i2});
    }
  }
  return out;
}

}  // namespace coopcov
