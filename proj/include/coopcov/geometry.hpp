// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coopcov/errors.hpp"
#include "coopcov/params.hpp"

namespace coopcov {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double dist2(Point2 a, Point2 b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double dist(Point2 a, Point2 b) { return std::sqrt(dist2(a, b)); }

// Axis-aligned observation window.
class Window {
 public:
  Window(double x_min, double x_max, double y_min, double y_max)
      : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
    require(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) &&
                std::isfinite(y_max),
            errc::invalid_argument, "window bounds must be finite");
    require(x_min < x_max && y_min < y_max, errc::invalid_argument,
            "window must have positive area");
  }

  // Square of the given area centered at the origin.
  static Window square(double area) {
    require(area > 0, errc::invalid_argument, "window area must be positive");
    double h = 0.5 * std::sqrt(area);
    return Window(-h, h, -h, h);
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }
  double area() const { return width() * height(); }
  Point2 center() const { return {0.5 * (x_min_ + x_max_), 0.5 * (y_min_ + y_max_)}; }

  bool contains(Point2 q) const {
    return q.x >= x_min_ && q.x <= x_max_ && q.y >= y_min_ && q.y <= y_max_;
  }

  template <std::uniform_random_bit_generator G>
  Point2 uniform_point(G& rng) const {
    std::uniform_real_distribution<double> ux(x_min_, x_max_);
    std::uniform_real_distribution<double> uy(y_min_, y_max_);
    double x = ux(rng);
    return {x, uy(rng)};
  }

 private:
  double x_min_, x_max_, y_min_, y_max_;
};

// Planar distance, or distance on the torus obtained by gluing opposite
// window edges.
class Metric {
 public:
  Metric() = default;
  static Metric toroidal(const Window& w) {
    Metric m;
    m.wrap_ = true;
    m.lx_ = w.width();
    m.ly_ = w.height();
    return m;
  }

  bool is_toroidal() const { return wrap_; }

  double d2(Point2 a, Point2 b) const {
    double dx = std::abs(a.x - b.x);
    double dy = std::abs(a.y - b.y);
    if (wrap_) {
      dx = std::min(dx, lx_ - dx);
      dy = std::min(dy, ly_ - dy);
    }
    return dx * dx + dy * dy;
  }

  double d(Point2 a, Point2 b) const { return std::sqrt(d2(a, b)); }

 private:
  bool wrap_ = false;
  double lx_ = 0.0;
  double ly_ = 0.0;
};

struct TwoNearest {
  Point2 b1;
  Point2 b2;
  double r1 = 0.0;
  double r2 = 0.0;
  std::size_t i1 = 0;  // index of b1 in the atom list
  std::size_t i2 = 0;  // index of b2 in the atom list
};

struct Line {
  double a, b, c;  // a*x + b*y = c
};

struct CoopDisc {
  Point2 center;
  double radius = 0.0;
  std::optional<Line> degenerate_line;  // set iff rho == 1
};

enum class Action { NoCoop, FullCoop };

inline const char* to_string(Action a) { return a == Action::NoCoop ? "NoCoop" : "FullCoop"; }

// Homogeneous Poisson point process restricted to the window.
template <std::uniform_random_bit_generator G>
std::vector<Point2> sample_ppp(const SystemParams& params, const Window& window, G& rng) {
  require(std::isfinite(params.lambda) && params.lambda > 0, errc::invalid_argument,
          "lambda must be positive");
  std::poisson_distribution<std::int64_t> count(params.lambda * window.area());
  std::int64_t n = count(rng);
  std::vector<Point2> atoms;
  atoms.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) atoms.push_back(window.uniform_point(rng));
  return atoms;
}

namespace detail {

// Keeps the two smallest (distance^2, index) pairs, ordered lexicographically.
struct BestTwo {
  double d1 = std::numeric_limits<double>::infinity();
  double d2 = std::numeric_limits<double>::infinity();
  std::size_t i1 = std::numeric_limits<std::size_t>::max();
  std::size_t i2 = std::numeric_limits<std::size_t>::max();

  void offer(double d, std::size_t i) {
    if (d < d1 || (d == d1 && i < i1)) {
      d2 = d1;
      i2 = i1;
      d1 = d;
      i1 = i;
    } else if (d < d2 || (d == d2 && i < i2)) {
      d2 = d;
      i2 = i;
    }
  }
};

inline TwoNearest to_two_nearest(const BestTwo& best, std::span<const Point2> atoms) {
  return {atoms[best.i1], atoms[best.i2], std::sqrt(best.d1), std::sqrt(best.d2), best.i1,
          best.i2};
}

}  // namespace detail

// Brute-force scan; ties go to the lower atom index.
inline TwoNearest two_nearest(Point2 query, std::span<const Point2> atoms,
                              const Metric& metric = {}) {
  require(atoms.size() >= 2, errc::insufficient_atoms,
          "need at least 2 atoms, got " + std::to_string(atoms.size()));
  detail::BestTwo best;
  for (std::size_t i = 0; i < atoms.size(); ++i) best.offer(metric.d2(query, atoms[i]), i);
  return detail::to_two_nearest(best, atoms);
}

namespace detail {

struct Box {
  double x0, x1, y0, y1;
};

// Keeps the part of a convex polygon with nx*x + ny*y <= c.
inline std::vector<Point2> clip_halfplane(const std::vector<Point2>& poly, double nx, double ny,
                                          double c) {
  std::vector<Point2> out;
  out.reserve(poly.size() + 1);
  for (std::size_t k = 0; k < poly.size(); ++k) {
    Point2 a = poly[k];
    Point2 b = poly[(k + 1) % poly.size()];
    double fa = nx * a.x + ny * a.y - c;
    double fb = nx * b.x + ny * b.y - c;
    if (fa <= 0) out.push_back(a);
    if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0)) {
      double t = fa / (fa - fb);
      out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  return out;
}

}  // namespace detail

// Uniform bucket grid over the window for nearest-atom queries. Answers are
// identical to the brute-force scan, tie rule included.
class AtomIndex {
 public:
  AtomIndex(std::span<const Point2> atoms, const Window& window, const Metric& metric = {})
      : atoms_(atoms), window_(window), metric_(metric) {
    double per_bucket = 2.0;
    double n = std::max<double>(1.0, static_cast<double>(atoms.size()) / per_bucket);
    double side = std::sqrt(window.area() / n);
    nx_ = std::max(1, static_cast<int>(window.width() / side));
    ny_ = std::max(1, static_cast<int>(window.height() / side));
    cw_ = window.width() / nx_;
    ch_ = window.height() / ny_;
    start_.assign(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
    std::vector<std::size_t> cell(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      cell[i] = bucket_of(atoms[i]);
      ++start_[cell[i] + 1];
    }
    for (std::size_t b = 1; b < start_.size(); ++b) start_[b] += start_[b - 1];
    items_.resize(atoms.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < atoms.size(); ++i) items_[fill[cell[i]]++] = i;
  }

  std::size_t size() const { return atoms_.size(); }
  std::span<const Point2> atoms() const { return atoms_; }
  const Metric& metric() const { return metric_; }

  std::size_t nearest(Point2 q) const {
    require(!atoms_.empty(), errc::insufficient_atoms, "no atoms");
    return search(q, 1).i1;
  }

  TwoNearest two_nearest(Point2 q) const {
    require(atoms_.size() >= 2, errc::insufficient_atoms,
            "need at least 2 atoms, got " + std::to_string(atoms_.size()));
    return detail::to_two_nearest(search(q, 2), atoms_);
  }

  // Bounding box of the planar 1-Voronoi cell of atom i clipped to the
  // window, from half-plane clipping by every atom within twice the current
  // cell radius.
  detail::Box cell_box(std::size_t i) const {
    require(i < atoms_.size(), errc::invalid_argument, "atom index out of range");
    const Point2 a = atoms_[i];
    std::vector<Point2> poly{{window_.x_min(), window_.y_min()},
                             {window_.x_max(), window_.y_min()},
                             {window_.x_max(), window_.y_max()},
                             {window_.x_min(), window_.y_max()}};
    auto [cx, cy] = coords(a);
    double cell = std::min(cw_, ch_);
    for (int r = 0; r <= std::max(nx_, ny_); ++r) {
      for (int dy = -r; dy <= r; ++dy) {
        bool edge_row = (dy == -r || dy == r);
        for (int dx = -r; dx <= r; dx += edge_row ? 1 : 2 * r) {
          int bx = cx + dx;
          int by = cy + dy;
          if (bx >= 0 && by >= 0 && bx < nx_ && by < ny_) {
            std::size_t b = static_cast<std::size_t>(by) * nx_ + bx;
            for (std::size_t k = start_[b]; k < start_[b + 1]; ++k) {
              Point2 q = atoms_[items_[k]];
              if (items_[k] == i || q == a) continue;
              poly = detail::clip_halfplane(poly, q.x - a.x, q.y - a.y,
                                            0.5 * (dist2(q, {}) - dist2(a, {})));
            }
          }
          if (r == 0) break;
        }
      }
      double reach = 0.0;
      for (Point2 v : poly) reach = std::max(reach, dist2(v, a));
      if (r * cell > 2.0 * std::sqrt(reach)) break;
    }
    detail::Box box{a.x, a.x, a.y, a.y};
    for (Point2 v : poly) {
      box.x0 = std::min(box.x0, v.x);
      box.x1 = std::max(box.x1, v.x);
      box.y0 = std::min(box.y0, v.y);
      box.y1 = std::max(box.y1, v.y);
    }
    // Pad against rounding in the clipping, staying inside the window.
    double pad = 1e-9 * (window_.width() + window_.height());
    return {std::max(window_.x_min(), box.x0 - pad), std::min(window_.x_max(), box.x1 + pad),
            std::max(window_.y_min(), box.y0 - pad), std::min(window_.y_max(), box.y1 + pad)};
  }

 private:
  std::size_t bucket_of(Point2 q) const {
    auto [cx, cy] = coords(q);
    return static_cast<std::size_t>(cy) * nx_ + cx;
  }

  std::pair<int, int> coords(Point2 q) const {
    int cx = static_cast<int>(std::floor((q.x - window_.x_min()) / cw_));
    int cy = static_cast<int>(std::floor((q.y - window_.y_min()) / ch_));
    return {std::clamp(cx, 0, nx_ - 1), std::clamp(cy, 0, ny_ - 1)};
  }

  void scan_bucket(int bx, int by, Point2 q, detail::BestTwo& best) const {
    std::size_t b = static_cast<std::size_t>(by) * nx_ + bx;
    for (std::size_t k = start_[b]; k < start_[b + 1]; ++k) {
      std::size_t i = items_[k];
      best.offer(metric_.d2(q, atoms_[i]), i);
    }
  }

  detail::BestTwo brute(Point2 q) const {
    detail::BestTwo best;
    for (std::size_t i = 0; i < atoms_.size(); ++i) best.offer(metric_.d2(q, atoms_[i]), i);
    return best;
  }

  detail::BestTwo search(Point2 q, int k) const {
    // Queries outside the window (planar only) fall back to a full scan.
    if (!window_.contains(q)) return brute(q);
    auto [cx, cy] = coords(q);
    int max_ring = std::max(nx_, ny_);
    if (metric_.is_toroidal()) max_ring = (std::min(nx_, ny_) - 1) / 2;
    detail::BestTwo best;
    double cell = std::min(cw_, ch_);
    for (int r = 0; r <= max_ring; ++r) {
      for (int dy = -r; dy <= r; ++dy) {
        bool edge_row = (dy == -r || dy == r);
        for (int dx = -r; dx <= r; dx += edge_row ? 1 : 2 * r) {
          int bx = cx + dx;
          int by = cy + dy;
          if (metric_.is_toroidal()) {
            bx = (bx % nx_ + nx_) % nx_;
            by = (by % ny_ + ny_) % ny_;
          } else if (bx < 0 || by < 0 || bx >= nx_ || by >= ny_) {
            if (r == 0) break;
            continue;
          }
          scan_bucket(bx, by, q, best);
          if (r == 0) break;
        }
      }
      // Buckets in ring r+1 are at least r*cell away from q.
      double kth = k == 1 ? best.d1 : best.d2;
      double reach = r * cell;
      if (std::isfinite(kth) && reach * reach > kth) return best;
    }
    return metric_.is_toroidal() ? brute(q) : best;
  }

  std::span<const Point2> atoms_;
  Window window_;
  Metric metric_;
  int nx_ = 1, ny_ = 1;
  double cw_ = 1.0, ch_ = 1.0;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> items_;
};

namespace detail {

inline std::size_t index_of(Point2 p, std::span<const Point2> atoms) {
  auto it = std::find(atoms.begin(), atoms.end(), p);
  require(it != atoms.end(), errc::invalid_argument, "point is not an atom");
  return static_cast<std::size_t>(it - atoms.begin());
}

}  // namespace detail

// Point whose two nearest atoms are exactly {a, b}, if one exists. Candidate
// witnesses are centers of circles through a and b, i.e. points m + t*n on the
// perpendicular bisector; each other atom k must lie strictly outside, which
// is a linear condition on t. The feasible set is an open interval.
inline std::optional<Point2> delaunay_witness(Point2 a, Point2 b, std::span<const Point2> atoms) {
  require(!(a == b), errc::invalid_pair, "a and b coincide");
  std::size_t ia = detail::index_of(a, atoms);
  std::size_t ib = detail::index_of(b, atoms);
  Point2 m{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  double len = dist(a, b);
  Point2 n{-(b.y - a.y) / len, (b.x - a.x) / len};
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double base = dist2(m, a);
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    if (k == ia || k == ib) continue;
    Point2 q = atoms[k];
    // |c-q|^2 - |c-a|^2 = alpha + slope*t for c = m + t*n.
    double alpha = dist2(m, q) - base;
    double slope = 2.0 * (n.x * (a.x - q.x) + n.y * (a.y - q.y));
    double scale = 1e-12 * (base + dist2(m, q));
    if (std::abs(slope) <= 1e-15 * len) {
      if (alpha <= scale) return std::nullopt;
    } else if (slope > 0) {
      lo = std::max(lo, -alpha / slope);
    } else {
      hi = std::min(hi, -alpha / slope);
    }
    if (!(lo < hi)) return std::nullopt;
  }
  double t = 0.0;
  if (std::isfinite(lo) && std::isfinite(hi)) {
    t = 0.5 * (lo + hi);
  } else if (std::isfinite(lo)) {
    t = lo + len + std::abs(lo);
  } else if (std::isfinite(hi)) {
    t = hi - len - std::abs(hi);
  }
  return Point2{m.x + t * n.x, m.y + t * n.y};
}

// True iff the 2-Voronoi cell of {a, b} is non-empty.
inline bool is_delaunay_pair(Point2 a, Point2 b, std::span<const Point2> atoms) {
  return delaunay_witness(a, b, atoms).has_value();
}

// Locus where r1 <= rho * r2, with b1 the nearer and b2 the farther station.
inline CoopDisc coop_disc(Point2 b1, Point2 b2, double rho) {
  require(!(b1 == b2), errc::invalid_pair, "b1 and b2 coincide");
  require(rho >= 0 && rho <= 1, errc::invalid_argument, "rho must lie in [0, 1]");
  CoopDisc disc;
  if (rho == 1.0) {
    disc.center = {0.5 * (b1.x + b2.x), 0.5 * (b1.y + b2.y)};
    disc.radius = std::numeric_limits<double>::infinity();
    disc.degenerate_line = Line{b2.x - b1.x, b2.y - b1.y,
                                0.5 * (b2.x * b2.x - b1.x * b1.x + b2.y * b2.y - b1.y * b1.y)};
    return disc;
  }
  double r2 = rho * rho;
  double den = 1.0 - r2;
  disc.center = {(b1.x - b2.x * r2) / den, (b1.y - b2.y * r2) / den};
  disc.radius = rho * dist(b1, b2) / den;
  return disc;
}

inline Action policy_action(double r1, double r2, double rho) {
  require(r1 >= 0 && r1 <= r2, errc::invalid_geometry,
          "need 0 <= r1 <= r2, got r1=" + std::to_string(r1) + " r2=" + std::to_string(r2));
  return r1 <= rho * r2 ? Action::NoCoop : Action::FullCoop;
}

// Gain ratio above which full cooperation beats serving alone: root of
// x + 2 sqrt(x) - 1 = 0.
inline constexpr double full_coop_gain_ratio = 0.17157287525380990239662255158060;  // 3 - 2 sqrt 2

inline Action optimal_action_threshold(double gain_ratio) {
  require(gain_ratio >= 0 && gain_ratio <= 1, errc::invalid_ratio,
          "gain ratio must lie in [0, 1], got " + std::to_string(gain_ratio));
  return gain_ratio >= full_coop_gain_ratio ? Action::FullCoop : Action::NoCoop;
}

// Distance ratio r1/r2 at which the optimal action switches, for fading-free gains.
inline double full_coop_distance_ratio(double beta) {
  return std::pow(full_coop_gain_ratio, 1.0 / beta);
}

inline Action optimal_action_by_distance(double r1, double r2, double beta) {
  require(r1 >= 0 && r1 <= r2, errc::invalid_geometry, "need 0 <= r1 <= r2");
  return r1 >= full_coop_distance_ratio(beta) * r2 ? Action::FullCoop : Action::NoCoop;
}

inline constexpr std::uint64_t default_cell_attempts = 1'000'000;

// Uniform point of the 1-Voronoi cell of atoms[bs] clipped to the window.
template <std::uniform_random_bit_generator G>
Point2 sample_user_in_cell(std::size_t bs, std::span<const Point2> atoms, const Window& window,
                           G& rng, std::uint64_t max_attempts = default_cell_attempts,
                           const Metric& metric = {}) {
  require(bs < atoms.size(), errc::invalid_argument, "station index out of range");
  for (std::uint64_t attempt = 0; attempt < max_attempts; ++attempt) {
    Point2 z = window.uniform_point(rng);
    detail::BestTwo best;
    for (std::size_t i = 0; i < atoms.size(); ++i) best.offer(metric.d2(z, atoms[i]), i);
    if (best.i1 == bs) return z;
  }
  throw error(errc::cell_sampling_exhausted,
              "no point of cell " + std::to_string(bs) + " after " +
                  std::to_string(max_attempts) + " attempts");
}

}  // namespace coopcov
