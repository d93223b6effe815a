// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "coopcov/coopcov.hpp"

namespace coopcov::cli {

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

struct Settings {
  SystemParams params;
  QuadratureConfig quad;
  double area = 20.0;
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  std::string model = "mean-theta,far-field";
  bool dpc = false;
  bool toroidal = false;
  SimOptions limits;
  std::string format = "csv";
  std::string out_path;
  std::vector<double> rhos;
  std::vector<double> thresholds;
  // subcommand specific
  bool optimize = false;
  bool compare = false;
  std::optional<std::uint64_t> realization_seed;
  std::size_t pixels = 200;
  std::vector<double> s_grid;
  double r2 = 1.0;
};

SinrModel parse_model(const std::string& text, bool dpc) {
  SinrModel m;
  m.dpc = dpc;
  bool phase_set = false, distance_set = false;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "exact-theta" || tok == "mean-theta") {
      require(!phase_set, errc::invalid_argument, "phase given twice in --model");
      m.phase = tok == "exact-theta" ? Phase::ExactTheta : Phase::MeanTheta;
      phase_set = true;
    } else if (tok == "far-field" || tok == "exact") {
      require(!distance_set, errc::invalid_argument, "distance given twice in --model");
      m.distance = tok == "far-field" ? Distance::FarField : Distance::Exact;
      distance_set = true;
    } else if (tok == "dpc") {
      m.dpc = true;
    } else {
      throw error(errc::invalid_argument, "unknown --model token '" + tok + "'");
    }
  }
  return m;
}

std::vector<double> or_default(const std::vector<double>& given, std::vector<double> fallback) {
  std::vector<double> g = given.empty() ? std::move(fallback) : given;
  check_grid(g);
  return g;
}

void check_settings(const Settings& s) {
  s.params.check();
  s.quad.check();
  require(std::isfinite(s.area) && s.area > 0, errc::invalid_argument, "area must be positive");
  require(s.n >= 1, errc::invalid_argument, "need at least one realization");
  require(s.pixels >= 1, errc::invalid_argument, "need at least one pixel");
}

Table cmd_coverage(const Settings& s) {
  auto rhos = or_default(s.rhos, linear_grid(0.0, 1.0, 21));
  CoverageCurve curve = sweep_rho(s.params, rhos, s.quad, s.dpc);
  Table t{{"rho", "qc", "qc1", "qc2"}, {}};
  for (const auto& pt : curve.points) {
    t.rows.push_back({pt.x, clip_probability(pt.qc), clip_probability(pt.qc1),
                      clip_probability(pt.qc2)});
  }
  return t;
}

Table cmd_sweep_rho(const Settings& s) {
  auto rhos = or_default(s.rhos, linear_grid(0.0, 1.0, 21));
  auto ts = or_default(s.thresholds, {s.params.threshold_T});
  Table t{{"T", "rho", "qc", "qc1", "qc2"}, {}};
  for (double T : ts) {
    CoverageCurve curve = sweep_rho(s.params.with_threshold(T), rhos, s.quad, s.dpc);
    for (const auto& pt : curve.points) {
      t.rows.push_back({T, pt.x, clip_probability(pt.qc), clip_probability(pt.qc1),
                        clip_probability(pt.qc2)});
    }
  }
  return t;
}

Table cmd_sweep_threshold(const Settings& s) {
  auto ts = or_default(s.thresholds, log_grid(0.05, 10.0, 40));
  CoverageCurve curve = sweep_threshold(s.params, ts, s.quad, s.dpc, s.optimize);
  Table t{{"T", "qc_nocoop", "qc_fullcoop", "qc_opt", "rho_star", "gain"}, {}};
  for (const auto& pt : curve.points) {
    double opt = clip_probability(pt.qc), nocoop = clip_probability(pt.qc_nocoop);
    t.rows.push_back({pt.x, nocoop, clip_probability(pt.qc_fullcoop), opt, pt.rho, opt - nocoop});
  }
  return t;
}

Table cmd_simulate(const Settings& s, std::ostream& err) {
  SinrModel model = parse_model(s.model, s.dpc);
  auto rhos = or_default(s.rhos, {s.params.rho});
  auto ts = or_default(s.thresholds, {s.params.threshold_T});
  SimOptions options = s.limits;
  options.toroidal = s.toroidal;
  SimGrid grid =
      estimate_coverage_grid(s.params, Window::square(s.area), model, rhos, ts, s.n, s.seed, options);
  Table t{{"rho", "T", "n", "covered", "coverage", "std_error", "model", "analytic", "z",
           "edge_warning"},
          {}};
  std::optional<CoverageEngine> engine;
  if (s.compare) engine.emplace(s.params.beta, s.quad);
  for (std::size_t r = 0; r < rhos.size(); ++r) {
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const SimEstimate& e = grid.at(r, k);
      std::vector<Field> row{rhos[r],
                             ts[k],
                             static_cast<std::int64_t>(e.n_realizations),
                             static_cast<std::int64_t>(e.covered),
                             e.coverage,
                             e.std_error,
                             to_string(model)};
      if (engine) {
        SystemParams at = s.params.with_rho(rhos[r]).with_threshold(ts[k]);
        double analytic = clip_probability(engine->evaluate(at, model.dpc).qc);
        double diff = e.coverage - analytic;
        double z = e.std_error > 0 ? diff / e.std_error
                   : diff == 0.0   ? 0.0
                                   : std::copysign(std::numeric_limits<double>::infinity(), diff);
        bool warn = std::abs(z) >= 3.0;
        if (warn) {
          err << "warning: rho=" << format_double(rhos[r]) << " T=" << format_double(ts[k])
              << " z=" << format_double(z)
              << ": simulation and analysis disagree; the finite window drops far interference"
              << (diff > 0 ? " (simulation above analysis)" : "") << "\n";
        }
        row.insert(row.end(), {analytic, z, static_cast<std::int64_t>(warn)});
      } else {
        row.insert(row.end(), {std::monostate{}, std::monostate{}, std::monostate{}});
      }
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

Table cmd_region(const Settings& s) {
  std::uint64_t seed = s.realization_seed.value_or(s.seed);
  auto rng = substream(seed, 0, 0);
  SimOptions options = s.limits;
  options.toroidal = s.toroidal;
  NetworkRealization real = build_realization(s.params, Window::square(s.area), rng, options);
  Raster raster{real.window, s.pixels, s.pixels};
  std::vector<RasterCell> map = sinr_map(real, s.params, raster);

  Table t{{"record", "x", "y", "sinr", "covered", "action", "b1", "b2", "radius"}, {}};
  const std::monostate none;
  for (std::size_t i = 0; i < real.atoms.size(); ++i) {
    t.rows.push_back({std::string("atom"), real.atoms[i].x, real.atoms[i].y, none, none, none,
                      static_cast<std::int64_t>(i), none, none});
  }
  for (const RasterCell& px : map) {
    t.rows.push_back({std::string("pixel"), px.center.x, px.center.y, px.sinr,
                      static_cast<std::int64_t>(px.covered), std::string(to_string(px.action)),
                      static_cast<std::int64_t>(px.b1_index), static_cast<std::int64_t>(px.b2_index),
                      none});
  }
  // Each Delaunay pair gives one disc per station as the nearer one.
  for (std::size_t i = 0; i < real.atoms.size(); ++i) {
    for (std::size_t j = i + 1; j < real.atoms.size(); ++j) {
      if (!is_delaunay_pair(real.atoms[i], real.atoms[j], real.atoms)) continue;
      for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
        CoopDisc d = coop_disc(real.atoms[a], real.atoms[b], s.params.rho);
        t.rows.push_back({std::string("disc"), d.center.x, d.center.y, none, none, none,
                          static_cast<std::int64_t>(a), static_cast<std::int64_t>(b), d.radius});
      }
    }
  }
  return t;
}

Table cmd_interference(const Settings& s) {
  auto grid = or_default(s.s_grid, log_grid(0.01, 100.0, 9));
  Table t{{"s", "r2", "rho", "li", "li_dpc", "mean", "mean_dpc"}, {}};
  const SystemParams& p = s.params;
  double mean = mean_interference(p.rho, s.r2, p);
  double mean_dpc = mean_interference_dpc(p.rho, s.r2, p);
  for (double v : grid) {
    require(v >= 0, errc::invalid_argument, "s must be nonnegative");
    t.rows.push_back({v, s.r2, p.rho, li(v, p.rho, s.r2, p).value.real(),
                      li_dpc(v, p.rho, s.r2, p).value.real(), mean, mean_dpc});
  }
  return t;
}

int exit_for(errc code) {
  if (code == errc::invalid_argument || code == errc::wrong_exponent) return config_error;
  if (is_simulation_error(code)) return simulation_error;
  return numerical_error;
}

}  // namespace

void write_csv(const Table& t, std::ostream& out) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      std::visit(
          [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, double>) {
              out << format_double(v);
            } else if constexpr (std::is_same_v<V, std::int64_t>) {
              out << v;
            } else if constexpr (std::is_same_v<V, std::string>) {
              out << csv_escape(v);
            }
          },
          row[i]);
    }
    out << "\n";
  }
}

void write_json(const Table& t, std::ostream& out) {
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json rec = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::visit(
          [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::monostate>) {
              rec[t.columns[i]] = nullptr;
            } else {
              rec[t.columns[i]] = v;  // non-finite doubles serialize as null
            }
          },
          row[i]);
    }
    records.push_back(std::move(rec));
  }
  out << records.dump(2) << "\n";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Coverage of cellular networks with two-station cooperation"};
  app.set_config("--config", "", "Flat key = value file with any of the long options");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--lambda", s.params.lambda, "Station intensity")->capture_default_str();
  app.add_option("--beta", s.params.beta, "Path-loss exponent")->capture_default_str();
  app.add_option("--p", s.params.p, "Transmit power")->capture_default_str();
  app.add_option("--sigma2", s.params.sigma2, "Noise power")->capture_default_str();
  app.add_option("-T,--threshold", s.params.threshold_T, "SINR threshold")->capture_default_str();
  app.add_option("--rho", s.params.rho, "Cooperation parameter")->capture_default_str();
  app.add_option("--rhos", s.rhos, "Comma-separated rho grid")->delimiter(',');
  app.add_option("--thresholds", s.thresholds, "Comma-separated threshold grid")->delimiter(',');
  app.add_option("--area", s.area, "Simulation window area (square)")->capture_default_str();
  app.add_option("-n,--realizations", s.n, "Monte Carlo realizations")->capture_default_str();
  app.add_option("--seed", s.seed, "Random seed")->capture_default_str();
  app.add_option("--model", s.model, "Phase and distance model, e.g. exact-theta,exact")
      ->capture_default_str();
  app.add_flag("--dpc", s.dpc, "Cancel the second station's interference");
  app.add_flag("--torus", s.toroidal, "Wrap distances around the simulation window");
  app.add_option("--max-redraws", s.limits.max_redraws, "Windows redrawn when under 2 stations")
      ->capture_default_str();
  app.add_option("--max-cell-attempts", s.limits.max_cell_attempts,
                 "Rejection attempts per user placement")
      ->capture_default_str();
  app.add_option("--format", s.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--out", s.out_path, "Output file (default: standard output)");
  app.add_option("--rel-tol", s.quad.rel_tol, "Quadrature relative tolerance")->capture_default_str();
  app.add_option("--abs-tol", s.quad.abs_tol, "Quadrature absolute tolerance")->capture_default_str();
  app.add_option("--r-max-factor", s.quad.r_max_factor, "Outer radius in units of 1/sqrt(lambda)")
      ->capture_default_str();

  std::function<Table()> command;
  auto* coverage = app.add_subcommand("coverage", "Analytic coverage over a rho grid");
  coverage->callback([&] { command = [&] { return cmd_coverage(s); }; });
  auto* sweep_rho_cmd = app.add_subcommand("sweep-rho", "Analytic coverage over rho and T grids");
  sweep_rho_cmd->callback([&] { command = [&] { return cmd_sweep_rho(s); }; });
  auto* sweep_t = app.add_subcommand("sweep-threshold", "No-cooperation, full-cooperation and best coverage over T");
  sweep_t->add_flag("--optimize-rho", s.optimize, "Optimize rho at every threshold");
  sweep_t->callback([&] { command = [&] { return cmd_sweep_threshold(s); }; });
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo coverage estimate");
  simulate->add_flag("--compare", s.compare, "Report the analytic value and z-score");
  simulate->callback([&] { command = [&] { return cmd_simulate(s, err); }; });
  auto* region = app.add_subcommand("region", "SINR raster and cooperation discs of one realization");
  region->add_option("--realization-seed", s.realization_seed, "Seed of the realization");
  region->add_option("--pixels", s.pixels, "Raster pixels per side")->capture_default_str();
  region->callback([&] { command = [&] { return cmd_region(s); }; });
  auto* interf = app.add_subcommand("interference", "Interference transform and mean");
  interf->add_option("--s", s.s_grid, "Comma-separated transform arguments")->delimiter(',');
  interf->add_option("--r2", s.r2, "Exclusion radius")->capture_default_str();
  interf->callback([&] { command = [&] { return cmd_interference(s); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return config_error;
  }

  try {
    check_settings(s);
    Table table = command();
    std::ostringstream buf;
    if (s.format == "json") {
      write_json(table, buf);
    } else {
      write_csv(table, buf);
    }
    if (s.out_path.empty()) {
      out << buf.str();
    } else {
      std::ofstream file(s.out_path, std::ios::binary);
      file << buf.str();
      if (!file) {
        err << "error: cannot write " << s.out_path << "\n";
        return config_error;
      }
    }
  } catch (const error& e) {
    err << "error: " << e.what() << "\n";
    return exit_for(e.code());
  }
  return ok;
}

}  // namespace coopcov::cli
