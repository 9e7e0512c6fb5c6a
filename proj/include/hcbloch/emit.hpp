#pragma once

// Command dispatch and result emission: one CSV table (header row, fixed
// column order, %.17g, '\n' line endings) plus a JSON sidecar holding the
// normalized config, seed, build identifier, conventions, checks and wall times.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hcbloch/bloch.hpp"
#include "hcbloch/capacity.hpp"
#include "hcbloch/cell_problems.hpp"
#include "hcbloch/config.hpp"
#include "hcbloch/experiments.hpp"
#include "hcbloch/parallel.hpp"

#ifndef HCBLOCH_GIT_DESCRIBE
#define HCBLOCH_GIT_DESCRIBE "unknown"
#endif

namespace hcbloch {

inline constexpr const char* kGitDescribe = HCBLOCH_GIT_DESCRIBE;

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitAssertion = 2 };

namespace detail {

inline PeriodicGrid config_grid(const RunConfig& c) { return make_grid(c.dim, std::span<const int>(c.n.data(), c.n.size())); }

inline ExperimentOptions experiment_options(const RunConfig& c) {
  ExperimentOptions o;
  o.resolution = ResolutionRule{c.resolution.cells_across, c.resolution.multiple, c.resolution.cap, c.resolution.n};
  o.mesh_check = c.mesh_check;
  o.seed = c.seed;
  return o;
}

inline ExperimentRow plain_row(std::vector<double> cells, double seconds) {
  ExperimentRow r;
  r.cells = std::move(cells);
  r.runtime_seconds = seconds;
  return r;
}

inline ExperimentTable run_homogenize(const RunConfig& c) {
  Stopwatch sw;
  const auto a = rasterize(c.microstructure.spec(), config_grid(c));
  const auto h = homogenized(a);
  ExperimentTable t;
  t.name = "homogenize";
  t.columns = {"i", "j", "q", "voigt", "corrector_residual"};
  const double secs = sw.seconds();
  for (int i = 0; i < h.d; ++i)
    for (int j = 0; j < h.d; ++j)
      t.rows.push_back(plain_row({double(i + 1), double(j + 1), h(i, j), h.voigt[static_cast<std::size_t>(i * h.d + j)], h.max_corrector_residual}, secs));
  bool voigt_ok = true;
  for (int i = 0; i < h.d; ++i) voigt_ok = voigt_ok && h(i, i) <= h.voigt[static_cast<std::size_t>(i * h.d + i)] * (1 + 1e-12);
  t.checks.push_back({"voigt_bound", voigt_ok, "q_ii <= mean(A)_ii"});
  t.checks.push_back({"corrector_residual", h.max_corrector_residual <= 1e-12, fmt(h.max_corrector_residual)});
  return t;
}

inline ExperimentTable run_bloch(const RunConfig& c) {
  const auto a = rasterize(c.microstructure.spec(), config_grid(c));
  ExperimentTable t;
  t.name = "bloch";
  t.columns = eta_columns(static_cast<std::size_t>(c.dim));
  t.columns.push_back("lambda1");
  for (int j = 2; j <= c.k; ++j) t.columns.push_back("lambda" + std::to_string(j));
  for (const char* s : {"residual", "iterations", "converged"}) t.columns.push_back(s);
  bool all_conv = true;
  for (const auto& eta : c.eta_list) {
    Stopwatch sw;
    auto o = seeded(a, c.seed);
    const auto r = bloch_lambda1(a, eta, c.k, &o);
    std::vector<double> cells(eta.begin(), eta.end());
    for (double v : r.eigenvalues) cells.push_back(v);
    cells.push_back(r.residual);
    cells.push_back(r.iterations);
    cells.push_back(r.converged ? 1.0 : 0.0);
    all_conv = all_conv && r.converged;
    auto row = plain_row(std::move(cells), sw.seconds());
    row.eta = eta;
    row.lambda1 = r.lambda1;
    row.iterations = r.iterations;
    t.rows.push_back(std::move(row));
  }
  t.checks.push_back({"converged", all_conv, "every eigensolve met its tolerance"});
  return t;
}

inline ExperimentTable run_dispersion(const RunConfig& c) {
  const auto a = rasterize(c.microstructure.spec(), config_grid(c));
  ExperimentTable t;
  t.name = "dispersion";
  t.columns = eta_columns(static_cast<std::size_t>(c.dim));
  t.columns.push_back("dispersion_value");
  t.columns.push_back("q_eta_eta");
  bool nonpos = true;
  for (const auto& eta : c.eta_list) {
    Stopwatch sw;
    const auto d = dispersion(a, eta);
    std::vector<double> cells(eta.begin(), eta.end());
    cells.push_back(d.value);
    cells.push_back(d.q_eta_eta);
    nonpos = nonpos && d.value <= 1e-12;
    auto row = plain_row(std::move(cells), sw.seconds());
    row.dispersion_value = d.value;
    row.q_eta_eta = d.q_eta_eta;
    t.rows.push_back(std::move(row));
  }
  t.checks.push_back({"non_positive", nonpos, "D(eta x eta):(eta x eta) <= 1e-12"});
  return t;
}

inline ExperimentTable run_pw_command(const RunConfig& c) {
  const auto a = rasterize(c.microstructure.spec(), config_grid(c));
  ExperimentTable t;
  t.name = "pw";
  t.columns = eta_columns(static_cast<std::size_t>(c.dim));
  t.columns.push_back("pw_constant");
  t.columns.push_back("iterations");
  for (const auto& lam : c.eta_list) {
    Stopwatch sw;
    const auto p = pw_constant(a, lam);
    std::vector<double> cells(lam.begin(), lam.end());
    cells.push_back(p.value);
    cells.push_back(p.iterations);
    t.rows.push_back(plain_row(std::move(cells), sw.seconds()));
  }
  return t;
}

inline ExperimentTable run_capacity(const RunConfig& c) {
  if (c.dim != 2) throw Error("capacity works on the 2D cross-section (dim: 2)");
  const auto g = config_grid(c);
  ExperimentTable t;
  t.name = "capacity";
  t.columns = {"eps", "n", "r_eps", "R", "analytic", "discrete", "discrete_rel_error", "rescaled_energy", "gamma", "rel_deviation"};
  std::vector<double> dev;
  double worst_energy = 0.0;
  for (double eps : c.eps_list) {
    Stopwatch sw;
    const double r = radius_for_gamma(eps, c.gamma);
    const auto e = annulus_energy(r, c.capacity_R, &g);
    const double scaled = rescaled_capacity_energy(eps, r, c.capacity_R, g);
    const double rel = std::abs(e.discrete - e.analytic) / e.analytic;
    worst_energy = std::max(worst_energy, rel);
    dev.push_back(std::abs(scaled - c.gamma) / c.gamma);
    auto row = plain_row({eps, double(g.cells(0)), r, c.capacity_R, e.analytic, e.discrete, rel, scaled, c.gamma, dev.back()}, sw.seconds());
    row.eps = eps;
    row.n = g.cells(0);
    row.gap = scaled;
    t.rows.push_back(std::move(row));
  }
  t.checks.push_back({"rescaled_energy_improving", strictly_decreasing(dev), "relative deviation from gamma decreasing in eps"});
  t.checks.push_back({"rescaled_energy_within_10pct", dev.back() <= 0.10, "at eps " + fmt(c.eps_list.back()) + ": " + fmt(dev.back())});
  return t;
}

}  // namespace detail

/// Run the configured command and return its table.
inline ExperimentTable run_config(const RunConfig& c) {
  switch (c.kind()) {
    case Command::homogenize: return detail::run_homogenize(c);
    case Command::bloch: return detail::run_bloch(c);
    case Command::dispersion: return detail::run_dispersion(c);
    case Command::pw: return detail::run_pw_command(c);
    case Command::capacity: return detail::run_capacity(c);
    case Command::experiment: break;
  }
  const auto opt = detail::experiment_options(c);
  const FiberOptions fib{c.gamma, c.beta_exponent};
  const auto exp = c.experiment();
  const auto& eta = c.eta_list.front();
  if (exp == "thm22") return run_thm22(c.eps_list, eta, opt);
  if (exp == "thm31") return run_thm31(c.eps_list, eta, fib, opt);
  if (exp == "gap_map") return run_gap_map(c.eps_list, eta, c.t_list, fib, opt);
  if (exp == "pw_thm22") return run_pw(c.eps_list, PwFamily::thm22, eta, fib, opt);
  return run_pw(c.eps_list, PwFamily::fiber, eta, fib, opt);
}

/// CSV text of a table: header, then one line per row, numbers as %.17g.
inline std::string to_csv(const ExperimentTable& t) {
  std::string s;
  for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
  s += '\n';
  char buf[40];
  for (const auto& r : t.rows) {
    if (r.cells.size() != t.columns.size()) throw Error("table " + t.name + ": row width does not match the header");
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
      if (!std::isfinite(r.cells[i])) throw Error("table " + t.name + ": non-finite value in column " + t.columns[i]);
      std::snprintf(buf, sizeof buf, "%.17g", r.cells[i]);
      if (i) s += ',';
      s += buf;
    }
    s += '\n';
  }
  return s;
}

inline nlohmann::json sidecar(const RunConfig& c, const ExperimentTable& t, double wall_seconds) {
  nlohmann::json j;
  j["tool"] = "hcbloch";
  j["git_describe"] = kGitDescribe;
  j["command"] = c.command;
  j["config"] = serialize_config(c);
  j["seed"] = c.seed;
  j["threads"] = parallel::threads();
  j["conventions"] = {{"q_normalization", c.q_normalization},
                      {"face_coefficient", "harmonic mean of adjacent cells"},
                      {"discretization", "cell-centered finite volumes, link phase exp(i eta_k h_k) per face"},
                      {"mass", "cell volume"},
                      {"dispersion", "D(eta x eta):(eta x eta), non-positive"}};
  const auto exp = c.experiment();
  if (exp == "thm22" || exp == "pw_thm22")
    j["family"] = "square inclusion of side rho = eps, beta = eps^-2: one admissible L1-bounded choice, not the only one";
  else if (!exp.empty())
    j["family"] = "fiber radius r = exp(-1 / (2 pi eps^2 gamma)), beta = r^-2 eps^-" + detail::fmt(c.beta_exponent);
  j["columns"] = t.columns;
  j["row_runtime_seconds"] = nlohmann::json::array();
  for (const auto& r : t.rows) j["row_runtime_seconds"].push_back(r.runtime_seconds);
  j["checks"] = nlohmann::json::array();
  for (const auto& ch : t.checks) j["checks"].push_back({{"name", ch.name}, {"passed", ch.passed}, {"gating", ch.gating}, {"detail", ch.detail}});
  j["passed"] = t.passed();
  j["wall_time_seconds"] = wall_seconds;
  return j;
}

/// Run, write <out>/<stem>.csv and <out>/<stem>.json, and map the outcome to an exit code.
inline int run_and_emit(const RunConfig& c, std::ostream& diag = std::cerr) {
  try {
    detail::Stopwatch sw;
    const auto t = run_config(c);
    const double wall = sw.seconds();
    const std::filesystem::path dir(c.output);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    const auto csv_path = dir / (c.stem() + ".csv");
    const auto json_path = dir / (c.stem() + ".json");
    {
      std::ofstream f(csv_path, std::ios::binary);
      if (!f) throw Error("cannot write " + csv_path.string());
      f << to_csv(t);
      if (!f) throw Error("write failed: " + csv_path.string());
    }
    {
      std::ofstream f(json_path, std::ios::binary);
      if (!f) throw Error("cannot write " + json_path.string());
      f << sidecar(c, t, wall).dump(2) << '\n';
      if (!f) throw Error("write failed: " + json_path.string());
    }
    for (const auto& ch : t.checks)
      if (!ch.passed) diag << (ch.gating ? "assertion failed: " : "advisory: ") << ch.name << " (" << ch.detail << ")\n";
    return t.passed() ? kExitOk : kExitAssertion;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace hcbloch
