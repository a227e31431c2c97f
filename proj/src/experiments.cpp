#include "vmse/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vmse/csv.hpp"
#include "vmse/error.hpp"
#include "vmse/wigner.hpp"

namespace vmse {

using nlohmann::json;

void StageTimer::record(const std::string& stage, std::chrono::steady_clock::time_point start) {
  const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
  stages_.emplace_back(stage, d.count());
}

json StageTimer::to_json() const {
  json out = json::array();
  for (const auto& [stage, seconds] : stages_) out.push_back({{"stage", stage}, {"seconds", seconds}});
  return out;
}

std::string eps_tag(double eps) {
  const double n = -std::log2(eps);
  char buf[64];
  if (n > 0 && n == std::round(n)) {
    std::snprintf(buf, sizeof buf, "eps2m%d", static_cast<int>(n));
  } else {
    std::snprintf(buf, sizeof buf, "eps%g", eps);
  }
  return buf;
}

namespace {

std::string gamma_tag(double gamma) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "gamma%g", gamma);
  return buf;
}

std::vector<double> with_final_time(std::vector<double> times, double T) {
  times.push_back(T);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

int band_cells(const ExperimentConfig& c) {
  return c.rte.band > 0.0 ? static_cast<int>(std::ceil(c.rte.band / c.rte.dk - 1e-9)) : 0;
}

std::vector<double> gamma_list(const ExperimentConfig& c) {
  return c.mass.gammas.empty() ? std::vector<double>{c.mass.gamma} : c.mass.gammas;
}

template <class T>
T timed(StageTimer* timer, const std::string& stage, const std::function<T()>& body) {
  return timer ? timer->time(stage, body) : body();
}

json report_json(const ConvergenceOutcome& o) {
  json rows = json::array();
  for (std::size_t i = 0; i < o.rows.size(); ++i) {
    json r = {{"eps", o.rows[i].eps}, {"err_rho", o.rows[i].err_rho}, {"err_J", o.rows[i].err_J}};
    if (i < o.norm_drifts.size()) r["norm_drift"] = o.norm_drifts[i];
    rows.push_back(r);
  }
  json out = {{"errors", rows}};
  if (o.slope_valid) {
    out["slope_rho"] = o.slope_rho;
    out["slope_J"] = o.slope_J;
  } else {
    out["slope_rho"] = nullptr;
    out["slope_J"] = nullptr;
  }
  return out;
}

void fit_slopes(ConvergenceOutcome& o, bool allowed) {
  if (!allowed || o.rows.size() < 2) return;
  std::vector<double> e, r, j;
  for (const auto& row : o.rows) {
    e.push_back(row.eps);
    r.push_back(row.err_rho);
    j.push_back(row.err_J);
  }
  o.slope_rho = fit_slope(e, r);
  o.slope_J = fit_slope(e, j);
  o.slope_valid = true;
}

}  // namespace

VmseProblem make_vmse_problem(const ExperimentConfig& c, double eps, double gamma) {
  VmseProblem p{resolve_grid(c, eps), build_model(c, gamma), eps, c.packet, {}, {}, {}};
  p.output_times = with_final_time(c.output.times, c.domain.T);
  p.solver.tolerance = c.schrodinger.tolerance;
  return p;
}

VelocityGrid rte_velocity(const ExperimentConfig& c) { return make_velocity_grid(c.rte.k_min, c.rte.k_max, c.rte.dk); }

LiouvilleResult limit_profile(const ExperimentConfig& c, const MassModel& model, std::span<const double> x_nodes,
                              double t) {
  LiouvilleOptions o;
  o.mode = c.liouville.mode;
  o.ode_tolerance = c.liouville.tolerance;
  o.L = c.domain.L;
  o.scan_min = c.liouville.scan_min;
  o.scan_max = c.liouville.scan_max;
  o.scan_points = c.liouville.scan_points;
  o.workers = c.workers;
  if (o.mode == DeltaTreatment::Regularized) {
    const double dk = c.liouville.dk > 0.0 ? c.liouville.dk : c.rte.dk;
    const bool has_range = c.liouville.k_max > c.liouville.k_min;
    o.velocity = make_velocity_grid(has_range ? c.liouville.k_min : c.rte.k_min,
                                    has_range ? c.liouville.k_max : c.rte.k_max, dk);
  }
  return evaluate_liouville(model, c.packet, x_nodes, t, o);
}

RteProblem make_rte_problem(const ExperimentConfig& c, const MassModel& model, double D) {
  RteProblem p{c.domain.L, c.rte.dx, c.domain.T, c.rte.dt, rte_velocity(c), model, {c.random.a, c.random.b, D, 0.0},
               c.packet, 0.0, band_cells(c), c.rte.skip_tolerance, with_final_time(c.output.times, c.domain.T),
               c.output.phase_density, c.workers};
  return p;
}

std::vector<double> align_profile(std::span<const double> fine, double fine_dx, double coarse_dx) {
  const double ratio = coarse_dx / fine_dx;
  const int stride = static_cast<int>(std::lround(ratio));
  if (stride < 1 || std::abs(ratio - stride) > 1e-9 * ratio) {
    throw Error("cli_orchestrator", "grid_mismatch",
                "space steps " + format_number(fine_dx) + " and " + format_number(coarse_dx) + " are not commensurate");
  }
  return restrict_to_stride(fine, stride);
}

std::shared_ptr<const KLBasis> make_basis(const ExperimentConfig& c, double eps) {
  const CorrelationSpec corr{c.random.a, c.random.b, c.random.D, eps};
  return std::make_shared<const KLBasis>(build_basis(corr, c.domain.T, c.domain.L, c.random.threshold));
}

ConvergenceOutcome deterministic_convergence(const ExperimentConfig& c, StageTimer* timer) {
  ConvergenceOutcome out;
  const MassModel model = build_model(c);
  for (double eps : c.schrodinger.eps) {
    const std::string tag = eps_tag(eps);
    const VmseProblem problem = make_vmse_problem(c, eps, c.mass.gamma);
    const VmseResult vmse = timed<VmseResult>(timer, "schrodinger_" + tag, [&] { return solve_vmse(problem); });
    const LiouvilleResult limit = timed<LiouvilleResult>(
        timer, "liouville_" + tag, [&] { return limit_profile(c, model, problem.grid.x_nodes, c.domain.T); });
    out.rows.push_back(error_metrics(limit.rho0, limit.J0, vmse.trace.rho.back(), vmse.trace.current.back(),
                                     problem.grid.dx, eps));
    out.norm_drifts.push_back(vmse.norm_drift);
  }
  fit_slopes(out, true);
  return out;
}

EnsembleStats campaign_at(const ExperimentConfig& c, double eps, double gamma, XiDistribution distribution,
                          std::uint64_t seed, int N, bool covariance) {
  const VmseProblem problem = make_vmse_problem(c, eps, gamma);
  CampaignSpec spec;
  spec.N = N;
  spec.master_seed = seed;
  spec.distribution = distribution;
  spec.covariance = covariance;
  spec.workers = c.workers;
  return run_campaign(problem, make_basis(c, eps), spec);
}

RandomOutcome random_convergence(const ExperimentConfig& c, double gamma, StageTimer* timer) {
  RandomOutcome out;
  const MassModel model = build_model(c, gamma);
  out.reference = timed<RteResult>(timer, "rte", [&] { return solve_rte(make_rte_problem(c, model, c.random.D)); });
  for (double eps : c.schrodinger.eps) {
    const std::string tag = eps_tag(eps);
    EnsembleStats stats = timed<EnsembleStats>(timer, "campaign_" + tag + "_" + gamma_tag(gamma), [&] {
      return campaign_at(c, eps, gamma, c.random.distribution, c.random.seed, c.random.N, c.random.covariance);
    });
    const double vmse_dx = c.domain.L / static_cast<double>(stats.x.size());
    const auto rho0 = align_profile(out.reference.rho0.back(), c.rte.dx, vmse_dx);
    const auto J0 = align_profile(out.reference.J0.back(), c.rte.dx, vmse_dx);
    out.errors.rows.push_back(error_metrics(rho0, J0, stats.mean_rho.back(), stats.mean_J.back(), vmse_dx, eps));
    double drift = 0.0;
    for (double d : stats.norm_drifts) drift = std::max(drift, d);
    out.errors.norm_drifts.push_back(drift);
    out.stats.push_back(std::move(stats));
  }
  fit_slopes(out.errors, c.random.N >= c.random.min_slope_samples);
  return out;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<double>& x, const ObservableTrace& trace) {
  write_moments_csv(path, x, trace.times, trace.rho, trace.current, false);
}

void write_moments_csv(const std::filesystem::path& path, const std::vector<double>& x,
                       const std::vector<double>& times, const std::vector<std::vector<double>>& rho,
                       const std::vector<std::vector<double>>& J, bool limit) {
  auto os = open_output(path);
  CsvWriter w = limit ? CsvWriter(os, {"t", "x", "rho0", "J0"}) : CsvWriter(os, {"t", "x", "rho", "J"});
  for (std::size_t n = 0; n < times.size(); ++n) {
    for (std::size_t j = 0; j < x.size(); ++j) w.row({times[n], x[j], rho[n][j], J[n][j]});
  }
}

void write_stats_csv(const std::filesystem::path& path, const EnsembleStats& s) {
  auto os = open_output(path);
  CsvWriter w(os, {"t", "x", "mean_rho", "std_rho", "mean_J", "std_J"});
  for (std::size_t n = 0; n < s.times.size(); ++n) {
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      w.row({s.times[n], s.x[j], s.mean_rho[n][j], s.std_rho[n][j], s.mean_J[n][j], s.std_J[n][j]});
    }
  }
}

void write_covariance_csv(const std::filesystem::path& path, const EnsembleStats& s, bool current) {
  auto os = open_output(path);
  CsvWriter w(os, {"t", "x", "y", "cov"});
  const auto& cov = current ? s.cov_J : s.cov_rho;
  const std::size_t nx = s.x.size();
  for (std::size_t n = 0; n < cov.size(); ++n) {
    for (std::size_t i = 0; i < nx; ++i) {
      for (std::size_t j = 0; j < nx; ++j) w.row({s.times[n], s.x[i], s.x[j], cov[n][i * nx + j]});
    }
  }
}

void write_errors_csv(const std::filesystem::path& path, const std::vector<ErrorReport>& rows) {
  auto os = open_output(path);
  CsvWriter w(os, {"eps", "err_rho", "err_J"});
  for (const auto& r : rows) w.row({r.eps, r.err_rho, r.err_J});
}

namespace {

void write_phase(const std::filesystem::path& path, const PhaseDensity& W, const char* name) {
  auto os = open_output(path);
  write_phase_csv(os, W, name);
}

json run_schrodinger(const ExperimentConfig& c, const std::filesystem::path& dir, StageTimer& timer) {
  json results = json::array();
  for (double eps : c.schrodinger.eps) {
    const std::string tag = eps_tag(eps);
    VmseProblem problem = make_vmse_problem(c, eps, c.mass.gamma);
    if (c.output.phase_density) problem.snapshot_times = problem.output_times;
    const VmseResult r = timer.time("schrodinger_" + tag, [&] { return solve_vmse(problem); });
    write_trace_csv(dir / ("trace_" + tag + ".csv"), problem.grid.x_nodes, r.trace);
    for (std::size_t n = 0; n < r.snapshots.size(); ++n) {
      const PhaseDensity W = discrete_wigner(r.snapshots[n], problem.grid);
      char name[96];
      std::snprintf(name, sizeof name, "wigner_%s_t%zu.csv", tag.c_str(), n);
      write_phase(dir / name, W, "W");
    }
    results.push_back({{"eps", eps},
                       {"M", problem.grid.M},
                       {"dx", problem.grid.dx},
                       {"dt", problem.grid.dt},
                       {"steps", r.steps},
                       {"norm_drift", r.norm_drift},
                       {"iterations", r.total_iterations},
                       {"krylov_steps", r.krylov_steps}});
  }
  return results;
}

json run_liouville(const ExperimentConfig& c, const std::filesystem::path& dir, StageTimer& timer) {
  const MassModel model = build_model(c);
  const double dx = c.rte.dx;
  const double cells = c.domain.L / dx;
  const GridSpec grid = make_grid(c.domain.L, static_cast<int>(std::lround(cells)), c.domain.T, c.domain.T / 2);
  const auto times = with_final_time(c.output.times, c.domain.T);
  std::vector<std::vector<double>> rho, J;
  json results = json::array();
  for (std::size_t n = 0; n < times.size(); ++n) {
    char stage[64];
    std::snprintf(stage, sizeof stage, "liouville_t%g", times[n]);
    const LiouvilleResult r = timer.time(stage, [&] { return limit_profile(c, model, grid.x_nodes, times[n]); });
    rho.push_back(r.rho0);
    J.push_back(r.J0);
    if (c.output.phase_density && c.liouville.mode == DeltaTreatment::Regularized) {
      char name[64];
      std::snprintf(name, sizeof name, "limit_phase_t%zu.csv", n);
      write_phase(dir / name, r.phase, "W0");
    }
    results.push_back({{"t", times[n]}, {"trajectories", r.trajectories}, {"roots", r.roots}});
  }
  write_moments_csv(dir / "limit_moments.csv", grid.x_nodes, times, rho, J);
  return results;
}

json run_rte(const ExperimentConfig& c, const std::filesystem::path& dir, StageTimer& timer) {
  const MassModel model = build_model(c);
  const RteResult r = timer.time("rte", [&] { return solve_rte(make_rte_problem(c, model, c.random.D)); });
  write_moments_csv(dir / "rte_moments.csv", r.x, r.times, r.rho0, r.J0);
  for (std::size_t n = 0; n < r.phases.size(); ++n) {
    char name[64];
    std::snprintf(name, sizeof name, "rte_phase_t%zu.csv", n);
    write_phase(dir / name, r.phases[n], "W0");
  }
  return {{"initial_mass", r.initial_mass},
          {"mass_drift", r.mass_drift},
          {"boundary_density", r.boundary_density},
          {"dt", r.dt_used},
          {"steps", r.steps}};
}

json run_campaign_command(const ExperimentConfig& c, const std::filesystem::path& dir, StageTimer& timer) {
  json results = json::array();
  for (double gamma : gamma_list(c)) {
    const RandomOutcome o = random_convergence(c, gamma, &timer);
    const std::string gtag = c.mass.gammas.empty() ? "" : "_" + gamma_tag(gamma);
    write_moments_csv(dir / ("rte_moments" + gtag + ".csv"), o.reference.x, o.reference.times, o.reference.rho0,
                      o.reference.J0);
    for (const auto& s : o.stats) {
      const std::string tag = eps_tag(s.eps) + gtag;
      write_stats_csv(dir / ("stats_" + tag + ".csv"), s);
      if (c.random.covariance) {
        write_covariance_csv(dir / ("cov_rho_" + tag + ".csv"), s, false);
        write_covariance_csv(dir / ("cov_J_" + tag + ".csv"), s, true);
      }
    }
    write_errors_csv(dir / ("errors" + gtag + ".csv"), o.errors.rows);
    json entry = report_json(o.errors);
    entry["gamma"] = gamma;
    entry["rte_mass_drift"] = o.reference.mass_drift;
    json samples = json::array();
    for (const auto& s : o.stats) {
      long clamps = 0;
      for (long k : s.clamp_counts) clamps += k;
      samples.push_back({{"eps", s.eps}, {"samples", s.samples}, {"failed", s.failed}, {"clamped_points", clamps}});
    }
    entry["campaigns"] = samples;
    results.push_back(entry);
  }
  return results;
}

json run_convergence(const ExperimentConfig& c, const std::filesystem::path& dir, StageTimer& timer) {
  const bool random = c.experiment == Experiment::RandomRTEComparison || c.experiment == Experiment::ScalingStudy;
  if (random) return run_campaign_command(c, dir, timer);
  const ConvergenceOutcome o = deterministic_convergence(c, &timer);
  write_errors_csv(dir / "errors.csv", o.rows);
  return report_json(o);
}

json run_kl_inspect(const ExperimentConfig& c, const std::filesystem::path& dir, StageTimer& timer) {
  json results = json::array();
  for (double eps : c.schrodinger.eps) {
    const std::string tag = eps_tag(eps);
    const auto basis = timer.time("basis_" + tag, [&] { return make_basis(c, eps); });
    auto os = open_output(dir / ("basis_" + tag + ".csv"));
    write_basis_csv(os, *basis);
    results.push_back({{"eps", eps},
                       {"n_kl", basis->n_kl()},
                       {"passing", basis->passing},
                       {"time_modes", basis->time.size()},
                       {"space_modes", basis->space.size()}});
  }
  return results;
}

}  // namespace

json run_command(const std::string& command, const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  StageTimer timer;
  json results;
  if (command == "schrodinger") {
    results = run_schrodinger(config, out_dir, timer);
  } else if (command == "liouville") {
    results = run_liouville(config, out_dir, timer);
  } else if (command == "rte") {
    results = run_rte(config, out_dir, timer);
  } else if (command == "campaign") {
    results = run_campaign_command(config, out_dir, timer);
  } else if (command == "convergence") {
    results = run_convergence(config, out_dir, timer);
  } else if (command == "kl-inspect") {
    results = run_kl_inspect(config, out_dir, timer);
  } else {
    throw Error("cli_orchestrator", "unknown_command", "unknown command '" + command + "'");
  }
  json seeds = json::array();
  if (command == "campaign" || (command == "convergence" && (config.experiment == Experiment::RandomRTEComparison ||
                                                            config.experiment == Experiment::ScalingStudy))) {
    for (double eps : config.schrodinger.eps) {
      seeds.push_back({{"eps", eps}, {"master_seed", config.random.seed}, {"first_sample_seed", sample_seed(config.random.seed, eps, 0)}});
    }
  }
  json manifest = {{"version", kSoftwareVersion}, {"command", command}, {"config", to_json(config)},
                   {"seeds", seeds},              {"timings", timer.to_json()}, {"results", results}};
  auto os = open_output(out_dir / "manifest.json");
  os << manifest.dump(2) << '\n';
  return manifest;
}

}  // namespace vmse
