#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vmse/config.hpp"
#include "vmse/ensemble.hpp"
#include "vmse/error.hpp"
#include "vmse/experiments.hpp"
#include "vmse/liouville.hpp"
#include "vmse/rte.hpp"
#include "vmse/schrodinger.hpp"
#include "vmse/wigner.hpp"

using namespace vmse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<std::string> g_overrides;

ExperimentConfig config_for(Experiment e, std::vector<std::string> sets) {
  sets.insert(sets.begin(), "experiment=" + to_string(e));
  sets.insert(sets.end(), g_overrides.begin(), g_overrides.end());
  return parse_config_json(nlohmann::json::object(), sets);
}

double rel_l1(std::span<const double> a, std::span<const double> ref) {
  double num = 0, den = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num += std::abs(a[j] - ref[j]);
    den += std::abs(ref[j]);
  }
  return num / den;
}

Outcome kl_truncation_counts() {
  const ExperimentConfig c = config_for(Experiment::RandomRTEComparison, {});
  const std::vector<std::pair<int, int>> expected = {{6, 663}, {8, 3157}, {10, 27968}};
  Outcome o{true, ""};
  for (const auto& [n, count] : expected) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto basis = make_basis(c, std::exp2(-n));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double dev = std::abs(static_cast<double>(basis->n_kl()) - count) / count;
    o.pass = o.pass && dev <= 0.02;
    o.detail += fmt("eps=2^-%d N_KL=%zu (target %d, %.2f%%, %.1fs) ", n, basis->n_kl(), count, 100 * dev, secs);
  }
  return o;
}

Outcome slope_window(const ConvergenceOutcome& r, double lo, double hi) {
  Outcome o;
  for (const auto& row : r.rows) o.detail += fmt("eps=%g err_rho=%.3e err_J=%.3e; ", row.eps, row.err_rho, row.err_J);
  o.detail += fmt("slope_rho=%.3f slope_J=%.3f (window [%.1f, %.1f])", r.slope_rho, r.slope_J, lo, hi);
  o.pass = r.slope_valid && r.slope_rho >= lo && r.slope_rho <= hi && r.slope_J >= lo && r.slope_J <= hi;
  return o;
}

// Closed-form L1 gap between a freely spreading packet (unit mass) and its
// monokinetic limit, at the same eps values. Not gated: it shows how far the
// eps range sits from the asymptotic regime for the packet width in use.
std::string free_packet_reference(const ExperimentConfig& c) {
  std::vector<double> logs_eps, logs_err;
  const double A = c.packet.A, T = c.domain.T;
  for (double eps : c.schrodinger.eps) {
    const double s = 1.0 + 4.0 * A * A * eps * eps * T * T;
    const double h = 1e-4;
    double gap = 0.0;
    for (double y = -3.0; y <= 3.0; y += h) gap += std::abs(std::exp(-2 * A * y * y / s) / std::sqrt(s) - std::exp(-2 * A * y * y)) * h;
    logs_eps.push_back(std::log(eps));
    logs_err.push_back(std::log(gap));
  }
  const std::size_t n = logs_eps.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += logs_eps[i] / n;
    my += logs_err[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (logs_eps[i] - mx) * (logs_err[i] - my);
    sxx += (logs_eps[i] - mx) * (logs_eps[i] - mx);
  }
  return fmt("; free-packet closed-form slope over the same eps %.3f (2A eps T from %.2f to %.2f)", sxy / sxx,
             2 * A * c.schrodinger.eps.back() * T, 2 * A * c.schrodinger.eps.front() * T);
}

Outcome deterministic_convergence_check() {
  const ExperimentConfig c = config_for(Experiment::DeterministicExample1, {});
  Outcome o = slope_window(deterministic_convergence(c), 1.7, 2.3);
  o.detail += free_packet_reference(c);
  return o;
}

Outcome diode_convergence() {
  const ExperimentConfig c = config_for(Experiment::DiodeExample, {});
  Outcome o = slope_window(deterministic_convergence(c), 1.7, 2.3);
  o.detail += free_packet_reference(c);
  return o;
}

// RTE reference on a reduced momentum window; scattering moves momentum by
// about 0.15 over the horizon, so [0.9, 2.1] holds the whole density.
std::vector<std::string> rte_reference_settings() {
  return {"rte.dx=2^-9", "rte.dk=2^-9", "rte.dt=2^-11", "rte.k_min=0.9", "rte.k_max=2.1", "rte.band=0.15"};
}

Outcome random_convergence_check() {
  auto sets = rte_reference_settings();
  sets.insert(sets.end(), {"schrodinger.eps=[0.03125,0.015625,0.0078125]", "random.N=500", "random.distribution=Gaussian",
                           "random.covariance=false", "workers=0"});
  const ExperimentConfig c = config_for(Experiment::RandomRTEComparison, sets);
  const RandomOutcome r = random_convergence(c, c.mass.gamma);
  Outcome o;
  o.detail = fmt("N=%d rte_mass_drift=%.2e; ", c.random.N, r.reference.mass_drift);
  for (const auto& row : r.errors.rows) o.detail += fmt("eps=%g err_rho=%.4e err_J=%.4e; ", row.eps, row.err_rho, row.err_J);
  if (!r.errors.slope_valid) {
    o.pass = true;
    o.detail += fmt("slope check skipped below N=%d", c.random.min_slope_samples);
    return o;
  }
  o.detail += fmt("slope_rho=%.3f (window [0.6, 1.4]) slope_J=%.3f", r.errors.slope_rho, r.errors.slope_J);
  o.detail += free_packet_reference(c);
  o.pass = r.errors.slope_rho >= 0.6 && r.errors.slope_rho <= 1.4;
  return o;
}

Outcome rte_d0_oracle() {
  const ExperimentConfig c = config_for(Experiment::DeterministicExample1, {"domain.T=0.4", "random.D=0",
                                                                            "rte.dx=2^-8", "rte.dk=2^-8",
                                                                            "rte.dt=2^-10", "rte.k_min=0.5",
                                                                            "rte.k_max=1.7", "liouville.mode=regularized",
                                                                            "workers=0"});
  const MassModel model = build_model(c);
  const RteResult rte = solve_rte(make_rte_problem(c, model, 0.0));
  const LiouvilleResult ref = limit_profile(c, model, rte.x, c.domain.T);
  const double err = rel_l1(rte.rho0.back(), ref.rho0);
  const double err_J = rel_l1(rte.J0.back(), ref.J0);
  return {err <= 0.02, fmt("T=0.4 rel L1 rho0=%.3e J0=%.3e (bound 2e-2), rte mass drift %.2e, %d steps", err, err_J,
                           rte.mass_drift, rte.steps)};
}

Outcome collision_conservation() {
  const MassModel model(MassKind::OscillatoryProduct, PotentialKind::Zero, {}, 0.5, 1.25, 0.5);
  const ScatteringKernel kernel({100, 100, 1.5, 0.0}, model);
  const VelocityGrid v = make_velocity_grid(-4, 4, 1.0 / 64);
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u01(0, 1), ux(0, 1.25), ut(0, 0.5), uk(-4, 4);
  double worst = 0;
  long columns = 0;
  for (int s = 0; s < 100; ++s) {
    const double t = ut(rng);
    for (int j = 0; j < 16; ++j) {
      const double x = 1.25 * j / 16;
      std::vector<double> W(v.Nk);
      for (auto& w : W) w = u01(rng);
      const auto out = collision_apply(W, kernel, t, x, v);
      long double sum = 0.0L;
      for (int l = 0; l < v.Nk; ++l) sum += static_cast<long double>(v.weights[l]) * out[l];
      worst = std::max(worst, static_cast<double>(std::abs(sum)));
      ++columns;
    }
  }
  int asymmetric = 0;
  for (int n = 0; n < 1000; ++n) {
    const double t = ut(rng), x = ux(rng), k = uk(rng), p = uk(rng);
    if (kernel.value(t, x, k, p) != kernel.value(t, x, p, k)) ++asymmetric;
  }
  return {worst <= 1e-12 && asymmetric == 0,
          fmt("max |sum collision dk| = %.3e over %ld columns (bound 1e-12); asymmetric pairs %d of 1000", worst, columns,
              asymmetric)};
}

Outcome unitarity() {
  double det_worst = 0;
  std::string detail;
  for (Experiment e : {Experiment::DeterministicExample1, Experiment::DiodeExample}) {
    const ExperimentConfig c = config_for(e, {"schrodinger.eps=2^-5"});
    const VmseResult r = solve_vmse(make_vmse_problem(c, std::exp2(-5), c.mass.gamma));
    det_worst = std::max(det_worst, r.norm_drift);
    detail += fmt("%s drift %.2e; ", to_string(e).c_str(), r.norm_drift);
  }
  const ExperimentConfig c = config_for(Experiment::RandomRTEComparison, {"schrodinger.eps=2^-5", "workers=0"});
  const EnsembleStats s = campaign_at(c, std::exp2(-5), c.mass.gamma, XiDistribution::Gaussian, c.random.seed, 50, false);
  double rnd_worst = 0;
  for (double d : s.norm_drifts) rnd_worst = std::max(rnd_worst, d);
  long clamps = 0;
  for (long k : s.clamp_counts) clamps += k;
  detail += fmt("50 random samples: worst drift %.2e, clamped points %ld, failed %zu (bound 1e-8)", rnd_worst, clamps,
                s.failed.size());
  return {det_worst <= 1e-8 && rnd_worst <= 1e-8 && s.samples == 50, detail};
}

Outcome wigner_identities() {
  Outcome o{true, ""};
  {
    const double eps = std::exp2(-6);
    const GridSpec g = make_grid(1.25, 640, 0.5, 0.01);
    const WaveField w = initial_wave({128, 0.25, 1.0}, eps, g);
    const PhaseDensity W = discrete_wigner(w, g);
    std::vector<double> rho(g.M);
    for (int j = 0; j < g.M; ++j) rho[j] = std::norm(w.values[j]);
    const double err = rel_l1(wigner_density(W), rho);
    o.pass = o.pass && err <= 1e-6;
    o.detail += fmt("marginal rel L1 %.2e (bound 1e-6); ", err);
  }
  {
    const double eps = std::exp2(-6);
    const GridSpec g = make_grid(1.25, 640, 0.5, 0.01);
    const int l = static_cast<int>(std::lround(1.0 / eps * 1.25 / (2 * std::numbers::pi)));
    const double p0 = eps * g.wavenumbers[g.native_index(l)];
    WaveField w{std::vector<cplx>(g.M), 0.0, eps};
    for (int j = 0; j < g.M; ++j) w.values[j] = std::polar(1.0, p0 * g.x_nodes[j] / eps);
    const PhaseDensity W = discrete_wigner(w, g);
    std::size_t bin = 0;
    for (std::size_t n = 0; n < W.nk(); ++n) {
      if (std::abs(W.k[n] - p0) < std::abs(W.k[bin] - p0)) bin = n;
    }
    double worst = 1.0;
    for (std::size_t i = 0; i < W.nx(); ++i) {
      double total = 0;
      for (std::size_t n = 0; n < W.nk(); ++n) total += std::abs(W.at(i, n));
      worst = std::min(worst, W.at(i, bin) / total);
    }
    o.pass = o.pass && worst >= 0.99;
    o.detail += fmt("plane wave p0=%.4f bin share %.4f (bound 0.99); ", p0, worst);
  }
  // The example-1 mass has period 1. On that domain with a centred packet the
  // data are smooth and periodic; on L = 1.25 the packet tail meets the seam
  // with a jump near 3e-4, reported alongside but not gated.
  auto refinement = [&](std::vector<std::string> sets) {
    sets.insert(sets.begin(), "schrodinger.eps=2^-4");
    const ExperimentConfig c = config_for(Experiment::DeterministicExample1, sets);
    const double eps = std::exp2(-4);
    const MassModel model = build_model(c);
    const GridSpec base = resolve_grid(c, eps);
    std::pair<double, double> residual;
    for (int level = 0; level < 2; ++level) {
      const int M = base.M << level;
      const double dt = base.dt / (1 << level);
      const double tc = 0.25;
      VmseProblem p{make_grid(c.domain.L, M, c.domain.T, dt), model, eps, c.packet, {}, {tc - dt, tc, tc + dt}, {}};
      const double r = wigner_residual(solve_vmse(p).snapshots, model, p.grid).residual;
      (level == 0 ? residual.first : residual.second) = r;
    }
    return residual;
  };
  const auto periodic = refinement({"domain.L=1", "packet.x0=0.5"});
  const double ratio = periodic.first / periodic.second;
  o.pass = o.pass && ratio >= 2.0;
  o.detail += fmt("residual L=1 coarse %.3e fine %.3e ratio %.2f (bound 2)", periodic.first, periodic.second, ratio);
  const auto seam = refinement({});
  o.detail += fmt("; L=1.25 seam case coarse %.3e fine %.3e", seam.first, seam.second);
  return o;
}

Outcome kl_field_fidelity() {
  Outcome o{true, ""};
  {
    const ExperimentConfig c = config_for(Experiment::RandomRTEComparison, {});
    const double eps = std::exp2(-6);
    const auto basis = make_basis(c, eps);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ut(0, c.domain.T), ux(0, c.domain.L);
    struct Probe {
      double t1, x1, t2, x2;
    };
    std::vector<Probe> probes;
    for (int n = 0; n < 10; ++n) probes.push_back({ut(rng), ux(rng), ut(rng), ux(rng)});
    const int N = 10000;
    std::vector<std::vector<double>> a(10, std::vector<double>(N)), b(10, std::vector<double>(N));
    for (int s = 0; s < N; ++s) {
      const auto r = draw_realization(basis->n_kl(), XiDistribution::Gaussian, sample_seed(c.random.seed, eps, s));
      for (int n = 0; n < 10; ++n) {
        a[n][s] = sample_field_point(*basis, r.xi, probes[n].t1, probes[n].x1);
        b[n][s] = sample_field_point(*basis, r.xi, probes[n].t2, probes[n].x2);
      }
    }
    int inside = 0;
    double worst = 0;
    for (int n = 0; n < 10; ++n) {
      double ma = 0, mb = 0;
      for (int s = 0; s < N; ++s) {
        ma += a[n][s];
        mb += b[n][s];
      }
      ma /= N;
      mb /= N;
      double c1 = 0, c2 = 0;
      for (int s = 0; s < N; ++s) {
        const double prod = (a[n][s] - ma) * (b[n][s] - mb);
        c1 += prod;
        c2 += prod * prod;
      }
      const double cov = c1 / (N - 1);
      const double se = std::sqrt((c2 / N - (c1 / N) * (c1 / N)) / N);
      const double exact = truncated_covariance(*basis, probes[n].t1, probes[n].x1, probes[n].t2, probes[n].x2);
      const double z = std::abs(cov - exact) / se;
      worst = std::max(worst, z);
      if (z <= 3) ++inside;
    }
    o.pass = inside == 10;
    o.detail += fmt("covariance at 10 probe pairs: %d within 3 SE, worst %.2f SE; ", inside, worst);
  }
  {
    const double eps = std::exp2(-5);
    const ExperimentConfig c = config_for(Experiment::RandomRTEComparison, {"schrodinger.eps=2^-5", "workers=0"});
    const EnsembleStats g = campaign_at(c, eps, c.mass.gamma, XiDistribution::Gaussian, c.random.seed, 500, false);
    const EnsembleStats u = campaign_at(c, eps, c.mass.gamma, XiDistribution::Uniform, c.random.seed + 1, 500, false);
    double worst = 0;
    std::size_t at = 0, outside = 0;
    const auto& mg = g.mean_rho.back();
    const auto& mu = u.mean_rho.back();
    for (std::size_t j = 0; j < mg.size(); ++j) {
      const double se = std::sqrt(std::pow(g.std_rho.back()[j], 2) / g.samples + std::pow(u.std_rho.back()[j], 2) / u.samples);
      if (se == 0.0) continue;
      const double z = std::abs(mg[j] - mu[j]) / se;
      if (z > 3) ++outside;
      if (z > worst) {
        worst = z;
        at = j;
      }
    }
    o.pass = o.pass && outside == 0;
    o.detail += fmt("Gaussian vs Uniform mean_rho: worst %.2f pooled SE at x=%.4f, %zu of %zu nodes beyond 3 SE", worst,
                    g.x[at], outside, mg.size());
  }
  return o;
}

Outcome scaling_direction() {
  const double eps = std::exp2(-5);
  const ExperimentConfig c = config_for(Experiment::ScalingStudy, {"schrodinger.eps=2^-5", "workers=0"});
  const VmseResult det = solve_vmse(make_vmse_problem(c, eps, c.mass.gamma));
  const auto& base = det.trace.rho.back();
  const double dx = c.domain.L / static_cast<double>(base.size());
  std::vector<std::pair<double, double>> scattered;
  for (double gamma : {0.5, 1.0, 0.4}) {
    const EnsembleStats s = campaign_at(c, eps, gamma, XiDistribution::Gaussian, c.random.seed, 300, false);
    scattered.emplace_back(gamma, l1_distance(s.mean_rho.back(), base, dx));
  }
  const double s05 = scattered[0].second, s10 = scattered[1].second, s04 = scattered[2].second;
  return {s10 < s05 && s04 > s05,
          fmt("L1 distance of E[rho] from the unperturbed profile: gamma=1.0 %.4e, gamma=0.5 %.4e, gamma=0.4 %.4e "
              "(need 1.0 < 0.5 < 0.4)",
              s10, s05, s04)};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> list = {
      {"kl_truncation_counts", kl_truncation_counts},
      {"deterministic_convergence", deterministic_convergence_check},
      {"diode_convergence", diode_convergence},
      {"random_convergence", random_convergence_check},
      {"rte_d0_oracle", rte_d0_oracle},
      {"collision_conservation", collision_conservation},
      {"unitarity", unitarity},
      {"wigner_identities", wigner_identities},
      {"kl_field_fidelity", kl_field_fidelity},
      {"scaling_direction", scaling_direction},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<std::string> only;
  app.add_option("--only", only, "Run only the named criteria");
  app.add_option("--set", g_overrides, "Config override applied to every criterion (e.g. random.N=100)")->take_all();
  bool list = false;
  app.add_flag("--list", list, "List criterion names");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& [name, fn] : criteria()) std::cout << name << '\n';
    return 0;
  }
  int failures = 0, ran = 0;
  for (const auto& [name, fn] : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const Error& e) {
      o = {false, "error [" + e.module() + "/" + e.kind() + "] " + e.what()};
    } catch (const std::exception& e) {
      o = {false, std::string("error ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << fmt("%.1f", secs) << "s): " << o.detail << std::endl;
    if (!o.pass) ++failures;
  }
  if (ran == 0) {
    std::cerr << "no criterion matched\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
