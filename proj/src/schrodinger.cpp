#include "vmse/schrodinger.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vmse/error.hpp"

namespace vmse {

namespace {

double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += std::conj(a[n]) * b[n];
  return s;
}

}  // namespace

WaveField initial_wave(const PacketSpec& packet, double eps, const GridSpec& grid) {
  if (!(packet.A > 0.0)) throw Error("schrodinger_solver", "invalid_parameter", "packet width A must be positive");
  if (!(packet.x0 > 0.0 && packet.x0 < grid.L)) {
    throw Error("schrodinger_solver", "invalid_parameter", "packet centre must be interior to the domain");
  }
  WaveField w;
  w.eps = eps;
  w.values.resize(grid.M);
  for (int j = 0; j < grid.M; ++j) {
    const double x = grid.x_nodes[j];
    const double d = x - packet.x0;
    w.values[j] = std::exp(-packet.A * d * d) * std::polar(1.0, packet.p0 * x / eps);
  }
  return w;
}

double discrete_norm(std::span<const cplx> u, double dx) {
  double s = 0.0;
  for (const auto& z : u) s += std::norm(z);
  return s * dx;
}

void observables(SpectralOps& ops, std::span<const cplx> u, std::span<const double> mass, double eps,
                 std::span<double> rho, std::span<double> current) {
  std::vector<cplx> du(u.size());
  ops.derivative(u, du);
  for (std::size_t j = 0; j < u.size(); ++j) {
    rho[j] = std::norm(u[j]);
    current[j] = eps * (mass[j] * std::conj(u[j]) * du[j]).imag();
  }
}

CrankNicolson::CrankNicolson(const GridSpec& grid, double eps, CnSolverOptions options)
    : grid_(grid), eps_(eps), options_(options), ops_(grid), symbol_inv_(grid.M), work_(grid.M), work2_(grid.M) {}

void CrankNicolson::apply_hamiltonian(std::span<const cplx> u, std::span<const double> mass,
                                      std::span<const double> potential, std::span<cplx> out) {
  ops_.variable_laplacian(mass, u, out);
  const double k = -0.5 * eps_ * eps_;
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = k * out[j] + potential[j] * u[j];
}

void CrankNicolson::apply_system(double theta, std::span<const cplx> u, std::span<cplx> out) {
  apply_hamiltonian(u, mass_, potential_, out);
  const cplx it(0.0, theta);
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = u[j] + it * out[j];
}

void CrankNicolson::precondition(std::span<const cplx> in, std::span<cplx> out) {
  ops_.apply_symbol(symbol_inv_, in, out);
}

StepReport CrankNicolson::step(std::vector<cplx>& u, std::span<const double> mass, std::span<const double> potential,
                               double dt) {
  const std::size_t M = u.size();
  if (mass.size() != M || potential.size() != M) {
    throw Error("schrodinger_solver", "length_mismatch", "mass and potential must match the wave length");
  }
  mass_ = mass;
  potential_ = potential;
  const double theta = dt / (2.0 * eps_);

  const auto [mlo, mhi] = std::minmax_element(mass.begin(), mass.end());
  const auto [vlo, vhi] = std::minmax_element(potential.begin(), potential.end());
  const double m_ref = 0.5 * (*mlo + *mhi);
  const double v_ref = 0.5 * (*vlo + *vhi);
  const auto mu = ops_.wavenumbers();
  for (std::size_t n = 0; n < M; ++n) {
    symbol_inv_[n] = 1.0 / cplx(1.0, theta * (0.5 * eps_ * eps_ * m_ref * mu[n] * mu[n] + v_ref));
  }

  // rhs = (I - i theta H) u
  std::vector<cplx> rhs(M);
  apply_hamiltonian(u, mass, potential, rhs);
  for (std::size_t j = 0; j < M; ++j) rhs[j] = u[j] - cplx(0.0, theta) * rhs[j];
  const double rhs_norm = norm2(rhs);

  StepReport report;
  std::vector<cplx> x(M);
  precondition(rhs, x);
  std::vector<cplx> r(M);
  double prev = 0.0;
  int slow = 0;
  for (;;) {
    apply_system(theta, x, work_);
    for (std::size_t j = 0; j < M; ++j) r[j] = rhs[j] - work_[j];
    report.residual = rhs_norm > 0.0 ? norm2(r) / rhs_norm : 0.0;
    if (report.residual <= options_.tolerance) break;
    if (report.iterations > 0 && report.residual > 0.8 * prev) ++slow;
    if (slow >= 3 || report.iterations >= options_.max_fixed_point) {
      if (!gmres(theta, rhs, x, rhs_norm, report)) {
        throw Error("schrodinger_solver", "nonconvergence",
                    "implicit solve did not converge after " + std::to_string(report.iterations) +
                        " iterations, relative residual " + std::to_string(report.residual));
      }
      break;
    }
    prev = report.residual;
    precondition(r, work2_);
    for (std::size_t j = 0; j < M; ++j) x[j] += work2_[j];
    ++report.iterations;
  }
  u.swap(x);
  return report;
}

bool CrankNicolson::gmres(double theta, std::span<const cplx> rhs, std::vector<cplx>& x, double rhs_norm,
                          StepReport& report) {
  report.used_krylov = true;
  const std::size_t M = x.size();
  const int m = options_.gmres_restart;
  std::vector<std::vector<cplx>> V(m + 1, std::vector<cplx>(M));
  std::vector<std::vector<cplx>> Hm(m + 1, std::vector<cplx>(m));
  std::vector<cplx> cs(m), sn(m), g(m + 1);
  std::vector<cplx> z(M), w(M);
  int total = 0;
  while (total < options_.gmres_max_iterations) {
    apply_system(theta, x, w);
    for (std::size_t j = 0; j < M; ++j) V[0][j] = rhs[j] - w[j];
    const double beta = norm2(V[0]);
    report.residual = beta / rhs_norm;
    if (report.residual <= options_.tolerance) return true;
    for (auto& v : V[0]) v /= beta;
    std::fill(g.begin(), g.end(), cplx(0.0));
    g[0] = beta;
    int k = 0;
    for (; k < m && total < options_.gmres_max_iterations; ++k, ++total) {
      precondition(V[k], z);
      apply_system(theta, z, w);
      for (int i = 0; i <= k; ++i) {
        Hm[i][k] = dot(V[i], w);
        for (std::size_t j = 0; j < M; ++j) w[j] -= Hm[i][k] * V[i][j];
      }
      const double hn = norm2(w);
      Hm[k + 1][k] = hn;
      if (hn > 0.0) {
        for (std::size_t j = 0; j < M; ++j) V[k + 1][j] = w[j] / hn;
      }
      for (int i = 0; i < k; ++i) {
        const cplx t = std::conj(cs[i]) * Hm[i][k] + std::conj(sn[i]) * Hm[i + 1][k];
        Hm[i + 1][k] = -sn[i] * Hm[i][k] + cs[i] * Hm[i + 1][k];
        Hm[i][k] = t;
      }
      const double a = std::abs(Hm[k][k]);
      const double b = std::abs(Hm[k + 1][k]);
      const double r = std::hypot(a, b);
      if (r == 0.0) {
        cs[k] = 1.0;
        sn[k] = 0.0;
      } else {
        cs[k] = Hm[k][k] / r;
        sn[k] = Hm[k + 1][k] / r;
      }
      Hm[k][k] = r;
      Hm[k + 1][k] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = std::conj(cs[k]) * g[k];
      ++report.iterations;
      if (std::abs(g[k + 1]) / rhs_norm <= 0.1 * options_.tolerance || hn == 0.0) {
        ++k;
        break;
      }
    }
    std::vector<cplx> y(k);
    for (int i = k - 1; i >= 0; --i) {
      cplx s = g[i];
      for (int l = i + 1; l < k; ++l) s -= Hm[i][l] * y[l];
      y[i] = s / Hm[i][i];
    }
    std::fill(w.begin(), w.end(), cplx(0.0));
    for (int i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < M; ++j) w[j] += y[i] * V[i][j];
    }
    precondition(w, z);
    for (std::size_t j = 0; j < M; ++j) x[j] += z[j];
  }
  apply_system(theta, x, w);
  double rr = 0.0;
  for (std::size_t j = 0; j < M; ++j) rr += std::norm(rhs[j] - w[j]);
  report.residual = std::sqrt(rr) / rhs_norm;
  return report.residual <= options_.tolerance;
}

namespace {

std::vector<double> event_times(const VmseProblem& p) {
  std::vector<double> ev = p.output_times;
  ev.insert(ev.end(), p.snapshot_times.begin(), p.snapshot_times.end());
  ev.push_back(p.grid.T);
  for (double t : ev) {
    if (t < 0.0 || t > p.grid.T * (1.0 + 1e-14)) {
      throw Error("schrodinger_solver", "invalid_parameter", "requested time " + std::to_string(t) + " outside [0, T]");
    }
  }
  std::sort(ev.begin(), ev.end());
  ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
  return ev;
}

bool contains(const std::vector<double>& v, double t) { return std::find(v.begin(), v.end(), t) != v.end(); }

}  // namespace

VmseResult solve_vmse(const VmseProblem& problem, const FieldSampler* field, std::span<const double> xi) {
  const GridSpec& grid = problem.grid;
  const MassModel& model = problem.model;
  const double eps = problem.eps;
  if (!(eps > 0.0 && eps < 1.0)) throw Error("schrodinger_solver", "invalid_parameter", "eps must lie in (0, 1)");
  if (field != nullptr && field->nodes() != static_cast<std::size_t>(grid.M)) {
    throw Error("schrodinger_solver", "length_mismatch", "field sampler built on a different grid");
  }
  const std::vector<double> outputs = problem.output_times.empty() ? std::vector<double>{grid.T} : problem.output_times;
  const std::vector<double> events = event_times(problem);

  VmseResult result;
  CrankNicolson cn(grid, eps, problem.solver);
  WaveField w = initial_wave(problem.packet, eps, grid);
  const std::size_t M = grid.M;
  std::vector<double> mass(M), potential(M), m1(M);

  auto fill_mass = [&](double t) {
    if (field) field->evaluate(xi, t, m1);
    for (std::size_t j = 0; j < M; ++j) {
      const double x = grid.x_nodes[j];
      if (field) {
        const ComposedMass cm = model.compose_clamped(eps, m1[j], t, x);
        mass[j] = cm.value;
        if (cm.clamped) ++result.clamped_points;
      } else {
        mass[j] = model.mass(t, x);
      }
      potential[j] = model.potential(t, x);
    }
  };

  auto record = [&](double t) {
    if (contains(outputs, t)) {
      fill_mass(t);
      std::vector<double> rho(M), cur(M);
      observables(cn.ops(), w.values, mass, eps, rho, cur);
      result.trace.times.push_back(t);
      result.trace.rho.push_back(std::move(rho));
      result.trace.current.push_back(std::move(cur));
    }
    if (contains(problem.snapshot_times, t)) {
      WaveField snap = w;
      snap.t = t;
      result.snapshots.push_back(std::move(snap));
    }
  };

  const double norm0 = discrete_norm(w.values, grid.dx);
  double t = 0.0;
  if (events.front() == 0.0) record(0.0);
  for (double target : events) {
    if (target == 0.0) continue;
    for (double h : step_sequence(t, target, grid.dt)) {
      fill_mass(t + 0.5 * h);
      const StepReport rep = cn.step(w.values, mass, potential, h);
      result.total_iterations += rep.iterations;
      if (rep.used_krylov) ++result.krylov_steps;
      ++result.steps;
      t += h;
      const double drift = std::abs(discrete_norm(w.values, grid.dx) - norm0) / norm0;
      result.norm_drift = std::max(result.norm_drift, drift);
    }
    t = target;
    w.t = t;
    record(t);
  }
  return result;
}

}  // namespace vmse
