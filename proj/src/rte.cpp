#include "vmse/rte.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "vmse/error.hpp"
#include "vmse/liouville.hpp"
#include "vmse/parallel.hpp"

namespace vmse {

double ScatteringKernel::value_at_mass(double m0, double k, double p) const {
  const double pk = p * k;
  const double omega = 0.5 * m0 * (p * p - k * k);
  const double q = p - k;
  const double a = corr_.a;
  const double b = corr_.b;
  const double spectrum = 4.0 * a * b * corr_.D * corr_.D / ((1.0 + a * a * omega * omega) * (1.0 + b * b * q * q));
  return 0.25 * pk * pk * spectrum / (2.0 * std::numbers::pi);
}

double kernel_value(const ScatteringKernel& kernel, double t, double x, double k, double p) {
  return kernel.value(t, x, k, p);
}

CollisionOperator::CollisionOperator(const ScatteringKernel& kernel, const VelocityGrid& velocity, int half_band)
    : kernel_(&kernel), velocity_(&velocity) {
  if (half_band < 0) throw Error("rte_solver", "invalid_parameter", "collision band must be non-negative");
  band_ = half_band == 0 ? velocity.Nk - 1 : std::min(half_band, velocity.Nk - 1);
  width_ = 2 * band_ + 1;
  weighted_.assign(static_cast<std::size_t>(velocity.Nk) * width_, 0.0);
}

void CollisionOperator::assemble(double m0) {
  if (m0 == m0_) return;
  m0_ = m0;
  const auto& v = *velocity_;
  for (int l = 0; l < v.Nk; ++l) {
    for (int d = -band_; d <= band_; ++d) {
      const int q = l + d;
      double w = 0.0;
      if (q >= 0 && q < v.Nk && q != l) w = v.weights[q] * kernel_->value_at_mass(m0, v.k_nodes[l], v.k_nodes[q]);
      weighted_[static_cast<std::size_t>(l) * width_ + (d + band_)] = w;
    }
  }
}

void CollisionOperator::apply(std::span<const double> W, std::span<double> out) const {
  const int Nk = velocity_->Nk;
  for (int l = 0; l < Nk; ++l) {
    const int qlo = std::max(0, l - band_);
    const int qhi = std::min(Nk - 1, l + band_);
    const double* row = &weighted_[static_cast<std::size_t>(l) * width_ + band_];
    // Gain minus loss pairwise, so the diagonal drops out exactly.
    const double own = W[l];
    double acc = 0.0;
    for (int q = qlo; q <= qhi; ++q) acc += row[q - l] * (W[q] - own);
    out[l] = acc;
  }
}

std::vector<double> collision_apply(std::span<const double> W, const ScatteringKernel& kernel, double t, double x,
                                    const VelocityGrid& velocity, int half_band) {
  if (W.size() != static_cast<std::size_t>(velocity.Nk)) {
    throw Error("rte_solver", "length_mismatch", "column length differs from the velocity grid");
  }
  CollisionOperator op(kernel, velocity, half_band);
  op.assemble(kernel.model().mass(t, x));
  std::vector<double> out(W.size());
  op.apply(W, out);
  return out;
}

double transport_dt_limit(const MassModel& model, double t, std::span<const double> x_nodes,
                          const VelocityGrid& velocity, double dx, double cfl) {
  const double kabs = std::max(std::abs(velocity.k_min), std::abs(velocity.k_max));
  double mmax = 0.0, mxmax = 0.0;
  for (double x : x_nodes) {
    mmax = std::max(mmax, model.mass(t, x));
    mxmax = std::max(mxmax, std::abs(model.mass_gradient(t, x).dx));
  }
  const double rate = mmax * kabs / dx + 0.5 * kabs * kabs * mxmax / velocity.dk;
  return rate > 0.0 ? cfl / rate : std::numeric_limits<double>::infinity();
}

namespace {

constexpr int kGhost = 3;

// Jiang-Shu reconstruction at the right face of c from (a, b, c, d, e).
inline double weno5(double a, double b, double c, double d, double e) {
  constexpr double eps = 1e-6;
  const double q0 = (2.0 * a - 7.0 * b + 11.0 * c) / 6.0;
  const double q1 = (-b + 5.0 * c + 2.0 * d) / 6.0;
  const double q2 = (2.0 * c + 5.0 * d - e) / 6.0;
  const double s0 = 13.0 / 12.0 * (a - 2.0 * b + c) * (a - 2.0 * b + c) + 0.25 * (a - 4.0 * b + 3.0 * c) * (a - 4.0 * b + 3.0 * c);
  const double s1 = 13.0 / 12.0 * (b - 2.0 * c + d) * (b - 2.0 * c + d) + 0.25 * (b - d) * (b - d);
  const double s2 = 13.0 / 12.0 * (c - 2.0 * d + e) * (c - 2.0 * d + e) + 0.25 * (3.0 * c - 4.0 * d + e) * (3.0 * c - 4.0 * d + e);
  const double w0 = 0.1 / ((eps + s0) * (eps + s0));
  const double w1 = 0.6 / ((eps + s1) * (eps + s1));
  const double w2 = 0.3 / ((eps + s2) * (eps + s2));
  return (w0 * q0 + w1 * q1 + w2 * q2) / (w0 + w1 + w2);
}

// Adds -(F_{i+1/2} - F_{i-1/2}) / h for one line; v and a carry kGhost ghost cells per side.
void flux_difference(const std::vector<double>& v, const std::vector<double>& a, int n, double h, double* out,
                     std::size_t stride, std::vector<double>& fp, std::vector<double>& fm, std::vector<double>& F) {
  const int total = n + 2 * kGhost;
  double alpha = 0.0;
  for (int i = 0; i < total; ++i) alpha = std::max(alpha, std::abs(a[i]));
  if (alpha == 0.0) return;
  for (int i = 0; i < total; ++i) {
    const double f = a[i] * v[i];
    fp[i] = 0.5 * (f + alpha * v[i]);
    fm[i] = 0.5 * (f - alpha * v[i]);
  }
  // F[i] is the flux at the face between cells i-1 and i (extended indices).
  for (int i = kGhost; i <= n + kGhost; ++i) {
    const int c = i - 1;
    F[i] = weno5(fp[c - 2], fp[c - 1], fp[c], fp[c + 1], fp[c + 2]) +
           weno5(fm[c + 3], fm[c + 2], fm[c + 1], fm[c], fm[c - 1]);
  }
  for (int i = 0; i < n; ++i) out[i * stride] -= (F[i + kGhost + 1] - F[i + kGhost]) / h;
}

struct LineBuffers {
  std::vector<double> v, a, fp, fm, F;
  explicit LineBuffers(int n) : v(n + 2 * kGhost), a(n + 2 * kGhost), fp(n + 2 * kGhost), fm(n + 2 * kGhost), F(n + 2 * kGhost + 1) {}
};

void transport_rhs(const KineticState& s, const MassModel& model, double t, double L, int workers,
                   std::vector<double>& dW) {
  const int M = static_cast<int>(s.nx());
  const int Nk = static_cast<int>(s.nk());
  const double dx = L / M;
  const double dk = s.dk;
  std::fill(dW.begin(), dW.end(), 0.0);
  std::vector<double> m0(M), mx(M);
  for (int j = 0; j < M; ++j) {
    m0[j] = model.mass(t, s.x[j]);
    mx[j] = model.mass_gradient(t, s.x[j]).dx;
  }
  // x sweep, periodic.
  parallel_for(static_cast<std::size_t>(Nk), workers, [&](std::size_t l) {
    thread_local LineBuffers buf(0);
    if (buf.v.size() != static_cast<std::size_t>(M + 2 * kGhost)) buf = LineBuffers(M);
    bool any = false;
    for (int j = 0; j < M; ++j) {
      const double w = s.values[static_cast<std::size_t>(j) * Nk + l];
      buf.v[j + kGhost] = w;
      buf.a[j + kGhost] = m0[j] * s.k[l];
      any = any || w != 0.0;
    }
    if (!any) return;
    for (int g = 0; g < kGhost; ++g) {
      buf.v[g] = buf.v[M + g];
      buf.a[g] = buf.a[M + g];
      buf.v[M + kGhost + g] = buf.v[kGhost + g];
      buf.a[M + kGhost + g] = buf.a[kGhost + g];
    }
    flux_difference(buf.v, buf.a, M, dx, &dW[l], static_cast<std::size_t>(Nk), buf.fp, buf.fm, buf.F);
  });
  // k sweep, zero-gradient ghosts.
  parallel_for(static_cast<std::size_t>(M), workers, [&](std::size_t j) {
    if (mx[j] == 0.0) return;
    thread_local LineBuffers buf(0);
    if (buf.v.size() != static_cast<std::size_t>(Nk + 2 * kGhost)) buf = LineBuffers(Nk);
    const double c = -0.5 * mx[j];
    const double* row = &s.values[j * static_cast<std::size_t>(Nk)];
    for (int i = -kGhost; i < Nk + kGhost; ++i) {
      const int clamped = std::clamp(i, 0, Nk - 1);
      const double k = s.k.front() + i * dk;
      buf.v[i + kGhost] = row[clamped];
      buf.a[i + kGhost] = c * k * k;
    }
    flux_difference(buf.v, buf.a, Nk, dk, &dW[j * static_cast<std::size_t>(Nk)], 1, buf.fp, buf.fm, buf.F);
  });
}

double cfl_number(const KineticState& s, const MassModel& model, double t, double dt, double L) {
  VelocityGrid v;
  v.k_min = s.k.front();
  v.k_max = s.k.back();
  v.dk = s.dk;
  const double limit = transport_dt_limit(model, t, s.x, v, L / static_cast<double>(s.nx()), 1.0);
  return dt / limit;
}

}  // namespace

void weno5_flux_step(KineticState& state, const MassModel& model, double dt, double L, int workers) {
  const double t = state.t;
  const double cfl = std::max({cfl_number(state, model, t, dt, L), cfl_number(state, model, t + 0.5 * dt, dt, L),
                               cfl_number(state, model, t + dt, dt, L)});
  if (cfl > 0.5 * (1.0 + 1e-12)) {
    throw Error("rte_solver", "cfl_violation", "transport step has CFL number " + std::to_string(cfl) + " > 0.5");
  }
  const std::size_t n = state.values.size();
  static thread_local std::vector<double> w0, d;
  w0 = state.values;
  d.resize(n);
  KineticState stage = state;

  transport_rhs(stage, model, t, L, workers, d);
  for (std::size_t i = 0; i < n; ++i) stage.values[i] = w0[i] + dt * d[i];
  transport_rhs(stage, model, t + dt, L, workers, d);
  for (std::size_t i = 0; i < n; ++i) stage.values[i] = 0.75 * w0[i] + 0.25 * (stage.values[i] + dt * d[i]);
  transport_rhs(stage, model, t + 0.5 * dt, L, workers, d);
  for (std::size_t i = 0; i < n; ++i) state.values[i] = w0[i] / 3.0 + 2.0 / 3.0 * (stage.values[i] + dt * d[i]);
  state.t = t + dt;
}

KineticState rte_initial_state(const RteProblem& p) {
  const int M = static_cast<int>(std::lround(p.L / p.dx));
  if (M < 8 || std::abs(M * p.dx - p.L) > 1e-9 * p.L) {
    throw Error("rte_solver", "invalid_grid", "dx must divide L into at least 8 cells");
  }
  const VelocityGrid& v = p.velocity;
  if (!(p.packet.p0 > v.k_min && p.packet.p0 < v.k_max)) {
    throw Error("rte_solver", "invalid_grid", "initial momentum must lie inside the velocity grid");
  }
  KineticState s;
  s.x.resize(M);
  for (int j = 0; j < M; ++j) s.x[j] = j * p.dx;
  s.k = v.k_nodes;
  s.dk = v.dk;
  s.t = 0.0;
  const double width = p.initial_width > 0.0 ? p.initial_width : 2.0 * v.dk;
  std::vector<double> g(v.Nk);
  double norm = 0.0;
  for (int l = 0; l < v.Nk; ++l) {
    const double d = (v.k_nodes[l] - p.packet.p0) / width;
    g[l] = std::exp(-0.5 * d * d);
    norm += v.weights[l] * g[l];
  }
  for (auto& x : g) x /= norm;
  s.values.resize(static_cast<std::size_t>(M) * v.Nk);
  for (int j = 0; j < M; ++j) {
    const double r = initial_density(p.packet, s.x[j], p.L);
    for (int l = 0; l < v.Nk; ++l) s.values[static_cast<std::size_t>(j) * v.Nk + l] = r * g[l];
  }
  return s;
}

double total_mass(const KineticState& s, const VelocityGrid& v, double dx) {
  long double acc = 0.0L;
  for (std::size_t j = 0; j < s.nx(); ++j) {
    for (std::size_t l = 0; l < s.nk(); ++l) acc += static_cast<long double>(v.weights[l]) * s.at(j, l);
  }
  return static_cast<double>(acc) * dx;
}

void kinetic_moments(const KineticState& s, const VelocityGrid& v, const MassModel& model, std::vector<double>& rho,
                     std::vector<double>& J) {
  rho.assign(s.nx(), 0.0);
  J.assign(s.nx(), 0.0);
  for (std::size_t j = 0; j < s.nx(); ++j) {
    double r = 0.0, q = 0.0;
    for (std::size_t l = 0; l < s.nk(); ++l) {
      r += v.weights[l] * s.at(j, l);
      q += v.weights[l] * v.k_nodes[l] * s.at(j, l);
    }
    rho[j] = r;
    J[j] = model.mass(s.t, s.x[j]) * q;
  }
}

RteResult solve_rte(const RteProblem& p) {
  if (!(p.T > 0.0) || !(p.dt > 0.0)) throw Error("rte_solver", "invalid_parameter", "T and dt must be positive");
  KineticState state = rte_initial_state(p);
  const VelocityGrid& v = p.velocity;
  const int M = static_cast<int>(state.nx());
  const int Nk = v.Nk;

  RteResult res;
  res.x = state.x;
  double limit = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 20; ++i) limit = std::min(limit, transport_dt_limit(p.model, p.T * i / 20.0, state.x, v, p.dx));
  res.dt_used = std::min(p.dt, 0.99 * limit);

  const ScatteringKernel kernel(p.corr, p.model);
  const bool collide = p.corr.D != 0.0;
  const bool uniform_mass = p.model.kind() == MassKind::Constant;
  const bool merge = p.model.time_independent();

  auto collision = [&](double t, double h) {
    if (!collide || h <= 0.0) return;
    double peak = 0.0;
    for (double w : state.values) peak = std::max(peak, std::abs(w));
    const double cutoff = p.skip_tolerance * peak;
    auto column = [&](CollisionOperator& op, std::vector<double>& c1, std::vector<double>& c2, std::size_t j) {
      double* W = &state.values[j * static_cast<std::size_t>(Nk)];
      double cmax = 0.0;
      for (int l = 0; l < Nk; ++l) cmax = std::max(cmax, std::abs(W[l]));
      if (cmax <= cutoff) return;
      op.assemble(p.model.mass(t, state.x[j]));
      std::span<const double> col(W, Nk);
      op.apply(col, c1);
      op.apply(c1, c2);
      for (int l = 0; l < Nk; ++l) W[l] += h * c1[l] + 0.5 * h * h * c2[l];
    };
    if (uniform_mass) {
      CollisionOperator op(kernel, v, p.half_band);
      op.assemble(p.model.mass(t, 0.0));
      std::vector<double> c1(Nk), c2(Nk);
      for (int j = 0; j < M; ++j) column(op, c1, c2, j);
    } else {
      parallel_for(static_cast<std::size_t>(M), p.workers, [&](std::size_t j) {
        thread_local std::vector<double> c1, c2;
        c1.resize(Nk);
        c2.resize(Nk);
        CollisionOperator op(kernel, v, p.half_band);
        column(op, c1, c2, j);
      });
    }
  };

  res.initial_mass = total_mass(state, v, p.dx);
  auto record = [&]() {
    std::vector<double> rho, J;
    kinetic_moments(state, v, p.model, rho, J);
    res.times.push_back(state.t);
    res.rho0.push_back(std::move(rho));
    res.J0.push_back(std::move(J));
    double peak = 0.0, edge = 0.0;
    for (int j = 0; j < M; ++j) {
      for (int l = 0; l < Nk; ++l) peak = std::max(peak, std::abs(state.at(j, l)));
      edge = std::max({edge, std::abs(state.at(j, 0)), std::abs(state.at(j, Nk - 1))});
    }
    if (peak > 0.0) res.boundary_density = std::max(res.boundary_density, edge / peak);
    if (p.keep_phase) res.phases.push_back(state);
  };

  std::vector<double> events = p.output_times;
  events.push_back(p.T);
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());
  if (events.front() < 0.0 || events.back() > p.T) {
    throw Error("rte_solver", "invalid_parameter", "output times must lie in [0, T]");
  }
  const bool want_initial = std::find(p.output_times.begin(), p.output_times.end(), 0.0) != p.output_times.end();
  if (want_initial) record();

  double t = 0.0;
  for (double target : events) {
    if (target == 0.0) continue;
    double pending = 0.0;
    for (double h : step_sequence(t, target, res.dt_used)) {
      if (merge) {
        collision(state.t, pending + 0.5 * h);
      } else {
        collision(state.t, 0.5 * h);
      }
      weno5_flux_step(state, p.model, h, p.L, p.workers);
      if (merge) {
        pending = 0.5 * h;
      } else {
        collision(state.t, 0.5 * h);
      }
      ++res.steps;
      const double m = total_mass(state, v, p.dx);
      res.mass_drift = std::max(res.mass_drift, std::abs(m - res.initial_mass) / res.initial_mass);
    }
    if (merge) collision(state.t, pending);
    t = target;
    state.t = target;
    const double m = total_mass(state, v, p.dx);
    res.mass_drift = std::max(res.mass_drift, std::abs(m - res.initial_mass) / res.initial_mass);
    record();
  }
  return res;
}

}  // namespace vmse
