#include "vmse/liouville.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "vmse/error.hpp"
#include "vmse/parallel.hpp"

namespace vmse {

namespace {

using State = std::array<double, 4>;  // x, k, dx/dp, dk/dp

double wrap(double x, double L) {
  double y = std::fmod(x, L);
  if (y < 0.0) y += L;
  return y;
}

State backward_rhs(const MassModel& model, double T, double s, const State& y) {
  const double t = T - s;
  const double x = y[0];
  const double k = y[1];
  const double m = model.mass(t, x);
  const double mx = model.mass_gradient(t, x).dx;
  const double mxx = model.mass_dxx(t, x);
  const double vx = model.potential_dx(t, x);
  const double vxx = model.potential_dxx(t, x);
  return {-k * m, 0.5 * k * k * mx + vx, -m * y[3] - k * mx * y[2], k * mx * y[3] + (0.5 * k * k * mxx + vxx) * y[2]};
}

double hamiltonian(const MassModel& model, double t, double x, double k) {
  return 0.5 * model.mass(t, x) * k * k + model.potential(t, x);
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

BackTrajectory trace_back(double y, double p, const MassModel& model, double T, double tol, double L) {
  if (!(tol > 0.0 && tol <= 1e-6)) {
    throw Error("liouville_particles", "invalid_parameter", "ODE tolerance must lie in (0, 1e-6]");
  }
  if (!(L > 0.0)) throw Error("liouville_particles", "invalid_parameter", "domain length must be positive");
  BackTrajectory tr;
  tr.y = y;
  tr.p = p;
  tr.ode_tolerance = tol;
  State u{y, p, 0.0, 1.0};
  const double H0 = hamiltonian(model, T, y, p);
  if (T <= 0.0) {
    tr.x_T = wrap(y, L);
    tr.k_T = p;
    tr.dk_dp = 1.0;
    return tr;
  }

  auto f = [&](double s, const State& st) { return backward_rhs(model, T, s, st); };
  double s = 0.0;
  double h = 0.01 * T;
  State k1 = f(s, u);
  const double h_min = 1e-14 * T;
  while (s < T) {
    if (s + h > T) h = T - s;
    State tmp, k2, k3, k4, k5, k6, k7, un;
    for (int i = 0; i < 4; ++i) tmp[i] = u[i] + h * a21 * k1[i];
    k2 = f(s + c2 * h, tmp);
    for (int i = 0; i < 4; ++i) tmp[i] = u[i] + h * (a31 * k1[i] + a32 * k2[i]);
    k3 = f(s + c3 * h, tmp);
    for (int i = 0; i < 4; ++i) tmp[i] = u[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = f(s + c4 * h, tmp);
    for (int i = 0; i < 4; ++i) tmp[i] = u[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = f(s + c5 * h, tmp);
    for (int i = 0; i < 4; ++i)
      tmp[i] = u[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    k6 = f(s + h, tmp);
    for (int i = 0; i < 4; ++i) un[i] = u[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    k7 = f(s + h, un);
    double err = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = tol + tol * std::max(std::abs(u[i]), std::abs(un[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / 4.0);
    if (err <= 1.0) {
      s += h;
      u = un;
      k1 = k7;
      ++tr.steps;
      const double t = std::max(T - s, 0.0);
      tr.hamiltonian_drift = std::max(tr.hamiltonian_drift, std::abs(hamiltonian(model, t, u[0], u[1]) - H0));
    }
    const double factor = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
    h *= factor;
    if (s < T && h < h_min) {
      throw Error("liouville_particles", "step_underflow",
                  "step size underflow at s = " + std::to_string(s) + " for (y, p) = (" + std::to_string(y) + ", " +
                      std::to_string(p) + ")");
    }
  }
  tr.x_T = wrap(u[0], L);
  tr.k_T = u[1];
  tr.dx_dp = u[2];
  tr.dk_dp = u[3];
  return tr;
}

double initial_density(const PacketSpec& packet, double x, double L) {
  double d = std::fmod(x - packet.x0, L);
  if (d < -0.5 * L) d += L;
  if (d >= 0.5 * L) d -= L;
  return std::exp(-2.0 * packet.A * d * d);
}

namespace {

struct NodeMoments {
  double rho = 0.0;
  double flux = 0.0;  // integral of k W
  long trajectories = 0;
  long roots = 0;
};

NodeMoments delta_node(const MassModel& model, const PacketSpec& packet, double y, double T,
                       const LiouvilleOptions& opt) {
  NodeMoments out;
  const int n = opt.scan_points;
  std::vector<BackTrajectory> scan;
  scan.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double p = opt.scan_min + (opt.scan_max - opt.scan_min) * i / (n - 1);
    scan.push_back(trace_back(y, p, model, T, opt.ode_tolerance, opt.L));
  }
  out.trajectories += n;
  auto add_root = [&](const BackTrajectory& tr) {
    const double weight = initial_density(packet, tr.x_T, opt.L) / std::abs(tr.dk_dp);
    out.rho += weight;
    out.flux += tr.p * weight;
    ++out.roots;
  };
  for (int i = 0; i < n; ++i) {
    const double gi = scan[i].k_T - packet.p0;
    if (gi == 0.0) {
      add_root(scan[i]);
      continue;
    }
    if (i + 1 == n) break;
    const double gj = scan[i + 1].k_T - packet.p0;
    if (gj == 0.0 || (gi < 0.0) == (gj < 0.0)) continue;
    // Safeguarded Newton on g(p) = k_T(p) - p0 inside the sign-change bracket.
    double lo = scan[i].p, hi = scan[i + 1].p;
    double glo = gi;
    BackTrajectory cur = std::abs(gi) < std::abs(gj) ? scan[i] : scan[i + 1];
    for (int it = 0; it < 60; ++it) {
      const double g = cur.k_T - packet.p0;
      if (std::abs(g) <= 1e-13 || hi - lo <= 1e-15) break;
      if ((g < 0.0) == (glo < 0.0)) {
        lo = cur.p;
        glo = g;
      } else {
        hi = cur.p;
      }
      double next = cur.dk_dp != 0.0 ? cur.p - g / cur.dk_dp : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      cur = trace_back(y, next, model, T, opt.ode_tolerance, opt.L);
      ++out.trajectories;
    }
    add_root(cur);
  }
  return out;
}

}  // namespace

LiouvilleResult evaluate_liouville(const MassModel& model, const PacketSpec& packet, std::span<const double> x_nodes,
                                   double T, const LiouvilleOptions& options) {
  if (!(options.L > 0.0)) throw Error("liouville_particles", "invalid_parameter", "domain length must be positive");
  if (T < 0.0) throw Error("liouville_particles", "invalid_parameter", "evaluation time must be non-negative");
  LiouvilleResult res;
  res.t = T;
  res.x.assign(x_nodes.begin(), x_nodes.end());
  const std::size_t M = x_nodes.size();
  res.rho0.assign(M, 0.0);
  res.J0.assign(M, 0.0);

  if (options.mode == DeltaTreatment::Delta) {
    if (options.scan_points < 2 || !(options.scan_max > options.scan_min)) {
      throw Error("liouville_particles", "invalid_parameter", "momentum scan needs >= 2 points and max > min");
    }
    if (T == 0.0) {
      for (std::size_t j = 0; j < M; ++j) {
        res.rho0[j] = initial_density(packet, x_nodes[j], options.L);
        res.J0[j] = model.mass(0.0, x_nodes[j]) * packet.p0 * res.rho0[j];
      }
      return res;
    }
    std::vector<NodeMoments> nodes(M);
    parallel_for(M, options.workers, [&](std::size_t j) { nodes[j] = delta_node(model, packet, x_nodes[j], T, options); });
    for (std::size_t j = 0; j < M; ++j) {
      res.rho0[j] = nodes[j].rho;
      res.J0[j] = model.mass(T, x_nodes[j]) * nodes[j].flux;
      res.trajectories += nodes[j].trajectories;
      res.roots += nodes[j].roots;
    }
    return res;
  }

  const VelocityGrid& vg = options.velocity;
  if (vg.Nk < 2) throw Error("liouville_particles", "invalid_parameter", "regularized mode needs a velocity grid");
  const double width = options.width > 0.0 ? options.width : 2.0 * vg.dk;
  const double gnorm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * width);
  PhaseDensity& W = res.phase;
  W.x = res.x;
  W.k = vg.k_nodes;
  W.dk = vg.dk;
  W.t = T;
  W.values.assign(M * vg.Nk, 0.0);
  parallel_for(M, options.workers, [&](std::size_t j) {
    for (int l = 0; l < vg.Nk; ++l) {
      const BackTrajectory tr = trace_back(x_nodes[j], vg.k_nodes[l], model, T, options.ode_tolerance, options.L);
      const double dk = (tr.k_T - packet.p0) / width;
      W.at(j, l) = initial_density(packet, tr.x_T, options.L) * gnorm * std::exp(-0.5 * dk * dk);
    }
  });
  res.trajectories = static_cast<long>(M) * vg.Nk;
  for (std::size_t j = 0; j < M; ++j) {
    double r = 0.0, q = 0.0;
    for (int l = 0; l < vg.Nk; ++l) {
      r += vg.weights[l] * W.at(j, l);
      q += vg.weights[l] * vg.k_nodes[l] * W.at(j, l);
    }
    res.rho0[j] = r;
    res.J0[j] = model.mass(T, x_nodes[j]) * q;
  }
  return res;
}

}  // namespace vmse
