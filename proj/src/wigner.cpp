#include "vmse/wigner.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "vmse/csv.hpp"
#include "vmse/error.hpp"
#include "vmse/spectral.hpp"

namespace vmse {

namespace {

int resolve_window(const GridSpec& grid, int window) {
  const int N = window == 0 ? grid.M : window;
  if (N < 2 || N % 2 != 0) throw Error("wigner_diagnostics", "invalid_window", "lag window must be even and >= 2");
  if (N > grid.M) {
    throw Error("wigner_diagnostics", "window_too_large",
                "lag window " + std::to_string(N) + " exceeds the periodic domain of " + std::to_string(grid.M) +
                    " cells");
  }
  return N;
}

double wrap(double x, double L) {
  double y = std::fmod(x, L);
  if (y < 0.0) y += L;
  return y;
}

// Lag-domain representation f(x_j, s_n) of a density, s_n = n dx with n in
// native FFT order. This is the inverse of the k transform in discrete_wigner.
struct LagField {
  int M = 0;
  int N = 0;
  std::vector<cplx> values;  // row-major by x, N lags per row
  cplx& at(int j, int n) { return values[static_cast<std::size_t>(j) * N + n]; }
};

int lag_of(int native, int N) { return native < N / 2 ? native : native - N; }

// W_l = (dx/(pi eps)) sum_n e^{2 pi i l n / N} f_n, with l in ascending order.
void lag_to_density(LagField& f, const GridSpec& grid, double eps, PhaseDensity& out, FftPlan& plan) {
  const int N = f.N;
  std::vector<cplx> row(N), spec(N);
  const double scale = grid.dx / (std::numbers::pi * eps);
  double residue = 0.0;
  for (int j = 0; j < f.M; ++j) {
    std::copy_n(&f.at(j, 0), N, row.begin());
    plan.backward(row, spec);
    for (int n = 0; n < N; ++n) {
      const int l = lag_of(n, N);
      const cplx v = spec[n] * scale;
      out.at(j, l + N / 2) = v.real();
      residue = std::max(residue, std::abs(v.imag()));
    }
  }
  out.imag_residue = residue;
}

LagField density_to_lag(const PhaseDensity& W, FftPlan& plan) {
  const int M = static_cast<int>(W.nx());
  const int N = static_cast<int>(W.nk());
  LagField f{M, N, std::vector<cplx>(static_cast<std::size_t>(M) * N)};
  std::vector<cplx> row(N), lag(N);
  for (int j = 0; j < M; ++j) {
    for (int l = -N / 2; l < N / 2; ++l) row[l >= 0 ? l : l + N] = W.at(j, l + N / 2);
    plan.forward(row, lag);
    for (int n = 0; n < N; ++n) f.at(j, n) = lag[n] * W.dk;
  }
  return f;
}

// d/dx (or d2/dx2) of the lag field column by column.
LagField lag_derivative(const LagField& f, const GridSpec& grid, int order) {
  SpectralOps ops(grid);
  LagField out{f.M, f.N, std::vector<cplx>(f.values.size())};
  std::vector<cplx> col(f.M), dcol(f.M);
  for (int n = 0; n < f.N; ++n) {
    for (int j = 0; j < f.M; ++j) col[j] = f.values[static_cast<std::size_t>(j) * f.N + n];
    if (order == 1) {
      ops.derivative(col, dcol);
    } else {
      ops.second_derivative(col, dcol);
    }
    for (int j = 0; j < f.M; ++j) out.values[static_cast<std::size_t>(j) * f.N + n] = dcol[j];
  }
  return out;
}

PhaseDensity same_layout(const PhaseDensity& W) {
  PhaseDensity out;
  out.x = W.x;
  out.k = W.k;
  out.values.assign(W.values.size(), 0.0);
  out.t = W.t;
  out.dk = W.dk;
  out.eps = W.eps;
  return out;
}

void check_layout(const PhaseDensity& W, const GridSpec& grid) {
  if (W.nx() != static_cast<std::size_t>(grid.M)) {
    throw Error("wigner_diagnostics", "length_mismatch", "density rows differ from grid size");
  }
  resolve_window(grid, static_cast<int>(W.nk()));
}

template <class Weight>
PhaseDensity shifted_mass_operator(const PhaseDensity& W, const GridSpec& grid, const LagField* source,
                                   Weight weight, double prefactor_power, double prefactor) {
  const int N = static_cast<int>(W.nk());
  FftPlan plan(N);
  LagField g{grid.M, N, std::vector<cplx>(static_cast<std::size_t>(grid.M) * N)};
  for (int j = 0; j < grid.M; ++j) {
    for (int n = 0; n < N; ++n) {
      const double s = lag_of(n, N) * grid.dx;
      g.at(j, n) = weight(j, n, grid.x_nodes[j], s) * source->values[static_cast<std::size_t>(j) * N + n];
    }
  }
  PhaseDensity out = same_layout(W);
  lag_to_density(g, grid, W.eps, out, plan);
  for (std::size_t j = 0; j < out.nx(); ++j) {
    for (std::size_t l = 0; l < out.nk(); ++l) out.at(j, l) *= prefactor * std::pow(out.k[l], prefactor_power);
  }
  return out;
}

}  // namespace

PhaseDensity wigner_layout(const GridSpec& grid, double eps, int window) {
  const int N = resolve_window(grid, window);
  PhaseDensity W;
  W.x = grid.x_nodes;
  W.eps = eps;
  W.dk = std::numbers::pi * eps / (N * grid.dx);
  W.k.resize(N);
  for (int l = -N / 2; l < N / 2; ++l) W.k[l + N / 2] = l * W.dk;
  W.values.assign(static_cast<std::size_t>(grid.M) * N, 0.0);
  return W;
}

PhaseDensity discrete_wigner(const WaveField& state, const GridSpec& grid, int window) {
  if (state.values.size() != static_cast<std::size_t>(grid.M)) {
    throw Error("wigner_diagnostics", "length_mismatch", "wave field length differs from grid size");
  }
  PhaseDensity W = wigner_layout(grid, state.eps, window);
  W.t = state.t;
  const int M = grid.M;
  const int N = static_cast<int>(W.nk());
  LagField f{M, N, std::vector<cplx>(static_cast<std::size_t>(M) * N)};
  const auto& u = state.values;
  for (int j = 0; j < M; ++j) {
    for (int n = 0; n < N; ++n) {
      const int s = lag_of(n, N);
      const int a = ((j - s) % M + M) % M;
      const int b = ((j + s) % M + M) % M;
      f.at(j, n) = u[a] * std::conj(u[b]);
    }
  }
  FftPlan plan(N);
  lag_to_density(f, grid, state.eps, W, plan);
  return W;
}

PhaseDensity apply_q1(const PhaseDensity& W, const MassModel& model, const GridSpec& grid) {
  check_layout(W, grid);
  FftPlan plan(static_cast<int>(W.nk()));
  const LagField f = density_to_lag(W, plan);
  const double t = W.t;
  const double L = grid.L;
  auto weight = [&](int, int, double x, double s) {
    return cplx(0.0, model.mass(t, wrap(x - s, L)) - model.mass(t, wrap(x + s, L)));
  };
  return shifted_mass_operator(W, grid, &f, weight, 2.0, 0.5);
}

PhaseDensity apply_q2(const PhaseDensity& W, const MassModel& model, const GridSpec& grid) {
  check_layout(W, grid);
  FftPlan plan(static_cast<int>(W.nk()));
  const LagField fx = lag_derivative(density_to_lag(W, plan), grid, 1);
  const double t = W.t;
  const double L = grid.L;
  auto weight = [&](int, int, double x, double s) {
    return cplx(model.mass(t, wrap(x - s, L)) + model.mass(t, wrap(x + s, L)), 0.0);
  };
  return shifted_mass_operator(W, grid, &fx, weight, 1.0, 0.5);
}

PhaseDensity apply_q3(const PhaseDensity& W, const MassModel& model, const GridSpec& grid) {
  check_layout(W, grid);
  FftPlan plan(static_cast<int>(W.nk()));
  const LagField f = density_to_lag(W, plan);
  const LagField fxx = lag_derivative(f, grid, 2);
  const double t = W.t;
  const double L = grid.L;
  auto first = [&](int, int, double x, double s) {
    return cplx(0.0, model.mass(t, wrap(x - s, L)) - model.mass(t, wrap(x + s, L)));
  };
  auto second = [&](int, int, double x, double s) {
    return cplx(0.0, model.mass_dxx(t, wrap(x + s, L)) - model.mass_dxx(t, wrap(x - s, L)));
  };
  PhaseDensity out = shifted_mass_operator(W, grid, &fxx, first, 0.0, 0.125);
  const PhaseDensity extra = shifted_mass_operator(W, grid, &f, second, 0.0, 0.125);
  for (std::size_t n = 0; n < out.values.size(); ++n) out.values[n] += extra.values[n];
  out.imag_residue = std::max(out.imag_residue, extra.imag_residue);
  return out;
}

WignerResidual wigner_residual(std::span<const WaveField> snapshots, const MassModel& model, const GridSpec& grid,
                               int window) {
  if (snapshots.size() != 3) throw Error("wigner_diagnostics", "invalid_snapshots", "need exactly three snapshots");
  const double h1 = snapshots[1].t - snapshots[0].t;
  const double h2 = snapshots[2].t - snapshots[1].t;
  if (!(h1 > 0.0) || std::abs(h1 - h2) > 1e-9 * h1) {
    throw Error("wigner_diagnostics", "non_equispaced", "snapshots must be equally spaced in time");
  }
  if (model.has_potential()) {
    throw Error("wigner_diagnostics", "unsupported", "residual check supports potential-free models only");
  }
  const PhaseDensity Wm = discrete_wigner(snapshots[0], grid, window);
  const PhaseDensity W0 = discrete_wigner(snapshots[1], grid, window);
  const PhaseDensity Wp = discrete_wigner(snapshots[2], grid, window);
  const double eps = W0.eps;
  const PhaseDensity q1 = apply_q1(W0, model, grid);
  const PhaseDensity q2 = apply_q2(W0, model, grid);
  const PhaseDensity q3 = apply_q3(W0, model, grid);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t n = 0; n < W0.values.size(); ++n) {
    const double dtw = (Wp.values[n] - Wm.values[n]) / (h1 + h2);
    const double r = dtw + q1.values[n] / eps + q2.values[n] - eps * q3.values[n];
    num += r * r;
    den += dtw * dtw;
  }
  return {std::sqrt(num / den), std::sqrt(den)};
}

std::vector<double> wigner_density(const PhaseDensity& W) {
  std::vector<double> rho(W.nx(), 0.0);
  for (std::size_t j = 0; j < W.nx(); ++j) {
    double s = 0.0;
    for (std::size_t l = 0; l < W.nk(); ++l) s += W.at(j, l);
    rho[j] = s * W.dk;
  }
  return rho;
}

std::vector<double> wigner_current(const PhaseDensity& W, const MassModel& model) {
  std::vector<double> J(W.nx(), 0.0);
  for (std::size_t j = 0; j < W.nx(); ++j) {
    double s = 0.0;
    for (std::size_t l = 0; l < W.nk(); ++l) s += W.k[l] * W.at(j, l);
    J[j] = model.mass(W.t, W.x[j]) * s * W.dk;
  }
  return J;
}

void write_phase_csv(std::ostream& os, const PhaseDensity& W, std::string_view value_name) {
  CsvWriter csv(os, {"x", "k", value_name});
  for (std::size_t j = 0; j < W.nx(); ++j) {
    for (std::size_t l = 0; l < W.nk(); ++l) csv.row({W.x[j], W.k[l], W.at(j, l)});
  }
}

}  // namespace vmse
