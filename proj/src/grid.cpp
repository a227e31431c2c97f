#include "vmse/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "vmse/error.hpp"

namespace vmse {

namespace {
[[noreturn]] void grid_error(const std::string& what) { throw Error("core_grid", "invalid_grid", what); }
}  // namespace

std::size_t GridSpec::math_index(std::size_t native) const {
  const std::size_t half = static_cast<std::size_t>(M / 2);
  return native < half ? native + half : native - half;
}

std::size_t GridSpec::native_index(int l) const {
  return static_cast<std::size_t>(l >= 0 ? l : l + M);
}

std::vector<double> GridSpec::wavenumbers_math() const {
  std::vector<double> out(wavenumbers.size());
  for (std::size_t n = 0; n < wavenumbers.size(); ++n) out[math_index(n)] = wavenumbers[n];
  return out;
}

GridSpec make_grid(double L, int M, double T, double dt) {
  if (!(L > 0.0)) grid_error("domain length L must be positive");
  if (M < 4) grid_error("number of cells M must be at least 4, got " + std::to_string(M));
  if (M % 2 != 0) grid_error("number of cells M must be even, got " + std::to_string(M));
  if (!(T > 0.0)) grid_error("final time T must be positive");
  if (!(dt > 0.0) || !(dt < T)) grid_error("time step must satisfy 0 < dt < T");

  GridSpec g;
  g.L = L;
  g.M = M;
  g.dx = L / M;
  g.T = T;
  g.dt = dt;
  g.x_nodes.resize(M);
  g.wavenumbers.resize(M);
  for (int j = 0; j < M; ++j) g.x_nodes[j] = j * g.dx;
  const double base = 2.0 * std::numbers::pi / L;
  for (int n = 0; n < M; ++n) {
    const int l = n < M / 2 ? n : n - M;
    g.wavenumbers[n] = base * l;
  }
  return g;
}

VelocityGrid make_velocity_grid(double k_min, double k_max, double dk) {
  if (!(k_max > k_min) || !(dk > 0.0)) {
    throw Error("core_grid", "invalid_grid", "velocity grid needs k_min < k_max and dk > 0");
  }
  VelocityGrid v;
  v.k_min = k_min;
  v.dk = dk;
  v.Nk = static_cast<int>(std::lround((k_max - k_min) / dk)) + 1;
  if (v.Nk < 2) throw Error("core_grid", "invalid_grid", "velocity grid needs at least two nodes");
  v.k_max = k_min + (v.Nk - 1) * dk;
  v.k_nodes.resize(v.Nk);
  v.weights.assign(v.Nk, dk);
  for (int l = 0; l < v.Nk; ++l) v.k_nodes[l] = k_min + l * dk;
  v.weights.front() = 0.5 * dk;
  v.weights.back() = 0.5 * dk;
  return v;
}

std::vector<double> step_sequence(double t0, double t1, double dt) {
  std::vector<double> steps;
  if (!(t1 > t0)) return steps;
  const double span = t1 - t0;
  // Round-off guard: a remainder below 1e-9 dt is folded into the previous step.
  const auto full = static_cast<long>(std::floor(span / dt * (1.0 + 1e-12)));
  double t = t0;
  for (long n = 0; n < full; ++n) {
    steps.push_back(dt);
    t = t0 + (n + 1) * dt;
  }
  const double rest = t1 - t;
  if (rest > 1e-9 * dt) {
    steps.push_back(rest);
  } else if (!steps.empty()) {
    steps.back() += rest;
  }
  return steps;
}

std::vector<double> restrict_to_stride(std::span<const double> fine, int stride) {
  std::vector<double> out;
  out.reserve(fine.size() / stride + 1);
  for (std::size_t j = 0; j < fine.size(); j += stride) out.push_back(fine[j]);
  return out;
}

}  // namespace vmse
