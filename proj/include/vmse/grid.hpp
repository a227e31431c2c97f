#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vmse {

/// Uniform periodic space grid on [0, L) with M cells, plus the time step and
/// the spectral wavenumbers mu_l = 2*pi*l/L.
///
/// `wavenumbers` is stored in the FFT-native layout
/// (l = 0, 1, ..., M/2-1, -M/2, ..., -1). `math_index()` and
/// `wavenumbers_math()` are the only places that translate to the
/// mathematical order l = -M/2, ..., M/2-1.
struct GridSpec {
  double L = 0.0;
  int M = 0;
  double dx = 0.0;
  double T = 0.0;
  double dt = 0.0;
  std::vector<double> x_nodes;
  std::vector<double> wavenumbers;

  /// Position of native FFT slot `native` in the mathematical ordering.
  std::size_t math_index(std::size_t native) const;
  /// Native FFT slot holding mathematical mode l (l in [-M/2, M/2)).
  std::size_t native_index(int l) const;
  std::vector<double> wavenumbers_math() const;
};

GridSpec make_grid(double L, int M, double T, double dt);

/// Uniform velocity grid k_min, k_min + dk, ..., k_max with trapezoid weights.
struct VelocityGrid {
  double k_min = 0.0;
  double k_max = 0.0;
  int Nk = 0;
  double dk = 0.0;
  std::vector<double> k_nodes;
  std::vector<double> weights;
};

VelocityGrid make_velocity_grid(double k_min, double k_max, double dk);

/// Step sizes taking t0 to t1 with nominal step dt; the final step is shortened
/// so the sequence lands on t1 exactly.
std::vector<double> step_sequence(double t0, double t1, double dt);

/// Uniform periodic sub-sampling: picks every `stride`-th value.
std::vector<double> restrict_to_stride(std::span<const double> fine, int stride);

}  // namespace vmse
