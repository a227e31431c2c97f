#pragma once

#include <ostream>
#include <span>
#include <vector>

#include "vmse/grid.hpp"
#include "vmse/mass_model.hpp"
#include "vmse/schrodinger.hpp"

namespace vmse {

/// Real density on the (x, k) grid, stored row-major by x.
struct PhaseDensity {
  std::vector<double> x;
  std::vector<double> k;  // ascending
  std::vector<double> values;
  double t = 0.0;
  double dk = 0.0;
  double eps = 0.0;
  double imag_residue = 0.0;  // largest discarded imaginary part

  std::size_t nx() const noexcept { return x.size(); }
  std::size_t nk() const noexcept { return k.size(); }
  double& at(std::size_t ix, std::size_t ik) { return values[ix * k.size() + ik]; }
  double at(std::size_t ix, std::size_t ik) const { return values[ix * k.size() + ik]; }
};

/// Discrete Wigner transform with a symmetric lag window of `window` points
/// (0 selects the full period M). The lag quadrature induces the k grid
/// k_l = l pi eps / (window dx), l = -window/2 .. window/2 - 1.
PhaseDensity discrete_wigner(const WaveField& state, const GridSpec& grid, int window = 0);

/// Empty density on the k grid induced by `window` at the given eps.
PhaseDensity wigner_layout(const GridSpec& grid, double eps, int window = 0);

/// Operators of the Wigner equation dW/dt + Q1 W / eps + Q2 W = eps Q3 W,
/// applied to an arbitrary density laid out by discrete_wigner. The mass is
/// evaluated at the density's time.
PhaseDensity apply_q1(const PhaseDensity& W, const MassModel& model, const GridSpec& grid);
PhaseDensity apply_q2(const PhaseDensity& W, const MassModel& model, const GridSpec& grid);
PhaseDensity apply_q3(const PhaseDensity& W, const MassModel& model, const GridSpec& grid);

struct WignerResidual {
  double residual = 0.0;   // ||dW/dt + Q1 W / eps + Q2 W - eps Q3 W|| / ||dW/dt||
  double time_derivative_norm = 0.0;
};

/// Residual of the Wigner equation at the middle of three equally spaced snapshots.
WignerResidual wigner_residual(std::span<const WaveField> snapshots, const MassModel& model, const GridSpec& grid,
                               int window = 0);

std::vector<double> wigner_density(const PhaseDensity& W);
std::vector<double> wigner_current(const PhaseDensity& W, const MassModel& model);

/// CSV with columns x,k,<value_name>.
void write_phase_csv(std::ostream& os, const PhaseDensity& W, std::string_view value_name = "W");

}  // namespace vmse
