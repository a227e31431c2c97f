#pragma once

#include <span>
#include <vector>

#include "vmse/grid.hpp"
#include "vmse/mass_model.hpp"
#include "vmse/random_field.hpp"
#include "vmse/schrodinger.hpp"
#include "vmse/wigner.hpp"

namespace vmse {

/// Kinetic density W(x, k) on the transport grid, row-major by x.
using KineticState = PhaseDensity;

/// sigma(k, p) = (2 pi)^-1 (pk)^2/4 * Rhat(m0 (p^2 - k^2)/2, p - k), symmetric in (k, p) bit for bit.
class ScatteringKernel {
 public:
  ScatteringKernel(CorrelationSpec corr, const MassModel& model) : corr_(corr), model_(&model) {}

  double value(double t, double x, double k, double p) const { return value_at_mass(model_->mass(t, x), k, p); }
  double value_at_mass(double m0, double k, double p) const;
  const CorrelationSpec& correlation() const noexcept { return corr_; }
  const MassModel& model() const noexcept { return *model_; }

 private:
  CorrelationSpec corr_;
  const MassModel* model_;
};

double kernel_value(const ScatteringKernel& kernel, double t, double x, double k, double p);

/// Banded trapezoid discretization of W -> int sigma(k, p) (W(p) - W(k)) dp on
/// a velocity grid, for one value of the background mass.
class CollisionOperator {
 public:
  /// half_band = 0 keeps every pair.
  CollisionOperator(const ScatteringKernel& kernel, const VelocityGrid& velocity, int half_band);

  void assemble(double m0);
  double assembled_mass() const noexcept { return m0_; }
  /// out = gain - loss for one column at the assembled mass.
  void apply(std::span<const double> W, std::span<double> out) const;
  int half_band() const noexcept { return band_; }

 private:
  const ScatteringKernel* kernel_;
  const VelocityGrid* velocity_;
  int band_;
  int width_;
  double m0_ = -1.0;
  std::vector<double> weighted_;  // w_q sigma(k_l, k_q) off the diagonal, Nk x width
};

/// Collision integral for a column at (t, x).
std::vector<double> collision_apply(std::span<const double> W, const ScatteringKernel& kernel, double t, double x,
                                    const VelocityGrid& velocity, int half_band = 0);

/// Largest stable step for the transport terms at CFL number `cfl`.
double transport_dt_limit(const MassModel& model, double t, std::span<const double> x_nodes,
                          const VelocityGrid& velocity, double dx, double cfl = 0.5);

/// One SSP-RK3 step of dW/dt + d_x(m0 k W) + d_k(-k^2 m0_x W / 2) = 0 with
/// WENO5 and local Lax-Friedrichs splitting; periodic in x, zero-gradient in k.
void weno5_flux_step(KineticState& state, const MassModel& model, double dt, double L, int workers = 1);

struct RteProblem {
  double L = 0.0;
  double dx = 0.0;
  double T = 0.0;
  double dt = 0.0;
  VelocityGrid velocity;
  MassModel model;
  CorrelationSpec corr;
  PacketSpec packet;
  double initial_width = 0.0;  // Gaussian width in k, 0 selects 2 dk
  int half_band = 0;
  double skip_tolerance = 1e-14;  // columns below this fraction of the peak skip collisions
  std::vector<double> output_times;
  bool keep_phase = false;
  int workers = 1;
};

struct RteResult {
  std::vector<double> x;
  std::vector<double> times;
  std::vector<std::vector<double>> rho0;
  std::vector<std::vector<double>> J0;
  std::vector<KineticState> phases;
  double initial_mass = 0.0;
  double mass_drift = 0.0;      // max relative deviation of the total mass
  double boundary_density = 0.0;  // max edge-of-grid column density relative to the peak
  double dt_used = 0.0;
  int steps = 0;
};

KineticState rte_initial_state(const RteProblem& problem);
double total_mass(const KineticState& state, const VelocityGrid& velocity, double dx);
void kinetic_moments(const KineticState& state, const VelocityGrid& velocity, const MassModel& model,
                     std::vector<double>& rho, std::vector<double>& J);

/// Strang splitting: half collision, transport, half collision (adjacent
/// collision halves merge when the mass is time-independent).
RteResult solve_rte(const RteProblem& problem);

}  // namespace vmse
