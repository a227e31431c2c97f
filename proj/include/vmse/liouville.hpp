#pragma once

#include <span>
#include <vector>

#include "vmse/grid.hpp"
#include "vmse/mass_model.hpp"
#include "vmse/schrodinger.hpp"
#include "vmse/wigner.hpp"

namespace vmse {

/// Backward characteristic from (y, p) at time T to time 0, with the
/// sensitivities of the endpoint with respect to p.
struct BackTrajectory {
  double y = 0.0;
  double p = 0.0;
  double x_T = 0.0;  // wrapped into [0, L)
  double k_T = 0.0;
  double dx_dp = 0.0;
  double dk_dp = 0.0;
  double ode_tolerance = 0.0;
  int steps = 0;
  double hamiltonian_drift = 0.0;  // max |H - H(start)| over accepted steps
};

/// Integrates x' = -k m0(T - s, x), k' = k^2 m0_x(T - s, x)/2 + V_x(T - s, x)
/// for s in [0, T] with adaptive Dormand-Prince 5(4).
BackTrajectory trace_back(double y, double p, const MassModel& model, double T, double tol, double L);

enum class DeltaTreatment { Delta, Regularized };

struct LiouvilleOptions {
  DeltaTreatment mode = DeltaTreatment::Delta;
  double ode_tolerance = 1e-10;
  double L = 0.0;
  // Delta mode: momenta scanned at each node for roots of k_T(p) = p0.
  double scan_min = -3.0;
  double scan_max = 3.0;
  int scan_points = 601;
  // Regularized mode: k grid and width of the Gaussian replacing the delta (defaults to 2 dk).
  VelocityGrid velocity;
  double width = 0.0;
  int workers = 1;
};

struct LiouvilleResult {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> rho0;
  std::vector<double> J0;
  PhaseDensity phase;  // filled in regularized mode only
  long trajectories = 0;
  long roots = 0;
};

/// Periodic Gaussian exp(-2A d^2), d the minimal-image distance to x0.
double initial_density(const PacketSpec& packet, double x, double L);

/// Limit observables at time T on the given nodes for initial data
/// exp(-2A (x - x0)^2) delta(k - p0).
LiouvilleResult evaluate_liouville(const MassModel& model, const PacketSpec& packet, std::span<const double> x_nodes,
                                   double T, const LiouvilleOptions& options);

}  // namespace vmse
