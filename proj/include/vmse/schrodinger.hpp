#pragma once

#include <complex>
#include <span>
#include <vector>

#include "vmse/grid.hpp"
#include "vmse/mass_model.hpp"
#include "vmse/random_field.hpp"
#include "vmse/spectral.hpp"

namespace vmse {

struct WaveField {
  std::vector<cplx> values;
  double t = 0.0;
  double eps = 0.0;
};

/// rho and J profiles, one row per recorded time.
struct ObservableTrace {
  std::vector<double> times;
  std::vector<std::vector<double>> rho;
  std::vector<std::vector<double>> current;
};

/// Gaussian packet exp(-A (x - x0)^2 + i p0 x / eps).
struct PacketSpec {
  double A = 128.0;
  double x0 = 0.25;
  double p0 = 1.0;
};

WaveField initial_wave(const PacketSpec& packet, double eps, const GridSpec& grid);

double discrete_norm(std::span<const cplx> u, double dx);

/// rho = |u|^2 and J = eps Im(m conj(u) Du) on the grid.
void observables(SpectralOps& ops, std::span<const cplx> u, std::span<const double> mass, double eps,
                 std::span<double> rho, std::span<double> current);

struct CnSolverOptions {
  double tolerance = 1e-12;
  int max_fixed_point = 80;
  int gmres_restart = 40;
  int gmres_max_iterations = 2000;
};

struct StepReport {
  int iterations = 0;
  double residual = 0.0;
  bool used_krylov = false;
};

/// Crank-Nicolson propagator for i eps u_t = H u, H = -(eps^2/2) D(m D) + V.
///
/// Each step solves (I + i theta H) u_new = (I - i theta H) u with theta = dt/(2 eps)
/// by a fixed-point iteration preconditioned with the constant-coefficient
/// operator (mean mass and potential inverted exactly in Fourier space),
/// switching to right-preconditioned GMRES when the iteration stalls.
class CrankNicolson {
 public:
  CrankNicolson(const GridSpec& grid, double eps, CnSolverOptions options = {});

  StepReport step(std::vector<cplx>& u, std::span<const double> mass, std::span<const double> potential, double dt);

  /// out = H u.
  void apply_hamiltonian(std::span<const cplx> u, std::span<const double> mass, std::span<const double> potential,
                         std::span<cplx> out);
  SpectralOps& ops() noexcept { return ops_; }

 private:
  void apply_system(double theta, std::span<const cplx> u, std::span<cplx> out);
  void precondition(std::span<const cplx> in, std::span<cplx> out);
  bool gmres(double theta, std::span<const cplx> rhs, std::vector<cplx>& x, double rhs_norm, StepReport& report);

  GridSpec grid_;
  double eps_;
  CnSolverOptions options_;
  SpectralOps ops_;
  std::span<const double> mass_;
  std::span<const double> potential_;
  std::vector<cplx> symbol_inv_;
  std::vector<cplx> work_;
  std::vector<cplx> work2_;
};

struct VmseProblem {
  GridSpec grid;
  MassModel model;
  double eps = 0.0;
  PacketSpec packet;
  std::vector<double> output_times;    // defaults to {T} when empty
  std::vector<double> snapshot_times;  // wave fields kept at these times
  CnSolverOptions solver;
};

struct VmseResult {
  ObservableTrace trace;
  std::vector<WaveField> snapshots;
  double norm_drift = 0.0;       // max relative deviation of the discrete L2 norm
  long clamped_points = 0;       // mass evaluations raised to the ellipticity floor
  long total_iterations = 0;
  int krylov_steps = 0;
  int steps = 0;
};

/// March the VMSE from the initial packet to T. With a sampler and draws the
/// mass is m0 + eps^gamma m1, with m1 evaluated at the half step.
VmseResult solve_vmse(const VmseProblem& problem, const FieldSampler* field = nullptr,
                      std::span<const double> xi = {});

}  // namespace vmse
