#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vmse {

enum class MassKind { OscillatoryProduct, DiodeBumps, Constant };
enum class PotentialKind { Zero, DiodeBumps, Linear };

MassKind parse_mass_kind(std::string_view name);
PotentialKind parse_potential_kind(std::string_view name);
std::string to_string(MassKind kind);
std::string to_string(PotentialKind kind);

/// Open interval carrying one smooth bump exp(c (1/g_mid - 1/g(x))),
/// g(x) = (right - x)(x - left).
struct BumpWindow {
  double left = 0.0;
  double right = 0.0;
};

struct MassParameters {
  double oscillation_x = 0.2;    // amplitude of sin(2 pi x)
  double oscillation_t = 0.2;    // amplitude of cos(2 pi t)
  double constant_value = 1.0;   // value for MassKind::Constant
  double bump_depth = 0.5;       // m0 = 1 - depth * bump
  double bump_height = 1.0;      // V = height * bump
  double bump_sharpness = 0.015625;  // c = 2^-6
  std::vector<BumpWindow> windows = {{0.5, 0.75}, {1.0, 1.25}};
  double potential_slope = 0.0;  // V = slope * x for PotentialKind::Linear
};

struct MassGradient {
  double dx = 0.0;
  double dt = 0.0;
};

/// Composed mass value, flagged when it had to be raised to the ellipticity floor.
struct ComposedMass {
  double value = 0.0;
  bool clamped = false;
};

inline constexpr double kMassFloor = 1e-6;

/// Background mass m0(t, x), potential V(t, x) and the exponent of the random
/// perturbation m = m0 + eps^gamma m1. Immutable after construction.
class MassModel {
 public:
  /// Scans m0 over [0, L] x [0, T] and throws if it is not bounded away from zero.
  MassModel(MassKind kind, PotentialKind potential, MassParameters params, double gamma, double L, double T);

  MassKind kind() const noexcept { return kind_; }
  PotentialKind potential_kind() const noexcept { return potential_; }
  const MassParameters& parameters() const noexcept { return params_; }
  double gamma() const noexcept { return gamma_; }
  double min_mass() const noexcept { return min_mass_; }
  double max_mass() const noexcept { return max_mass_; }
  bool time_independent() const noexcept { return kind_ != MassKind::OscillatoryProduct || params_.oscillation_t == 0.0; }
  bool has_potential() const noexcept;

  double mass(double t, double x) const;
  MassGradient mass_gradient(double t, double x) const;
  double mass_dxx(double t, double x) const;

  double potential(double t, double x) const;
  double potential_dx(double t, double x) const;
  double potential_dxx(double t, double x) const;

  /// m0 + eps^gamma m1; throws when the result is not positive.
  double compose(double eps, double m1_value, double t, double x) const;
  /// Same sum, raised to kMassFloor when it is below it.
  ComposedMass compose_clamped(double eps, double m1_value, double t, double x) const;

 private:
  struct BumpJet {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
  };
  BumpJet bump(double x) const;

  MassKind kind_;
  PotentialKind potential_;
  MassParameters params_;
  double gamma_;
  double min_mass_ = 0.0;
  double max_mass_ = 0.0;
  double period_ = 0.0;
};

}  // namespace vmse
