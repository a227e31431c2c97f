#include "vmse/mass_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vmse/error.hpp"

namespace vmse {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;

// Below this exponent the bump and all its derivatives underflow to zero.
constexpr double kExponentCutoff = -700.0;
}  // namespace

MassKind parse_mass_kind(std::string_view name) {
  if (name == "OscillatoryProduct") return MassKind::OscillatoryProduct;
  if (name == "DiodeBumps") return MassKind::DiodeBumps;
  if (name == "Constant") return MassKind::Constant;
  throw Error("mass_models", "invalid_kind", "unknown mass kind '" + std::string(name) + "'");
}

PotentialKind parse_potential_kind(std::string_view name) {
  if (name == "Zero") return PotentialKind::Zero;
  if (name == "DiodeBumps") return PotentialKind::DiodeBumps;
  if (name == "Linear") return PotentialKind::Linear;
  throw Error("mass_models", "invalid_kind", "unknown potential kind '" + std::string(name) + "'");
}

std::string to_string(MassKind kind) {
  switch (kind) {
    case MassKind::OscillatoryProduct: return "OscillatoryProduct";
    case MassKind::DiodeBumps: return "DiodeBumps";
    case MassKind::Constant: return "Constant";
  }
  return "?";
}

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Zero: return "Zero";
    case PotentialKind::DiodeBumps: return "DiodeBumps";
    case PotentialKind::Linear: return "Linear";
  }
  return "?";
}

MassModel::MassModel(MassKind kind, PotentialKind potential, MassParameters params, double gamma, double L, double T)
    : kind_(kind), potential_(potential), params_(std::move(params)), gamma_(gamma), period_(L) {
  if (!(L > 0.0) || !(T > 0.0)) throw Error("mass_models", "invalid_parameter", "domain lengths must be positive");
  if (!(gamma > 0.0 && gamma <= 1.5)) {
    throw Error("mass_models", "invalid_parameter", "gamma must lie in (0, 1.5], got " + std::to_string(gamma));
  }
  for (const auto& w : params_.windows) {
    if (!(w.right > w.left)) throw Error("mass_models", "invalid_parameter", "bump window must have right > left");
  }
  constexpr int nx = 2001;
  constexpr int nt = 41;
  min_mass_ = mass(0.0, 0.0);
  max_mass_ = min_mass_;
  for (int it = 0; it < nt; ++it) {
    const double t = T * it / (nt - 1);
    for (int ix = 0; ix < nx; ++ix) {
      const double m = mass(t, L * ix / (nx - 1));
      min_mass_ = std::min(min_mass_, m);
      max_mass_ = std::max(max_mass_, m);
    }
  }
  if (!(min_mass_ > 0.0)) {
    throw Error("mass_models", "ellipticity", "background mass is not bounded away from zero (min " +
                                                  std::to_string(min_mass_) + ")");
  }
}

bool MassModel::has_potential() const noexcept {
  switch (potential_) {
    case PotentialKind::Zero: return false;
    case PotentialKind::DiodeBumps: return params_.bump_height != 0.0;
    case PotentialKind::Linear: return params_.potential_slope != 0.0;
  }
  return false;
}

// The bump profiles live on the periodic cell [0, L).
MassModel::BumpJet MassModel::bump(double x) const {
  x -= period_ * std::floor(x / period_);
  const double c = params_.bump_sharpness;
  for (const auto& w : params_.windows) {
    if (x <= w.left || x >= w.right) continue;
    const double g = (w.right - x) * (x - w.left);
    const double half = 0.5 * (w.right - w.left);
    const double g_mid = half * half;
    const double phi = c * (1.0 / g_mid - 1.0 / g);
    if (phi < kExponentCutoff) return {};
    const double gp = w.right + w.left - 2.0 * x;
    const double dphi = c * gp / (g * g);
    const double d2phi = c * (-2.0 / (g * g) - 2.0 * gp * gp / (g * g * g));
    const double b = std::exp(phi);
    return {b, b * dphi, b * (d2phi + dphi * dphi)};
  }
  return {};
}

double MassModel::mass(double t, double x) const {
  switch (kind_) {
    case MassKind::OscillatoryProduct:
      return (1.0 + params_.oscillation_x * std::sin(two_pi * x)) * (1.0 + params_.oscillation_t * std::cos(two_pi * t));
    case MassKind::DiodeBumps:
      return 1.0 - params_.bump_depth * bump(x).value;
    case MassKind::Constant:
      return params_.constant_value;
  }
  return 0.0;
}

MassGradient MassModel::mass_gradient(double t, double x) const {
  switch (kind_) {
    case MassKind::OscillatoryProduct: {
      const double sx = 1.0 + params_.oscillation_x * std::sin(two_pi * x);
      const double st = 1.0 + params_.oscillation_t * std::cos(two_pi * t);
      return {params_.oscillation_x * two_pi * std::cos(two_pi * x) * st,
              -params_.oscillation_t * two_pi * std::sin(two_pi * t) * sx};
    }
    case MassKind::DiodeBumps:
      return {-params_.bump_depth * bump(x).d1, 0.0};
    case MassKind::Constant:
      return {0.0, 0.0};
  }
  return {};
}

double MassModel::mass_dxx(double t, double x) const {
  switch (kind_) {
    case MassKind::OscillatoryProduct:
      return -params_.oscillation_x * two_pi * two_pi * std::sin(two_pi * x) *
             (1.0 + params_.oscillation_t * std::cos(two_pi * t));
    case MassKind::DiodeBumps:
      return -params_.bump_depth * bump(x).d2;
    case MassKind::Constant:
      return 0.0;
  }
  return 0.0;
}

double MassModel::potential(double /*t*/, double x) const {
  switch (potential_) {
    case PotentialKind::Zero: return 0.0;
    case PotentialKind::DiodeBumps: return params_.bump_height * bump(x).value;
    case PotentialKind::Linear: return params_.potential_slope * x;
  }
  return 0.0;
}

double MassModel::potential_dx(double /*t*/, double x) const {
  switch (potential_) {
    case PotentialKind::Zero: return 0.0;
    case PotentialKind::DiodeBumps: return params_.bump_height * bump(x).d1;
    case PotentialKind::Linear: return params_.potential_slope;
  }
  return 0.0;
}

double MassModel::potential_dxx(double /*t*/, double x) const {
  if (potential_ == PotentialKind::DiodeBumps) return params_.bump_height * bump(x).d2;
  return 0.0;
}

double MassModel::compose(double eps, double m1_value, double t, double x) const {
  if (!(eps > 0.0 && eps < 1.0)) throw Error("mass_models", "invalid_parameter", "eps must lie in (0, 1)");
  const double m = mass(t, x) + std::pow(eps, gamma_) * m1_value;
  if (!(m > 0.0)) {
    throw Error("mass_models", "ellipticity",
                "composed mass " + std::to_string(m) + " is not positive at (t=" + std::to_string(t) +
                    ", x=" + std::to_string(x) + ")");
  }
  return m;
}

ComposedMass MassModel::compose_clamped(double eps, double m1_value, double t, double x) const {
  const double m = mass(t, x) + std::pow(eps, gamma_) * m1_value;
  if (m < kMassFloor) return {kMassFloor, true};
  return {m, false};
}

}  // namespace vmse
