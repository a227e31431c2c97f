#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vmse/grid.hpp"
#include "vmse/liouville.hpp"
#include "vmse/mass_model.hpp"
#include "vmse/random_field.hpp"
#include "vmse/schrodinger.hpp"

namespace vmse {

enum class Experiment { DeterministicExample1, DiodeExample, RandomRTEComparison, ScalingStudy, ConvergenceStudy, Custom };

Experiment parse_experiment(std::string_view name);
std::string to_string(Experiment e);

struct ExperimentConfig {
  Experiment experiment = Experiment::DeterministicExample1;

  struct Domain {
    double L = 1.25;
    double T = 0.5;
  } domain;

  PacketSpec packet;

  struct Schrodinger {
    std::vector<double> eps;
    // dx = 2^-(n + dx_offset), dt = 2^-(dt_slope n + dt_offset) for eps = 2^-n unless overridden.
    double dx_offset = 2.0;
    double dt_slope = 1.2;
    double dt_offset = 3.0;
    double dx = 0.0;
    double dt = 0.0;
    double tolerance = 1e-12;
  } schrodinger;

  struct Mass {
    MassKind kind = MassKind::OscillatoryProduct;
    PotentialKind potential = PotentialKind::Zero;
    double gamma = 0.5;
    std::vector<double> gammas;
    double oscillation_x = 0.2;
    double oscillation_t = 0.2;
    double constant_value = 1.0;
    double bump_depth = 0.5;
    double bump_height = 1.0;
    double potential_slope = 0.0;
  } mass;

  struct Random {
    double a = 100.0;
    double b = 100.0;
    double D = 1.5;
    double threshold = 0.001953125;
    XiDistribution distribution = XiDistribution::Gaussian;
    int N = 10000;
    std::uint64_t seed = 20240601;
    bool covariance = true;
    int min_slope_samples = 200;
  } random;

  struct Rte {
    double dx = 0.0009765625;
    double dk = 0.0009765625;
    double dt = 0.000244140625;
    double k_min = -4.0;
    double k_max = 4.0;
    double band = 0.0;  // momentum half-width of the collision band, 0 keeps all pairs
    double skip_tolerance = 1e-14;
  } rte;

  struct Liouville {
    DeltaTreatment mode = DeltaTreatment::Delta;
    double tolerance = 1e-10;
    double scan_min = -4.0;
    double scan_max = 4.0;
    int scan_points = 801;
    double dk = 0.0;  // regularized mode k step, 0 selects the rte dk
    double k_min = 0.0;
    double k_max = 0.0;
  } liouville;

  struct Output {
    std::vector<double> times;
    std::string dir;
    bool phase_density = false;
  } output;

  int workers = 1;
};

/// Preset defaults for an experiment.
ExperimentConfig preset(Experiment e);

/// Resolves a config: preset from the "experiment" key (or `fallback`), then
/// file sections, then `section.key=value` overrides. A manifest is accepted
/// in place of a config file. Unknown keys are errors.
ExperimentConfig parse_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides,
                              Experiment fallback = Experiment::DeterministicExample1);
ExperimentConfig parse_config_json(const nlohmann::json& doc, const std::vector<std::string>& overrides,
                                   Experiment fallback = Experiment::DeterministicExample1);

nlohmann::json to_json(const ExperimentConfig& c);

/// Range and consistency checks; throws naming the offending key.
void validate(const ExperimentConfig& c);

/// Space and time steps for eps under the configured resolution rule.
GridSpec resolve_grid(const ExperimentConfig& c, double eps);
MassModel build_model(const ExperimentConfig& c, double gamma);
MassModel build_model(const ExperimentConfig& c);

}  // namespace vmse
