#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vmse/config.hpp"
#include "vmse/ensemble.hpp"
#include "vmse/liouville.hpp"
#include "vmse/rte.hpp"
#include "vmse/schrodinger.hpp"

namespace vmse {

/// Wall-clock seconds per named stage, in insertion order.
class StageTimer {
 public:
  template <class F>
  auto time(const std::string& stage, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      record(stage, start);
    } else {
      auto out = body();
      record(stage, start);
      return out;
    }
  }
  nlohmann::json to_json() const;

 private:
  void record(const std::string& stage, std::chrono::steady_clock::time_point start);
  std::vector<std::pair<std::string, double>> stages_;
};

/// File-name fragment for eps: "eps2m6" for 2^-6, the %g form otherwise.
std::string eps_tag(double eps);

VmseProblem make_vmse_problem(const ExperimentConfig& c, double eps, double gamma);

/// Limit (rho0, J0) of the deterministic problem on the given nodes at time t.
LiouvilleResult limit_profile(const ExperimentConfig& c, const MassModel& model, std::span<const double> x_nodes,
                              double t);

/// Velocity grid from the rte section.
VelocityGrid rte_velocity(const ExperimentConfig& c);
RteProblem make_rte_problem(const ExperimentConfig& c, const MassModel& model, double D);

/// Profile `fine` on the nodes of a grid whose spacing is an integer multiple
/// of `fine_dx`; throws when the spacings are not commensurate.
std::vector<double> align_profile(std::span<const double> fine, double fine_dx, double coarse_dx);

std::shared_ptr<const KLBasis> make_basis(const ExperimentConfig& c, double eps);

struct ConvergenceOutcome {
  std::vector<ErrorReport> rows;
  std::vector<double> norm_drifts;
  double slope_rho = 0.0;
  double slope_J = 0.0;
  bool slope_valid = false;
};

/// VMSE against the Liouville limit at T for every eps of the config.
ConvergenceOutcome deterministic_convergence(const ExperimentConfig& c, StageTimer* timer = nullptr);

/// Campaign statistics at T (plus output times) for one eps and one gamma.
EnsembleStats campaign_at(const ExperimentConfig& c, double eps, double gamma, XiDistribution distribution,
                          std::uint64_t seed, int N, bool covariance);

struct RandomOutcome {
  RteResult reference;
  std::vector<EnsembleStats> stats;
  ConvergenceOutcome errors;
};

/// Campaigns for every eps against the RTE limit at T.
RandomOutcome random_convergence(const ExperimentConfig& c, double gamma, StageTimer* timer = nullptr);

/// Columns t,x,rho,J for traces and t,x,rho0,J0 for limit moments.
void write_trace_csv(const std::filesystem::path& path, const std::vector<double>& x, const ObservableTrace& trace);
void write_moments_csv(const std::filesystem::path& path, const std::vector<double>& x,
                       const std::vector<double>& times, const std::vector<std::vector<double>>& rho,
                       const std::vector<std::vector<double>>& J, bool limit = true);
void write_stats_csv(const std::filesystem::path& path, const EnsembleStats& stats);
void write_covariance_csv(const std::filesystem::path& path, const EnsembleStats& stats, bool current);
void write_errors_csv(const std::filesystem::path& path, const std::vector<ErrorReport>& rows);

/// Runs a CLI command ("schrodinger", "liouville", "rte", "campaign",
/// "convergence", "kl-inspect"), writing CSVs and manifest.json into out_dir.
/// Returns the manifest.
nlohmann::json run_command(const std::string& command, const ExperimentConfig& config,
                           const std::filesystem::path& out_dir);

inline constexpr const char* kSoftwareVersion = "1.0.0";

}  // namespace vmse
