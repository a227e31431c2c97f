#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "vmse/random_field.hpp"
#include "vmse/schrodinger.hpp"

namespace vmse {

struct CampaignSpec {
  int N = 0;
  std::uint64_t master_seed = 0;
  XiDistribution distribution = XiDistribution::Gaussian;
  bool covariance = true;
  int workers = 1;
  double max_failure_fraction = 0.01;
};

/// Monte Carlo statistics of (rho, J) at each recorded time; N - 1 denominators.
struct EnsembleStats {
  double eps = 0.0;
  std::vector<double> x;
  std::vector<double> times;
  std::vector<std::vector<double>> mean_rho, std_rho, mean_J, std_J;
  std::vector<std::vector<double>> cov_rho, cov_J;  // nx * nx per time, row-major
  int samples = 0;                     // successful samples
  std::vector<long> clamp_counts;      // per sample, index order
  std::vector<double> norm_drifts;     // per sample, index order
  std::vector<int> failed;             // failed sample indices
};

/// Streaming accumulator for mean, variance and co-moments, fed in sample order.
class MomentAccumulator {
 public:
  MomentAccumulator(std::size_t n, bool covariance);
  void add(std::span<const double> sample);
  int count() const noexcept { return count_; }
  std::vector<double> mean() const { return mean_; }
  std::vector<double> stddev() const;
  std::vector<double> covariance() const;

 private:
  std::size_t n_;
  bool cov_;
  int count_ = 0;
  std::vector<double> mean_, m2_, comoment_, delta_;
};

/// Runs N samples of the random-mass VMSE. Sample i draws its coefficients from
/// sample_seed(master_seed, eps, i); results are reduced in index order so the
/// statistics do not depend on the worker count.
EnsembleStats run_campaign(const VmseProblem& problem, std::shared_ptr<const KLBasis> basis,
                           const CampaignSpec& spec);

/// Statistics from precomputed coefficient vectors, reduced in the given order.
EnsembleStats run_campaign_with(const VmseProblem& problem, std::shared_ptr<const KLBasis> basis,
                                std::span<const std::vector<double>> draws, bool covariance, int workers = 1);

struct ErrorReport {
  double eps = 0.0;
  double err_rho = 0.0;
  double err_J = 0.0;
};

double l1_distance(std::span<const double> a, std::span<const double> b, double dx);
ErrorReport error_metrics(std::span<const double> limit_rho, std::span<const double> limit_J,
                          std::span<const double> rho, std::span<const double> J, double dx, double eps);

/// Least-squares slope of log(err) against log(eps).
double fit_slope(std::span<const double> eps, std::span<const double> err);

}  // namespace vmse
