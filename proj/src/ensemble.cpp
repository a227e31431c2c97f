#include "vmse/ensemble.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "vmse/error.hpp"
#include "vmse/parallel.hpp"

namespace vmse {

MomentAccumulator::MomentAccumulator(std::size_t n, bool covariance)
    : n_(n), cov_(covariance), mean_(n, 0.0), m2_(n, 0.0), delta_(n, 0.0) {
  if (cov_) comoment_.assign(n * n, 0.0);
}

void MomentAccumulator::add(std::span<const double> x) {
  if (x.size() != n_) throw Error("ensemble_stats", "length_mismatch", "sample length differs from accumulator");
  ++count_;
  const double inv = 1.0 / count_;
  for (std::size_t i = 0; i < n_; ++i) {
    delta_[i] = x[i] - mean_[i];
    mean_[i] += delta_[i] * inv;
    m2_[i] += delta_[i] * (x[i] - mean_[i]);
  }
  if (!cov_) return;
  for (std::size_t i = 0; i < n_; ++i) {
    if (delta_[i] == 0.0) continue;
    double* row = &comoment_[i * n_];
    for (std::size_t j = i; j < n_; ++j) row[j] += delta_[i] * (x[j] - mean_[j]);
  }
}

std::vector<double> MomentAccumulator::stddev() const {
  std::vector<double> s(n_, 0.0);
  if (count_ < 2) return s;
  for (std::size_t i = 0; i < n_; ++i) s[i] = std::sqrt(std::max(m2_[i], 0.0) / (count_ - 1));
  return s;
}

std::vector<double> MomentAccumulator::covariance() const {
  std::vector<double> c(n_ * n_, 0.0);
  if (!cov_ || count_ < 2) return c;
  const double inv = 1.0 / (count_ - 1);
  for (std::size_t i = 0; i < n_; ++i) {
    c[i * n_ + i] = m2_[i] * inv;
    for (std::size_t j = i + 1; j < n_; ++j) {
      const double v = comoment_[i * n_ + j] * inv;
      c[i * n_ + j] = v;
      c[j * n_ + i] = v;
    }
  }
  return c;
}

namespace {

struct SampleOutcome {
  bool ok = false;
  ObservableTrace trace;
  long clamps = 0;
  double drift = 0.0;
};

EnsembleStats reduce(const VmseProblem& problem, std::size_t N, bool covariance, int workers, double max_failure,
                     const std::function<SampleOutcome(std::size_t)>& run_sample) {
  if (N < 2) throw Error("ensemble_stats", "invalid_parameter", "campaign needs N >= 2 for standard deviations");
  const std::size_t M = problem.grid.M;
  EnsembleStats st;
  st.eps = problem.eps;
  st.x = problem.grid.x_nodes;
  std::vector<MomentAccumulator> rho_acc, j_acc;

  // Samples run in blocks; each block is reduced in index order once complete.
  const std::size_t block = static_cast<std::size_t>(std::max(1, resolve_workers(workers))) * 4;
  std::vector<SampleOutcome> outcomes;
  for (std::size_t start = 0; start < N; start += block) {
    const std::size_t count = std::min(block, N - start);
    outcomes.assign(count, SampleOutcome{});
    parallel_for(count, workers, [&](std::size_t k) { outcomes[k] = run_sample(start + k); });
    for (std::size_t k = 0; k < count; ++k) {
      SampleOutcome& o = outcomes[k];
      st.clamp_counts.push_back(o.clamps);
      st.norm_drifts.push_back(o.drift);
      if (!o.ok) {
        st.failed.push_back(static_cast<int>(start + k));
        continue;
      }
      if (rho_acc.empty()) {
        st.times = o.trace.times;
        for (std::size_t n = 0; n < st.times.size(); ++n) {
          rho_acc.emplace_back(M, covariance);
          j_acc.emplace_back(M, covariance);
        }
      }
      for (std::size_t n = 0; n < st.times.size(); ++n) {
        rho_acc[n].add(o.trace.rho[n]);
        j_acc[n].add(o.trace.current[n]);
      }
    }
  }
  if (static_cast<double>(st.failed.size()) > max_failure * static_cast<double>(N)) {
    throw Error("ensemble_stats", "campaign_failed",
                std::to_string(st.failed.size()) + " of " + std::to_string(N) + " samples failed");
  }
  st.samples = static_cast<int>(N - st.failed.size());
  for (std::size_t n = 0; n < st.times.size(); ++n) {
    st.mean_rho.push_back(rho_acc[n].mean());
    st.std_rho.push_back(rho_acc[n].stddev());
    st.mean_J.push_back(j_acc[n].mean());
    st.std_J.push_back(j_acc[n].stddev());
    if (covariance) {
      st.cov_rho.push_back(rho_acc[n].covariance());
      st.cov_J.push_back(j_acc[n].covariance());
    }
  }
  return st;
}

SampleOutcome solve_sample(const VmseProblem& problem, const FieldSampler& sampler, std::span<const double> xi) {
  SampleOutcome o;
  try {
    VmseResult r = solve_vmse(problem, &sampler, xi);
    o.ok = true;
    o.trace = std::move(r.trace);
    o.clamps = r.clamped_points;
    o.drift = r.norm_drift;
  } catch (const Error&) {
    o.ok = false;
  }
  return o;
}

}  // namespace

EnsembleStats run_campaign(const VmseProblem& problem, std::shared_ptr<const KLBasis> basis,
                           const CampaignSpec& spec) {
  if (spec.N < 2) throw Error("ensemble_stats", "invalid_parameter", "campaign needs N >= 2 for standard deviations");
  const FieldSampler sampler(basis, problem.grid.x_nodes);
  const std::size_t n_kl = basis->n_kl();
  return reduce(problem, static_cast<std::size_t>(spec.N), spec.covariance, spec.workers, spec.max_failure_fraction,
                [&](std::size_t i) {
                  const FieldRealization r =
                      draw_realization(n_kl, spec.distribution, sample_seed(spec.master_seed, problem.eps, i));
                  return solve_sample(problem, sampler, r.xi);
                });
}

EnsembleStats run_campaign_with(const VmseProblem& problem, std::shared_ptr<const KLBasis> basis,
                                std::span<const std::vector<double>> draws, bool covariance, int workers) {
  const FieldSampler sampler(basis, problem.grid.x_nodes);
  return reduce(problem, draws.size(), covariance, workers, 0.01,
                [&](std::size_t i) { return solve_sample(problem, sampler, draws[i]); });
}

double l1_distance(std::span<const double> a, std::span<const double> b, double dx) {
  if (a.size() != b.size()) throw Error("ensemble_stats", "grid_mismatch", "profiles live on different grids");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * dx;
}

ErrorReport error_metrics(std::span<const double> limit_rho, std::span<const double> limit_J,
                          std::span<const double> rho, std::span<const double> J, double dx, double eps) {
  return {eps, l1_distance(limit_rho, rho, dx), l1_distance(limit_J, J, dx)};
}

double fit_slope(std::span<const double> eps, std::span<const double> err) {
  if (eps.size() != err.size() || eps.size() < 2) {
    throw Error("ensemble_stats", "invalid_parameter", "slope fit needs at least two matching points");
  }
  const double n = static_cast<double>(eps.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !(err[i] > 0.0)) throw Error("ensemble_stats", "invalid_parameter", "slope fit needs positive values");
    const double lx = std::log(eps[i]);
    const double ly = std::log(err[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace vmse
