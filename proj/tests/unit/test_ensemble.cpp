#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "vmse/ensemble.hpp"
#include "vmse/error.hpp"

using namespace vmse;

namespace {

constexpr double kL = 1.625, kT = 0.05, kEps = 0.03125;

VmseProblem small_problem(int M = 104) {
  return {make_grid(kL, M, kT, 1.0 / 256), MassModel(MassKind::Constant, PotentialKind::Zero, {}, 0.5, kL, kT), kEps,
          {256, 0.3, 1.5}, {}, {}, {}};
}

std::shared_ptr<const KLBasis> small_basis(double D) {
  return std::make_shared<const KLBasis>(build_basis({100, 100, D, kEps}, kT, kL, 0.05));
}

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("moment accumulator matches two-pass formulas") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    const std::size_t n = 5;
    std::vector<std::vector<double>> samples(40, std::vector<double>(n));
    MomentAccumulator acc(n, true);
    for (auto& s : samples) {
      for (std::size_t i = 0; i < n; ++i) s[i] = 3.0 + n01(rng) * (1 + i);
      s[4] = 0.5 * s[0] + 0.1 * n01(rng);
      acc.add(s);
    }
    const auto mean = acc.mean();
    const auto sd = acc.stddev();
    const auto cov = acc.covariance();
    for (std::size_t i = 0; i < n; ++i) {
      double m = 0;
      for (const auto& s : samples) m += s[i];
      m /= samples.size();
      CHECK(mean[i] == doctest::Approx(m).epsilon(1e-13));
      for (std::size_t j = 0; j < n; ++j) {
        double mj = 0;
        for (const auto& s : samples) mj += s[j];
        mj /= samples.size();
        double c = 0;
        for (const auto& s : samples) c += (s[i] - m) * (s[j] - mj);
        c /= samples.size() - 1;
        CHECK(cov[i * n + j] == doctest::Approx(c).epsilon(1e-12));
        CHECK(cov[i * n + j] == cov[j * n + i]);
      }
      CHECK(sd[i] >= 0.0);
      CHECK(std::abs(cov[i * n + i] - sd[i] * sd[i]) <= 1e-10 * cov[i * n + i]);
    }
  }

  TEST_CASE("two hand-chosen samples on a four-point grid") {
    const VmseProblem p = small_problem(4);
    const auto basis = small_basis(1.5);
    std::vector<double> a(basis->n_kl(), 0.0), b(basis->n_kl(), 0.0);
    a[0] = 1.0;
    b[0] = -0.5;
    if (b.size() > 1) b[1] = 0.75;
    const std::vector<std::vector<double>> draws = {a, b};
    const EnsembleStats s = run_campaign_with(p, basis, draws, true);
    const FieldSampler sampler(basis, p.grid.x_nodes);
    const VmseResult ra = solve_vmse(p, &sampler, a);
    const VmseResult rb = solve_vmse(p, &sampler, b);
    REQUIRE(s.samples == 2);
    for (int j = 0; j < 4; ++j) {
      const double x = ra.trace.rho.back()[j], y = rb.trace.rho.back()[j];
      CHECK(s.mean_rho.back()[j] == doctest::Approx((x + y) / 2).epsilon(1e-14));
      CHECK(s.std_rho.back()[j] == doctest::Approx(std::abs(x - y) / std::sqrt(2.0)).epsilon(1e-12));
      const double u = ra.trace.current.back()[j], v = rb.trace.current.back()[j];
      CHECK(s.mean_J.back()[j] == doctest::Approx((u + v) / 2).epsilon(1e-14));
    }
  }

  TEST_CASE("zero-strength field has no spread") {
    const VmseProblem p = small_problem();
    CampaignSpec spec;
    spec.N = 6;
    spec.master_seed = 9;
    const EnsembleStats s = run_campaign(p, small_basis(0.0), spec);
    const VmseResult det = solve_vmse(p);
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      CHECK(s.std_rho.back()[j] == 0.0);
      CHECK(s.mean_rho.back()[j] == doctest::Approx(det.trace.rho.back()[j]).epsilon(1e-14));
    }
  }

  TEST_CASE("statistics do not depend on the worker count") {
    const VmseProblem p = small_problem();
    const auto basis = small_basis(1.5);
    CampaignSpec spec;
    spec.N = 10;
    spec.master_seed = 2024;
    spec.workers = 1;
    const EnsembleStats a = run_campaign(p, basis, spec);
    spec.workers = 3;
    const EnsembleStats b = run_campaign(p, basis, spec);
    CHECK(a.mean_rho == b.mean_rho);
    CHECK(a.std_J == b.std_J);
    CHECK(a.cov_rho == b.cov_rho);
    CHECK(a.norm_drifts == b.norm_drifts);
    for (double d : a.norm_drifts) CHECK(d <= 1e-8);
    spec.N = 1;
    CHECK_THROWS_AS(run_campaign(p, basis, spec), Error);
  }

  TEST_CASE("error metrics and slope fit") {
    const std::vector<double> a = {1, 2, 3, 4}, b = {1, 2.5, 3.5, 4};
    CHECK(l1_distance(a, a, 0.1) == 0.0);
    CHECK(l1_distance(a, b, 0.1) == doctest::Approx(0.5 * 0.2));
    const ErrorReport r = error_metrics(a, a, b, a, 0.1, 0.25);
    CHECK(r.err_rho == doctest::Approx(0.1));
    CHECK(r.err_J == 0.0);
    CHECK_THROWS_AS(l1_distance(a, std::vector<double>{1, 2}, 0.1), Error);
    const std::vector<double> eps = {0.0625, 0.03125, 0.015625, 0.0078125};
    std::vector<double> err;
    for (double e : eps) err.push_back(3.0 * e * e);
    CHECK(fit_slope(eps, err) == doctest::Approx(2.0).epsilon(1e-12));
  }
}
