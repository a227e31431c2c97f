#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "vmse/error.hpp"
#include "vmse/random_field.hpp"

using namespace vmse;
using std::numbers::pi;

namespace {

// Sign scan at step 1e-4 followed by bisection, skipping the poles of tan.
double scan_first_root(Branch branch, double c, double h, double lo, double hi) {
  auto f = [&](double w) { return static_cast<double>(branch_residual(branch, c, h, w)); };
  const double step = 1e-4;
  for (double a = lo + step; a + step < hi; a += step) {
    const double b = a + step;
    const double fa = f(a), fb = f(b);
    if (std::signbit(fa) == std::signbit(fb)) continue;
    if (std::abs(fa) > 1e3 || std::abs(fb) > 1e3) continue;
    double x0 = a, x1 = b;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (x0 + x1);
      if (std::signbit(f(mid)) == std::signbit(f(x0))) {
        x0 = mid;
      } else {
        x1 = mid;
      }
    }
    return 0.5 * (x0 + x1);
  }
  return -1.0;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

const CorrelationSpec kCorr6{100.0, 100.0, 1.5, 0.015625};

}  // namespace

TEST_SUITE("random_field") {
  TEST_CASE("power spectrum is positive and even") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    for (int n = 0; n < 200; ++n) {
      const double w = n01(rng), p = n01(rng);
      const double s = kCorr6.spectrum(w, p);
      CHECK(s > 0.0);
      CHECK(s == kCorr6.spectrum(-w, p));
      CHECK(s == kCorr6.spectrum(w, -p));
    }
    CHECK(kCorr6.spectrum(0, 0) == doctest::Approx(4 * 100 * 100 * 1.5 * 1.5));
    CHECK(kCorr6.correlation(-0.5, 2.0) == doctest::Approx(2.25 * std::exp(-0.005 - 0.02)));
  }

  TEST_CASE("first cos-branch root matches a scan oracle") {
    const double c = 1.5625, h = 0.2;
    const auto roots = solve_frequencies(c, h, 4);
    const double oracle = scan_first_root(Branch::Cos, c, h, 0.0, pi / (2 * h));
    REQUIRE(oracle > 0.0);
    CHECK(static_cast<double>(roots[0]) < pi / (2 * h));
    CHECK(std::abs(static_cast<double>(roots[0]) - oracle) < 1e-9);
    const double sin_oracle = scan_first_root(Branch::Sin, c, h, pi / (2 * h), 3 * pi / (2 * h));
    CHECK(std::abs(static_cast<double>(roots[1]) - sin_oracle) < 1e-9);
  }

  TEST_CASE("first root vanishes for long correlation") {
    CHECK(static_cast<double>(solve_frequencies(1e6, 0.2, 1).front()) < 1e-2);
  }

  TEST_CASE("sin-branch root is bracketed where tan is negative") {
    for (double c : {0.01, 1.5625, 100.0}) {
      const double h = 0.8125;
      const auto roots = solve_frequencies(c, h, 2);
      CHECK(static_cast<double>(roots[1]) > pi / (2 * h));
      CHECK(static_cast<double>(roots[1]) < 3 * pi / (2 * h));
    }
  }

  TEST_CASE("axis eigenpairs satisfy their equations") {
    const AxisBasis ax = make_axis_basis(1.5625, 0.8125, 200);
    REQUIRE(ax.size() == 200);
    for (std::size_t n = 0; n < ax.size(); ++n) {
      const long double w = ax.roots[n];
      CHECK(std::abs(static_cast<double>(branch_residual(ax.branches[n], 1.5625L, 0.8125L, w))) <= 1e-10);
      CHECK(ax.branches[n] == (n % 2 == 0 ? Branch::Cos : Branch::Sin));
      const double lam = 2 * 1.5625 / (1 + 1.5625 * 1.5625 * ax.frequencies[n] * ax.frequencies[n]);
      CHECK(ax.eigenvalues[n] == lam);
      CHECK(ax.eigenvalues[n] > 0.0);
      if (n > 0) CHECK(ax.eigenvalues[n] < ax.eigenvalues[n - 1]);
    }
  }

  TEST_CASE("truncation count at eps = 2^-6") {
    const KLBasis b = build_basis(kCorr6, 0.4, 1.625, std::exp2(-9));
    CHECK(b.n_kl() == 663);
    const double lead = b.pairs.front().weight;
    for (std::size_t n = 0; n < b.passing; ++n) {
      CHECK(b.pairs[n].weight / lead >= std::exp2(-9));
      if (n > 0) CHECK(b.pairs[n].weight <= b.pairs[n - 1].weight);
    }
    CHECK(b.pairs.back().weight / lead < std::exp2(-9));
  }

  TEST_CASE("truncation count at eps = 2^-8") {
    const CorrelationSpec corr{100.0, 100.0, 1.5, std::exp2(-8)};
    CHECK(build_basis(corr, 0.4, 1.625, std::exp2(-9)).n_kl() == 3157);
  }

  TEST_CASE("threshold one keeps the leading pair") {
    const KLBasis b = build_basis(kCorr6, 0.4, 1.625, 1.0);
    CHECK(b.passing == 1);
    CHECK(b.pairs.front().i == 1);
    CHECK(b.pairs.front().j == 1);
    CHECK_THROWS_AS(build_basis(kCorr6, 0.4, 1.625, 0.0), Error);
  }

  TEST_CASE("eigenfunctions are orthonormal") {
    const KLBasis b = build_basis(kCorr6, 0.4, 1.625, std::exp2(-9));
    for (int i = 1; i <= 5; ++i) {
      const double nrm = simpson([&](double t) { return std::pow(eigenfunction_time(b, i, t), 2); }, 0, 0.4, 20000);
      CHECK(std::abs(nrm - 1.0) <= 1e-8);
      const double snrm = simpson([&](double x) { return std::pow(eigenfunction_space(b, i, x), 2); }, 0, 1.625, 20000);
      CHECK(std::abs(snrm - 1.0) <= 1e-8);
    }
    const double cross =
        simpson([&](double t) { return eigenfunction_time(b, 1, t) * eigenfunction_time(b, 2, t); }, 0, 0.4, 20000);
    CHECK(std::abs(cross) <= 1e-8);
    const double w1 = b.time.frequencies[0];
    CHECK(eigenfunction_time(b, 1, 0.2) == doctest::Approx(1.0 / std::sqrt(0.2 + std::sin(w1 * 0.4) / (2 * w1))));
    CHECK_THROWS_AS(eigenfunction_time(b, 1, 0.5), Error);
  }

  TEST_CASE("field from zero and single-term draws") {
    const KLBasis b = build_basis(kCorr6, 0.4, 1.625, std::exp2(-9));
    const std::vector<double> xs = {0.0, 0.3, 1.1, 1.6};
    const std::vector<double> zero(b.n_kl(), 0.0);
    for (double v : sample_field(b, zero, 0.1, xs)) CHECK(v == 0.0);

    KLBasis one = b;
    one.pairs = {b.pairs.front()};
    one.passing = 1;
    const std::vector<double> xi = {1.0};
    const double expect = 1.5 * std::sqrt(b.time.eigenvalues[0] * b.space.eigenvalues[0]) *
                          eigenfunction_time(b, 1, 0.1) * eigenfunction_space(b, 1, 0.3);
    CHECK(sample_field_point(one, xi, 0.1, 0.3) == doctest::Approx(expect).epsilon(1e-14));
  }

  TEST_CASE("sampler table agrees with direct evaluation") {
    const auto b = std::make_shared<const KLBasis>(build_basis(kCorr6, 0.4, 1.625, std::exp2(-9)));
    std::vector<double> xs;
    for (int j = 0; j < 52; ++j) xs.push_back(j * 1.625 / 52);
    const FieldSampler sampler(b, xs);
    const auto r = draw_realization(b->n_kl(), XiDistribution::Gaussian, 99);
    const auto fast = sampler.evaluate(r.xi, 0.27);
    const auto slow = sample_field(*b, r.xi, 0.27, xs);
    for (std::size_t j = 0; j < xs.size(); ++j) CHECK(fast[j] == doctest::Approx(slow[j]).epsilon(1e-11));
    CHECK_THROWS_AS(sampler.evaluate(std::vector<double>(3), 0.1), Error);
  }

  TEST_CASE("draws are reproducible with unit variance") {
    const auto a = draw_realization(20001, XiDistribution::Gaussian, 1234);
    const auto b = draw_realization(20001, XiDistribution::Gaussian, 1234);
    CHECK(a.xi == b.xi);
    CHECK(sample_seed(1, 0.25, 3) == sample_seed(1, 0.25, 3));
    CHECK(sample_seed(1, 0.25, 3) != sample_seed(1, 0.25, 4));
    CHECK(sample_seed(1, 0.25, 3) != sample_seed(1, 0.125, 3));
    for (XiDistribution d : {XiDistribution::Gaussian, XiDistribution::Uniform}) {
      const auto r = draw_realization(20001, d, 77);
      double s = 0, s2 = 0;
      for (double v : r.xi) {
        s += v;
        s2 += v * v;
        if (d == XiDistribution::Uniform) {
          CHECK(v >= -std::sqrt(3.0));
          CHECK(v <= std::sqrt(3.0));
        }
      }
      const double n = static_cast<double>(r.xi.size());
      const double mean = s / n, var = s2 / n - mean * mean;
      CHECK(std::abs(mean) < 3.0 / std::sqrt(n));
      CHECK(std::abs(var - 1.0) < 0.05);
    }
    CHECK(parse_xi_distribution(to_string(XiDistribution::Uniform)) == XiDistribution::Uniform);
  }

  TEST_CASE("field is mean zero at random points") {
    const KLBasis b = build_basis(kCorr6, 0.4, 1.625, std::exp2(-9));
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> ut(0, 0.4), ux(0, 1.625);
    std::vector<std::pair<double, double>> probes;
    for (int n = 0; n < 10; ++n) probes.emplace_back(ut(rng), ux(rng));
    for (XiDistribution d : {XiDistribution::Gaussian, XiDistribution::Uniform}) {
      std::vector<double> s(10, 0.0), s2(10, 0.0);
      const int N = 10000;
      for (int k = 0; k < N; ++k) {
        const auto r = draw_realization(b.n_kl(), d, sample_seed(5, b.corr.eps, k));
        for (int n = 0; n < 10; ++n) {
          const double v = sample_field_point(b, r.xi, probes[n].first, probes[n].second);
          s[n] += v;
          s2[n] += v * v;
        }
      }
      for (int n = 0; n < 10; ++n) {
        const double mean = s[n] / N;
        const double se = std::sqrt((s2[n] / N - mean * mean) / N);
        CHECK(std::abs(mean) <= 3 * se);
      }
    }
  }

  TEST_CASE("basis export columns") {
    const KLBasis b = build_basis(kCorr6, 0.4, 1.625, 0.25);
    std::ostringstream os;
    write_basis_csv(os, b);
    const std::string text = os.str();
    CHECK(text.rfind("axis,index,branch,frequency,eigenvalue\n", 0) == 0);
    CHECK(text.find("time,1,cos,") != std::string::npos);
    CHECK(text.find("space,2,sin,") != std::string::npos);
  }
}
