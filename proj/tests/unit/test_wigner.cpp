#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "vmse/error.hpp"
#include "vmse/schrodinger.hpp"
#include "vmse/wigner.hpp"

using namespace vmse;
using std::numbers::pi;

namespace {

MassModel example1() { return MassModel(MassKind::OscillatoryProduct, PotentialKind::Zero, {}, 0.5, 1.25, 0.5); }

double rel_l1(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num += std::abs(a[j] - b[j]);
    den += std::abs(b[j]);
  }
  return num / den;
}

}  // namespace

TEST_SUITE("wigner") {
  TEST_CASE("plane wave concentrates in the p0 bin") {
    const double eps = 0.0625;
    const GridSpec g = make_grid(1.25, 128, 0.5, 0.01);
    const double p0 = eps * g.wavenumbers[g.native_index(3)];
    WaveField w{std::vector<cplx>(g.M), 0.0, eps};
    for (int j = 0; j < g.M; ++j) w.values[j] = std::polar(1.0, p0 * g.x_nodes[j] / eps);
    const PhaseDensity W = discrete_wigner(w, g);
    std::size_t bin = 0;
    for (std::size_t l = 0; l < W.nk(); ++l) {
      if (std::abs(W.k[l] - p0) < std::abs(W.k[bin] - p0)) bin = l;
    }
    double total = 0, in_bin = 0;
    for (std::size_t l = 0; l < W.nk(); ++l) {
      total += std::abs(W.at(10, l));
      if (l == bin) in_bin += W.at(10, l);
    }
    CHECK(in_bin / total >= 0.99);
  }

  TEST_CASE("k marginal and first moment on the Gaussian packet") {
    const double eps = 0.015625;
    const GridSpec g = make_grid(1.25, 640, 0.5, 0.01);
    const MassModel m = example1();
    const WaveField w = initial_wave({128, 0.25, 1.0}, eps, g);
    const PhaseDensity W = discrete_wigner(w, g);
    CHECK(W.imag_residue <= 1e-10);
    std::vector<double> rho(g.M), J(g.M), mass(g.M);
    for (int j = 0; j < g.M; ++j) mass[j] = m.mass(0, g.x_nodes[j]);
    SpectralOps ops(g);
    observables(ops, w.values, mass, eps, rho, J);
    CHECK(rel_l1(wigner_density(W), rho) <= 1e-6);
    CHECK(rel_l1(wigner_current(W, m), J) <= 1e-3);
  }

  TEST_CASE("Gaussian packet peaks at (x0, p0)") {
    const double eps = 0.015625;
    const GridSpec g = make_grid(1.25, 640, 0.5, 0.01);
    const PhaseDensity W = discrete_wigner(initial_wave({128, 0.25, 1.0}, eps, g), g);
    std::size_t bx = 0, bk = 0;
    for (std::size_t i = 0; i < W.nx(); ++i) {
      for (std::size_t l = 0; l < W.nk(); ++l) {
        if (W.at(i, l) > W.at(bx, bk)) {
          bx = i;
          bk = l;
        }
      }
    }
    CHECK(std::abs(W.x[bx] - 0.25) <= g.dx);
    CHECK(std::abs(W.k[bk] - 1.0) <= W.dk);
  }

  TEST_CASE("global phase leaves the transform unchanged") {
    const GridSpec g = make_grid(1.25, 256, 0.5, 0.01);
    const WaveField w = initial_wave({128, 0.25, 1.0}, 0.03125, g);
    const PhaseDensity W = discrete_wigner(w, g);
    for (cplx phase : {cplx(0, 1), cplx(-1, 0)}) {
      WaveField r = w;
      for (auto& v : r.values) v *= phase;
      CHECK(discrete_wigner(r, g).values == W.values);
    }
    WaveField r = w;
    for (auto& v : r.values) v *= std::polar(1.0, 0.7);
    const PhaseDensity Wr = discrete_wigner(r, g);
    double diff = 0, scale = 0;
    for (std::size_t n = 0; n < W.values.size(); ++n) {
      diff = std::max(diff, std::abs(Wr.values[n] - W.values[n]));
      scale = std::max(scale, std::abs(W.values[n]));
    }
    CHECK(diff <= 1e-13 * scale);
  }

  TEST_CASE("constant mass operators on a manufactured density") {
    const double L = 20, m0 = 1.3, eps = 0.5;
    const GridSpec g = make_grid(L, 256, 1.0, 0.1);
    MassParameters p;
    p.constant_value = m0;
    const MassModel m(MassKind::Constant, PotentialKind::Zero, p, 0.5, L, 1.0);
    PhaseDensity W = wigner_layout(g, eps);
    for (std::size_t i = 0; i < W.nx(); ++i) {
      for (std::size_t l = 0; l < W.nk(); ++l) {
        const double x = W.x[i] - 10, k = W.k[l];
        W.at(i, l) = std::exp(-x * x - k * k);
      }
    }
    const PhaseDensity q1 = apply_q1(W, m, g);
    const PhaseDensity q2 = apply_q2(W, m, g);
    double q1max = 0, q2err = 0;
    for (std::size_t i = 0; i < W.nx(); ++i) {
      for (std::size_t l = 0; l < W.nk(); ++l) {
        const double x = W.x[i] - 10, k = W.k[l];
        const double exact = m0 * k * (-2 * x) * std::exp(-x * x - k * k);
        q1max = std::max(q1max, std::abs(q1.at(i, l)));
        q2err = std::max(q2err, std::abs(q2.at(i, l) - exact));
      }
    }
    CHECK(q1max <= 1e-10);
    CHECK(q2err <= 1e-8);
  }

  TEST_CASE("residual refuses unequal spacing and potentials") {
    const GridSpec g = make_grid(1.25, 64, 0.5, 0.01);
    const WaveField a = initial_wave({128, 0.25, 1.0}, 0.0625, g);
    WaveField b = a, c = a;
    b.t = 0.01;
    c.t = 0.03;
    const std::vector<WaveField> snaps = {a, b, c};
    CHECK_THROWS_AS(wigner_residual(snaps, example1(), g), Error);
    const MassModel diode(MassKind::DiodeBumps, PotentialKind::DiodeBumps, {}, 0.5, 2.0, 0.5);
    c.t = 0.02;
    const std::vector<WaveField> even = {a, b, c};
    CHECK_THROWS_AS(wigner_residual(even, diode, g), Error);
  }

  TEST_CASE("windows and export") {
    const GridSpec g = make_grid(1.25, 64, 0.5, 0.01);
    const WaveField w = initial_wave({128, 0.25, 1.0}, 0.0625, g);
    CHECK(discrete_wigner(w, g, 32).nk() == 32);
    CHECK_THROWS_AS(discrete_wigner(w, g, 31), Error);
    CHECK_THROWS_AS(discrete_wigner(w, g, 128), Error);
    std::ostringstream os;
    write_phase_csv(os, discrete_wigner(w, g, 8), "W0");
    CHECK(os.str().rfind("x,k,W0\n", 0) == 0);
  }
}
