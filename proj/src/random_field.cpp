#include "vmse/random_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "vmse/csv.hpp"
#include "vmse/error.hpp"

namespace vmse {

double CorrelationSpec::spectrum(double omega, double p) const {
  return 4.0 * a * b * D * D / ((1.0 + a * a * omega * omega) * (1.0 + b * b * p * p));
}

double CorrelationSpec::correlation(double dt, double dx) const {
  return D * D * std::exp(-std::abs(dt) / a - std::abs(dx) / b);
}

long double branch_residual(Branch branch, long double c, long double halfspan, long double w) {
  const long double t = std::tan(w * halfspan);
  return branch == Branch::Cos ? 1.0L - c * w * t : c * w + t;
}

namespace {

Branch branch_of(int index) { return index % 2 == 1 ? Branch::Cos : Branch::Sin; }

long double bisect_root(Branch branch, long double c, long double h, long double lo, long double hi) {
  long double flo = branch_residual(branch, c, h, lo);
  const long double fhi = branch_residual(branch, c, h, hi);
  if (!(flo * fhi < 0.0L)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "cannot bracket frequency root in (" << static_cast<double>(lo) << ", " << static_cast<double>(hi)
        << "), f = " << static_cast<double>(flo) << ", " << static_cast<double>(fhi);
    throw Error("random_field", "bracket_failure", msg.str());
  }
  for (int iter = 0; iter < 400; ++iter) {
    const long double mid = 0.5L * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const long double fm = branch_residual(branch, c, h, mid);
    if (fm == 0.0L) return mid;
    if ((fm < 0.0L) == (flo < 0.0L)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5L * (lo + hi);
}

}  // namespace

std::vector<long double> solve_frequencies(double c, double halfspan, int count) {
  if (!(c > 0.0) || !(halfspan > 0.0) || count < 1) {
    throw Error("random_field", "invalid_parameter", "solve_frequencies needs c > 0, halfspan > 0, count >= 1");
  }
  const long double pi = std::numbers::pi_v<long double>;
  const long double h = halfspan;
  const long double cc = c;
  // Keep clear of the tan poles by a few ulps relative to the bracket ends.
  constexpr long double rel = 1e-16L;
  std::vector<long double> roots;
  roots.reserve(count);
  for (int idx = 1; idx <= count; ++idx) {
    const int n = (idx - 1) / 2;
    long double lo, hi;
    if (branch_of(idx) == Branch::Cos) {
      lo = n * pi / h;
      hi = (n + 0.5L) * pi / h;
    } else {
      lo = (n + 0.5L) * pi / h;
      hi = (n + 1) * pi / h;
    }
    if (branch_of(idx) == Branch::Cos) {
      hi *= 1.0L - rel;
    } else {
      lo *= 1.0L + rel;
      hi *= 1.0L - rel;
    }
    roots.push_back(bisect_root(branch_of(idx), cc, h, lo, hi));
  }
  return roots;
}

AxisBasis make_axis_basis(double c, double halfspan, int count) {
  AxisBasis ax;
  ax.c = c;
  ax.halfspan = halfspan;
  ax.roots = solve_frequencies(c, halfspan, count);
  for (int idx = 1; idx <= count; ++idx) {
    const long double w = ax.roots[idx - 1];
    const Branch br = branch_of(idx);
    const long double wobble = std::sin(2.0L * w * halfspan) / (2.0L * w);
    const long double denom = br == Branch::Cos ? halfspan + wobble : halfspan - wobble;
    const double wd = static_cast<double>(w);
    ax.frequencies.push_back(wd);
    ax.eigenvalues.push_back(2.0 * c / (1.0 + c * c * wd * wd));
    ax.norms.push_back(static_cast<double>(1.0L / std::sqrt(denom)));
    ax.branches.push_back(br);
  }
  return ax;
}

double AxisBasis::eigenfunction(std::size_t index, double s) const {
  if (index < 1 || index > size()) {
    throw Error("random_field", "index_out_of_range", "eigenfunction index " + std::to_string(index) + " outside 1.." +
                                                          std::to_string(size()));
  }
  const double arg = frequencies[index - 1] * (s - halfspan);
  return norms[index - 1] * (branches[index - 1] == Branch::Cos ? std::cos(arg) : std::sin(arg));
}

namespace {

// Eigenpairs up to and including the first index whose eigenvalue ratio to the
// leading one drops below `ratio_floor`.
AxisBasis axis_until(double c, double halfspan, double ratio_floor) {
  const double w1 = static_cast<double>(solve_frequencies(c, halfspan, 1).front());
  const double target = std::sqrt(std::max(0.0, (1.0 + c * c * w1 * w1) / ratio_floor - 1.0)) / c;
  int count = static_cast<int>(2.0 * target * halfspan / std::numbers::pi) + 4;
  for (;;) {
    AxisBasis ax = make_axis_basis(c, halfspan, count);
    const double lead = ax.eigenvalues.front();
    for (std::size_t n = 0; n < ax.size(); ++n) {
      if (ax.eigenvalues[n] / lead < ratio_floor) {
        const std::size_t keep = n + 1;
        ax.roots.resize(keep);
        ax.frequencies.resize(keep);
        ax.eigenvalues.resize(keep);
        ax.norms.resize(keep);
        ax.branches.resize(keep);
        return ax;
      }
    }
    count *= 2;
  }
}

bool pair_before(const KlPair& x, const KlPair& y) {
  if (x.weight != y.weight) return x.weight > y.weight;
  if (x.i != y.i) return x.i < y.i;
  return x.j < y.j;
}

}  // namespace

KLBasis build_basis(const CorrelationSpec& corr, double T, double L, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error("random_field", "invalid_parameter", "threshold must lie in (0, 1]");
  }
  if (!(corr.eps > 0.0 && corr.eps < 1.0) || !(corr.a > 0.0) || !(corr.b > 0.0) || !(corr.D >= 0.0)) {
    throw Error("random_field", "invalid_parameter", "correlation needs a, b > 0, D >= 0 and eps in (0, 1)");
  }
  KLBasis basis;
  basis.corr = corr;
  basis.T = T;
  basis.L = L;
  basis.threshold = threshold;
  const double floor = threshold * threshold;
  basis.time = axis_until(corr.a * corr.eps, 0.5 * T, floor);
  basis.space = axis_until(corr.b * corr.eps, 0.5 * L, floor);

  const double lead = basis.time.eigenvalues.front() * basis.space.eigenvalues.front();
  KlPair first_failing{0, 0, -1.0};
  for (std::size_t i = 0; i < basis.time.size(); ++i) {
    for (std::size_t j = 0; j < basis.space.size(); ++j) {
      const double product = basis.time.eigenvalues[i] * basis.space.eigenvalues[j];
      const KlPair pair{static_cast<int>(i + 1), static_cast<int>(j + 1), std::sqrt(product)};
      if (std::sqrt(product / lead) >= threshold) {
        basis.pairs.push_back(pair);
      } else if (first_failing.weight < 0.0 || pair_before(pair, first_failing)) {
        first_failing = pair;
      }
    }
  }
  std::sort(basis.pairs.begin(), basis.pairs.end(), pair_before);
  basis.passing = basis.pairs.size();
  if (first_failing.weight >= 0.0) basis.pairs.push_back(first_failing);
  return basis;
}

double eigenfunction_time(const KLBasis& basis, int i, double t) {
  if (t < 0.0 || t > basis.T) throw Error("random_field", "out_of_domain", "time outside [0, T]");
  return basis.time.eigenfunction(static_cast<std::size_t>(i), t);
}

double eigenfunction_space(const KLBasis& basis, int j, double x) {
  if (x < 0.0 || x > basis.L) throw Error("random_field", "out_of_domain", "position outside [0, L]");
  return basis.space.eigenfunction(static_cast<std::size_t>(j), x);
}

XiDistribution parse_xi_distribution(std::string_view name) {
  if (name == "Gaussian") return XiDistribution::Gaussian;
  if (name == "Uniform") return XiDistribution::Uniform;
  throw Error("random_field", "invalid_kind", "unknown xi distribution '" + std::string(name) + "'");
}

std::string to_string(XiDistribution d) { return d == XiDistribution::Gaussian ? "Gaussian" : "Uniform"; }

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t sample_seed(std::uint64_t master_seed, double eps, std::uint64_t index) {
  std::uint64_t h = mix64(master_seed);
  h = mix64(h ^ std::bit_cast<std::uint64_t>(eps));
  return mix64(h ^ index);
}

FieldRealization draw_realization(std::size_t n, XiDistribution distribution, std::uint64_t seed) {
  FieldRealization r;
  r.distribution = distribution;
  r.seed = seed;
  r.xi.resize(n);
  std::mt19937_64 rng(seed);
  // Explicit 53-bit uniforms and Box-Muller keep draws identical across standard libraries.
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  if (distribution == XiDistribution::Uniform) {
    const double root3 = std::sqrt(3.0);
    for (auto& v : r.xi) v = root3 * (2.0 * uniform() - 1.0);
    return r;
  }
  for (std::size_t k = 0; k < n; k += 2) {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    r.xi[k] = radius * std::cos(angle);
    if (k + 1 < n) r.xi[k + 1] = radius * std::sin(angle);
  }
  return r;
}

FieldSampler::FieldSampler(std::shared_ptr<const KLBasis> basis, std::span<const double> x_nodes)
    : basis_(std::move(basis)), n_nodes_(x_nodes.size()) {
  std::vector<int> column_of(basis_->space.size() + 1, -1);
  pair_column_.reserve(basis_->pairs.size());
  for (const auto& p : basis_->pairs) {
    if (column_of[p.j] < 0) {
      column_of[p.j] = static_cast<int>(distinct_j_.size());
      distinct_j_.push_back(p.j);
    }
    pair_column_.push_back(column_of[p.j]);
  }
  const std::size_t cols = distinct_j_.size();
  table_.resize(n_nodes_ * cols);
  for (std::size_t n = 0; n < n_nodes_; ++n) {
    for (std::size_t c = 0; c < cols; ++c) {
      table_[n * cols + c] = basis_->space.eigenfunction(static_cast<std::size_t>(distinct_j_[c]), x_nodes[n]);
    }
  }
}

void FieldSampler::evaluate(std::span<const double> xi, double t, std::span<double> out) const {
  const KLBasis& b = *basis_;
  if (xi.size() != b.pairs.size()) {
    throw Error("random_field", "length_mismatch",
                "realization has " + std::to_string(xi.size()) + " draws, basis has " + std::to_string(b.pairs.size()));
  }
  if (out.size() != n_nodes_) throw Error("random_field", "length_mismatch", "output length differs from node count");
  std::vector<double> psi(b.time.size());
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = b.time.eigenfunction(i + 1, t);
  const std::size_t cols = distinct_j_.size();
  std::vector<double> coef(cols, 0.0);
  for (std::size_t p = 0; p < b.pairs.size(); ++p) {
    coef[pair_column_[p]] += b.pairs[p].weight * psi[b.pairs[p].i - 1] * xi[p];
  }
  const double D = b.corr.D;
  for (std::size_t n = 0; n < n_nodes_; ++n) {
    const double* row = &table_[n * cols];
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * coef[c];
    out[n] = D * acc;
  }
}

std::vector<double> FieldSampler::evaluate(std::span<const double> xi, double t) const {
  std::vector<double> out(n_nodes_);
  evaluate(xi, t, out);
  return out;
}

double sample_field_point(const KLBasis& basis, std::span<const double> xi, double t, double x) {
  if (xi.size() != basis.pairs.size()) throw Error("random_field", "length_mismatch", "realization length differs from N_KL");
  double acc = 0.0;
  for (std::size_t p = 0; p < basis.pairs.size(); ++p) {
    const auto& pr = basis.pairs[p];
    acc += pr.weight * basis.time.eigenfunction(pr.i, t) * basis.space.eigenfunction(pr.j, x) * xi[p];
  }
  return basis.corr.D * acc;
}

std::vector<double> sample_field(const KLBasis& basis, std::span<const double> xi, double t,
                                 std::span<const double> x_nodes) {
  std::vector<double> out(x_nodes.size());
  for (std::size_t n = 0; n < x_nodes.size(); ++n) out[n] = sample_field_point(basis, xi, t, x_nodes[n]);
  return out;
}

double truncated_covariance(const KLBasis& basis, double t, double x, double t2, double x2) {
  double acc = 0.0;
  for (const auto& pr : basis.pairs) {
    acc += pr.weight * pr.weight * basis.time.eigenfunction(pr.i, t) * basis.time.eigenfunction(pr.i, t2) *
           basis.space.eigenfunction(pr.j, x) * basis.space.eigenfunction(pr.j, x2);
  }
  return basis.corr.D * basis.corr.D * acc;
}

void write_basis_csv(std::ostream& os, const KLBasis& basis) {
  CsvWriter csv(os, {"axis", "index", "branch", "frequency", "eigenvalue"});
  auto emit = [&](std::string_view axis, const AxisBasis& ax) {
    for (std::size_t n = 0; n < ax.size(); ++n) {
      const std::string index = std::to_string(n + 1);
      csv.row({axis, index, ax.branches[n] == Branch::Cos ? "cos" : "sin"}, {ax.frequencies[n], ax.eigenvalues[n]});
    }
  };
  emit("time", basis.time);
  emit("space", basis.space);
}

}  // namespace vmse
