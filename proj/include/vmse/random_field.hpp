#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vmse {

/// Stationary covariance R(t, x) = D^2 exp(-|t|/a - |x|/b) of the unscaled
/// perturbation; the sampled field lives at the eps-scaled lengths a*eps, b*eps.
struct CorrelationSpec {
  double a = 100.0;
  double b = 100.0;
  double D = 1.5;
  double eps = 0.0;

  /// Power spectrum 4abD^2 / ((1 + a^2 w^2)(1 + b^2 p^2)).
  double spectrum(double omega, double p) const;
  double correlation(double dt, double dx) const;
};

enum class Branch { Cos, Sin };

/// One-dimensional eigenpairs of the kernel exp(-|s - s'|/c) on an interval of
/// half-length `halfspan`, indexed from 1: odd indices use the cos branch,
/// even indices the sin branch.
struct AxisBasis {
  double c = 0.0;
  double halfspan = 0.0;
  std::vector<long double> roots;   // full-precision frequencies
  std::vector<double> frequencies;  // roots rounded to double
  std::vector<double> eigenvalues;  // 2c / (1 + c^2 w^2), descending
  std::vector<double> norms;        // 1 / sqrt(h +- sin(2wh)/(2w))
  std::vector<Branch> branches;

  std::size_t size() const noexcept { return frequencies.size(); }
  /// Eigenfunction `index` (1-based) at coordinate s measured from the interval start.
  double eigenfunction(std::size_t index, double s) const;
};

/// Branch equation value at w for 1-based index: 1 - c w tan(w h) (cos) or c w + tan(w h) (sin).
long double branch_residual(Branch branch, long double c, long double halfspan, long double w);

/// First `count` frequencies alternating cos/sin branch, each found by bisection
/// inside its bracket between consecutive poles of tan.
std::vector<long double> solve_frequencies(double c, double halfspan, int count);

AxisBasis make_axis_basis(double c, double halfspan, int count);

struct KlPair {
  int i = 0;  // time index, 1-based
  int j = 0;  // space index, 1-based
  double weight = 0.0;  // sqrt(lambda_i sigma_j)
};

struct KLBasis {
  CorrelationSpec corr;
  double T = 0.0;
  double L = 0.0;
  double threshold = 0.0;
  AxisBasis time;
  AxisBasis space;
  /// Retained pairs by descending eigenvalue product. The leading `passing`
  /// pairs satisfy sqrt(ratio) >= threshold; the final entry is the first
  /// pair below it.
  std::vector<KlPair> pairs;
  std::size_t passing = 0;

  std::size_t n_kl() const noexcept { return pairs.size(); }
};

KLBasis build_basis(const CorrelationSpec& corr, double T, double L, double threshold);

double eigenfunction_time(const KLBasis& basis, int i, double t);
double eigenfunction_space(const KLBasis& basis, int j, double x);

enum class XiDistribution { Gaussian, Uniform };
XiDistribution parse_xi_distribution(std::string_view name);
std::string to_string(XiDistribution d);

struct FieldRealization {
  std::vector<double> xi;
  XiDistribution distribution = XiDistribution::Gaussian;
  std::uint64_t seed = 0;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t z);
/// Per-sample seed derived from the campaign seed, the bits of eps and the sample index.
std::uint64_t sample_seed(std::uint64_t master_seed, double eps, std::uint64_t index);

FieldRealization draw_realization(std::size_t n, XiDistribution distribution, std::uint64_t seed);

/// Precomputed spatial eigenfunction table for fast evaluation of m1 on a grid.
/// Immutable, shared read-only across samples.
class FieldSampler {
 public:
  FieldSampler(std::shared_ptr<const KLBasis> basis, std::span<const double> x_nodes);

  const KLBasis& basis() const noexcept { return *basis_; }
  std::size_t nodes() const noexcept { return n_nodes_; }

  /// m1(t, x_j) for every node: one coefficient pass plus one matrix-vector product.
  void evaluate(std::span<const double> xi, double t, std::span<double> out) const;
  std::vector<double> evaluate(std::span<const double> xi, double t) const;

 private:
  std::shared_ptr<const KLBasis> basis_;
  std::size_t n_nodes_ = 0;
  std::vector<int> distinct_j_;     // distinct space indices in first-appearance order
  std::vector<int> pair_column_;    // column of each pair in the table
  std::vector<double> table_;       // n_nodes x distinct_j, row-major
};

/// Direct (slow) evaluation of m1 at one point.
double sample_field_point(const KLBasis& basis, std::span<const double> xi, double t, double x);
std::vector<double> sample_field(const KLBasis& basis, std::span<const double> xi, double t,
                                 std::span<const double> x_nodes);

/// Covariance of the truncated expansion between (t, x) and (t2, x2).
double truncated_covariance(const KLBasis& basis, double t, double x, double t2, double x2);

/// CSV with columns axis,index,branch,frequency,eigenvalue.
void write_basis_csv(std::ostream& os, const KLBasis& basis);

}  // namespace vmse
