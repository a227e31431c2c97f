#include "vmse/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <string>
#include <utility>

#include "vmse/error.hpp"

namespace vmse {

namespace {
// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlan::FftPlan(int n) : n_(n) {
  if (n < 1) throw Error("core_grid", "invalid_grid", "transform length must be positive");
  std::lock_guard lock(planner_mutex());
  in_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * n));
  out_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (in_ == nullptr || out_ == nullptr) {
    fftw_free(in_);
    fftw_free(out_);
    throw Error("core_grid", "allocation", "fftw_malloc failed for size " + std::to_string(n));
  }
  auto* i = reinterpret_cast<fftw_complex*>(in_);
  auto* o = reinterpret_cast<fftw_complex*>(out_);
  fwd_ = fftw_plan_dft_1d(n, i, o, FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_1d(n, i, o, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FftPlan::FftPlan(FftPlan&& other) noexcept
    : n_(other.n_),
      in_(std::exchange(other.in_, nullptr)),
      out_(std::exchange(other.out_, nullptr)),
      fwd_(std::exchange(other.fwd_, nullptr)),
      bwd_(std::exchange(other.bwd_, nullptr)) {}

FftPlan::~FftPlan() {
  std::lock_guard lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (bwd_) fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
  fftw_free(in_);
  fftw_free(out_);
}

void FftPlan::run(void* plan, std::span<const cplx> in, std::span<cplx> out) {
  if (in.size() != static_cast<std::size_t>(n_) || out.size() != static_cast<std::size_t>(n_)) {
    throw Error("core_grid", "length_mismatch", "transform length mismatch");
  }
  std::copy(in.begin(), in.end(), in_);
  fftw_execute(static_cast<fftw_plan>(plan));
  std::copy(out_, out_ + n_, out.begin());
}

void FftPlan::forward(std::span<const cplx> in, std::span<cplx> out) { run(fwd_, in, out); }
void FftPlan::backward(std::span<const cplx> in, std::span<cplx> out) { run(bwd_, in, out); }

SpectralOps::SpectralOps(const GridSpec& grid) : M_(grid.M), mu_(grid.wavenumbers), scratch_(grid.M) {
  std::lock_guard lock(planner_mutex());
  buf_in_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * M_));
  buf_out_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * M_));
  if (buf_in_ == nullptr || buf_out_ == nullptr) {
    fftw_free(buf_in_);
    fftw_free(buf_out_);
    throw Error("core_grid", "allocation", "fftw_malloc failed for size " + std::to_string(M_));
  }
  auto* in = reinterpret_cast<fftw_complex*>(buf_in_);
  auto* out = reinterpret_cast<fftw_complex*>(buf_out_);
  plan_fwd_ = fftw_plan_dft_1d(M_, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_1d(M_, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
}

SpectralOps::SpectralOps(SpectralOps&& other) noexcept
    : M_(other.M_),
      mu_(std::move(other.mu_)),
      buf_in_(std::exchange(other.buf_in_, nullptr)),
      buf_out_(std::exchange(other.buf_out_, nullptr)),
      plan_fwd_(std::exchange(other.plan_fwd_, nullptr)),
      plan_inv_(std::exchange(other.plan_inv_, nullptr)),
      scratch_(std::move(other.scratch_)) {}

SpectralOps::~SpectralOps() {
  std::lock_guard lock(planner_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_inv_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(buf_in_);
  fftw_free(buf_out_);
}

void SpectralOps::check(std::size_t n) const {
  if (n != static_cast<std::size_t>(M_)) {
    throw Error("core_grid", "length_mismatch",
                "expected " + std::to_string(M_) + " values, got " + std::to_string(n));
  }
}

void SpectralOps::forward(std::span<const cplx> in, std::span<cplx> out) {
  check(in.size());
  check(out.size());
  std::copy(in.begin(), in.end(), buf_in_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  std::copy(buf_out_, buf_out_ + M_, out.begin());
}

void SpectralOps::inverse(std::span<const cplx> in, std::span<cplx> out) {
  check(in.size());
  check(out.size());
  std::copy(in.begin(), in.end(), buf_in_);
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  const double scale = 1.0 / M_;
  for (int n = 0; n < M_; ++n) out[n] = buf_out_[n] * scale;
}

void SpectralOps::derivative(std::span<const cplx> in, std::span<cplx> out) {
  check(in.size());
  check(out.size());
  std::copy(in.begin(), in.end(), buf_in_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  const double scale = 1.0 / M_;
  for (int n = 0; n < M_; ++n) buf_in_[n] = buf_out_[n] * cplx(0.0, mu_[n] * scale);
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  std::copy(buf_out_, buf_out_ + M_, out.begin());
}

void SpectralOps::second_derivative(std::span<const cplx> in, std::span<cplx> out) {
  check(in.size());
  check(out.size());
  std::copy(in.begin(), in.end(), buf_in_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  const double scale = 1.0 / M_;
  for (int n = 0; n < M_; ++n) buf_in_[n] = buf_out_[n] * (-mu_[n] * mu_[n] * scale);
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  std::copy(buf_out_, buf_out_ + M_, out.begin());
}

void SpectralOps::variable_laplacian(std::span<const double> m, std::span<const cplx> in, std::span<cplx> out) {
  check(m.size());
  derivative(in, scratch_);
  for (int n = 0; n < M_; ++n) scratch_[n] *= m[n];
  derivative(scratch_, out);
}

void SpectralOps::apply_symbol(std::span<const cplx> symbol, std::span<const cplx> in, std::span<cplx> out) {
  check(symbol.size());
  check(in.size());
  check(out.size());
  std::copy(in.begin(), in.end(), buf_in_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  const double scale = 1.0 / M_;
  for (int n = 0; n < M_; ++n) buf_in_[n] = buf_out_[n] * symbol[n] * scale;
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  std::copy(buf_out_, buf_out_ + M_, out.begin());
}

std::vector<cplx> spectral_derivative(std::span<const cplx> values, const GridSpec& grid) {
  if (values.size() != static_cast<std::size_t>(grid.M)) {
    throw Error("core_grid", "length_mismatch",
                "expected " + std::to_string(grid.M) + " values, got " + std::to_string(values.size()));
  }
  SpectralOps ops(grid);
  std::vector<cplx> out(values.size());
  ops.derivative(values, out);
  return out;
}

}  // namespace vmse
