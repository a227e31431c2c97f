#pragma once

#include <complex>
#include <span>
#include <vector>

#include "vmse/grid.hpp"

namespace vmse {

using cplx = std::complex<double>;

/// Unnormalized complex FFT of fixed length with its own aligned buffers.
/// Not thread-safe per instance.
class FftPlan {
 public:
  explicit FftPlan(int n);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  FftPlan(FftPlan&& other) noexcept;
  FftPlan& operator=(FftPlan&&) = delete;

  int size() const noexcept { return n_; }
  /// out_l = sum_n exp(-2 pi i l n / N) in_n
  void forward(std::span<const cplx> in, std::span<cplx> out);
  /// out_l = sum_n exp(+2 pi i l n / N) in_n
  void backward(std::span<const cplx> in, std::span<cplx> out);

 private:
  void run(void* plan, std::span<const cplx> in, std::span<cplx> out);

  int n_ = 0;
  cplx* in_ = nullptr;
  cplx* out_ = nullptr;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
};

/// FFTW-backed periodic spectral operators for one grid size.
///
/// An instance owns its plans and work buffers, so it must not be shared
/// between threads; create one per worker instead. The forward transform is
/// unnormalized, the inverse divides by M. The unpaired mode -M/2 is kept and
/// differentiated with its own wavenumber.
class SpectralOps {
 public:
  explicit SpectralOps(const GridSpec& grid);
  ~SpectralOps();
  SpectralOps(const SpectralOps&) = delete;
  SpectralOps& operator=(const SpectralOps&) = delete;
  SpectralOps(SpectralOps&& other) noexcept;
  SpectralOps& operator=(SpectralOps&&) = delete;

  int size() const noexcept { return M_; }
  std::span<const double> wavenumbers() const noexcept { return mu_; }

  void forward(std::span<const cplx> in, std::span<cplx> out);
  void inverse(std::span<const cplx> in, std::span<cplx> out);

  void derivative(std::span<const cplx> in, std::span<cplx> out);
  void second_derivative(std::span<const cplx> in, std::span<cplx> out);
  /// out = D(m D in) with m real.
  void variable_laplacian(std::span<const double> m, std::span<const cplx> in, std::span<cplx> out);

  /// out = ifft(symbol .* fft(in)) with the symbol given in native layout.
  void apply_symbol(std::span<const cplx> symbol, std::span<const cplx> in, std::span<cplx> out);

 private:
  void check(std::size_t n) const;

  int M_ = 0;
  std::vector<double> mu_;
  cplx* buf_in_ = nullptr;
  cplx* buf_out_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
  std::vector<cplx> scratch_;
};

/// Stateless convenience wrapper around SpectralOps::derivative.
std::vector<cplx> spectral_derivative(std::span<const cplx> values, const GridSpec& grid);

}  // namespace vmse
