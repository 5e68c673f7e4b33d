#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <vector>

#include "triphoton/error.hpp"

namespace triphoton {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline std::size_t fast_fft_size(std::size_t n) {
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

/// In-place complex FFT of fixed length (owning its buffer and plans).
class FftBuffer {
 public:
  explicit FftBuffer(std::size_t n) : n_(n) {
    data_ = fftw_alloc_complex(n);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fwd_ = fftw_plan_dft_1d(int(n), data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(int(n), data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftBuffer() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(data_);
  }
  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;

  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(data_); }
  std::size_t size() const { return n_; }
  void forward() { fftw_execute(fwd_); }
  void backward() { fftw_execute(bwd_); }  // unnormalized

 private:
  std::size_t n_;
  fftw_complex* data_;
  fftw_plan fwd_, bwd_;
};

}  // namespace detail

/// Evaluates X_k = sum_n y_n exp(+i x_n t_k) for uniform x_n = x0 + n dx
/// (n < N) and t_k = t0 + k dt (k < M) with Bluestein's algorithm.
class ChirpZ {
 public:
  ChirpZ(std::size_t N, double x0, double dx, std::size_t M, double t0, double dt)
      : N_(N), M_(M), fft_(detail::fast_fft_size(N + M - 1)) {
    if (N == 0 || M == 0) throw InvalidParameter("chirp-z needs non-empty input and output");
    using cd = std::complex<double>;
    const double alpha = dx * dt;
    const std::size_t L = fft_.size();
    pre_.resize(N);
    for (std::size_t n = 0; n < N; ++n) {
      const double nn = double(n);
      pre_[n] = std::polar(1.0, nn * dx * t0 + 0.5 * alpha * nn * nn);
    }
    post_.resize(M);
    for (std::size_t k = 0; k < M; ++k) {
      const double kk = double(k), t = t0 + kk * dt;
      post_[k] = std::polar(1.0, x0 * t + 0.5 * alpha * kk * kk) / double(L);
    }
    // h_m = exp(-i alpha m^2 / 2) for m in (-(N-1), M-1), wrapped
    cd* h = fft_.data();
    for (std::size_t i = 0; i < L; ++i) h[i] = 0;
    for (std::size_t m = 0; m < M; ++m) h[m] = std::polar(1.0, -0.5 * alpha * double(m) * double(m));
    for (std::size_t m = 1; m < N; ++m) h[L - m] = std::polar(1.0, -0.5 * alpha * double(m) * double(m));
    fft_.forward();
    kernel_.assign(h, h + L);
  }

  std::size_t input_size() const { return N_; }
  std::size_t output_size() const { return M_; }

  /// in: N samples with stride in_stride; out: M samples with stride out_stride.
  void apply(const std::complex<double>* in, std::size_t in_stride, std::complex<double>* out,
             std::size_t out_stride) {
    auto* b = fft_.data();
    const std::size_t L = fft_.size();
    for (std::size_t n = 0; n < N_; ++n) b[n] = in[n * in_stride] * pre_[n];
    for (std::size_t n = N_; n < L; ++n) b[n] = 0;
    fft_.forward();
    for (std::size_t i = 0; i < L; ++i) b[i] *= kernel_[i];
    fft_.backward();
    for (std::size_t k = 0; k < M_; ++k) out[k * out_stride] = b[k] * post_[k];
  }

 private:
  std::size_t N_, M_;
  detail::FftBuffer fft_;
  std::vector<std::complex<double>> pre_, post_, kernel_;
};

/// |DFT|^2 of a real sequence zero-padded to n_fft; bins 0..n_fft/2.
inline std::vector<double> power_spectrum(const std::vector<double>& x, std::size_t n_fft) {
  if (n_fft < x.size()) throw InvalidParameter("FFT length shorter than the input");
  detail::FftBuffer f(n_fft);
  auto* b = f.data();
  for (std::size_t i = 0; i < n_fft; ++i) b[i] = i < x.size() ? x[i] : 0.0;
  f.forward();
  std::vector<double> p(n_fft / 2 + 1);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(b[i]);
  return p;
}

}  // namespace triphoton
