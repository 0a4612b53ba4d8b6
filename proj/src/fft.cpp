#include "phm/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "phm/error.hpp"

namespace phm {
namespace {
// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Plans {
  double *time = nullptr;
  fftw_complex *freq = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  explicit Plans(std::size_t n) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    time = fftw_alloc_real(n);
    freq = fftw_alloc_complex(n / 2 + 1);
    const int len = static_cast<int>(n);
    fwd = fftw_plan_dft_r2c_1d(len, time, freq, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(len, freq, time, FFTW_ESTIMATE);
  }
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(time);
    fftw_free(freq);
  }
};

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2) throw Error("fft size must be >= 2");
  plans_ = std::make_unique<Plans>(n);
}
RealFft::~RealFft() = default;
RealFft::RealFft(RealFft &&) noexcept = default;
RealFft &RealFft::operator=(RealFft &&) noexcept = default;

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  if (in.size() > n_ || out.size() != bins()) throw Error("fft buffer size mismatch");
  std::fill(plans_->time, plans_->time + n_, 0.0);
  std::copy(in.begin(), in.end(), plans_->time);
  fftw_execute(plans_->fwd);
  for (std::size_t k = 0; k < bins(); ++k) {
    out[k] = {plans_->freq[k][0], plans_->freq[k][1]};
  }
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  if (in.size() != bins() || out.size() != n_) throw Error("fft buffer size mismatch");
  for (std::size_t k = 0; k < bins(); ++k) {
    plans_->freq[k][0] = in[k].real();
    plans_->freq[k][1] = in[k].imag();
  }
  // c2r ignores the imaginary part of DC and Nyquist, which is what we want.
  fftw_execute(plans_->inv);
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = plans_->time[i] * scale;
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  std::size_t n = 2;
  while (n < out_len) n <<= 1;
  RealFft fft(n);
  std::vector<std::complex<double>> fa(fft.bins()), fb(fft.bins());
  fft.forward(a, fa);
  fft.forward(b, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  std::vector<double> full(n);
  fft.inverse(fa, full);
  full.resize(out_len);
  return full;
}

}  // namespace phm
