#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace phm {

/// Real-input FFT of fixed length backed by FFTW. Each instance owns its
/// plans and scratch buffers; use one instance per thread.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft &) = delete;
  RealFft &operator=(const RealFft &) = delete;
  RealFft(RealFft &&) noexcept;
  RealFft &operator=(RealFft &&) noexcept;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // in.size() <= n; missing samples are zero.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  // Normalized inverse: inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

/// Full linear convolution (length a.size() + b.size() - 1) via FFT.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

}  // namespace phm
