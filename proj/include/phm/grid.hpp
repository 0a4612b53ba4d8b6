#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "phm/error.hpp"

namespace phm {

/// Dense frames x bins grid stored row-major (one row per STFT frame).
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t frames, std::size_t bins, T fill = T{})
      : frames_(frames), bins_(bins), data_(frames * bins, fill) {}

  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T &operator()(std::size_t t, std::size_t f) { return data_[t * bins_ + f]; }
  const T &operator()(std::size_t t, std::size_t f) const {
    return data_[t * bins_ + f];
  }
  T &operator[](std::size_t i) { return data_[i]; }
  const T &operator[](std::size_t i) const { return data_[i]; }

  std::span<T> row(std::size_t t) { return {data_.data() + t * bins_, bins_}; }
  std::span<const T> row(std::size_t t) const {
    return {data_.data() + t * bins_, bins_};
  }

  std::vector<T> &values() { return data_; }
  const std::vector<T> &values() const { return data_; }

  template <typename U>
  bool same_shape(const Grid<U> &other) const {
    return frames_ == other.frames() && bins_ == other.bins();
  }

 private:
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::vector<T> data_;
};

using RealGrid = Grid<double>;
using SignGrid = Grid<int>;
using ComplexSpectrogram = Grid<std::complex<double>>;

template <typename A, typename B>
void require_same_shape(const Grid<A> &a, const Grid<B> &b, const char *what) {
  if (!a.same_shape(b)) {
    throw Error(std::string("shape mismatch: ") + what);
  }
}

}  // namespace phm
