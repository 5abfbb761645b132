#pragma once

// Thin RAII wrapper over FFTW real transforms.
//
// Plans are created once per size under a global mutex (FFTW's planner is not
// thread-safe) and live for the process. Execution uses the new-array
// interface, so one plan serves any number of RealFft instances concurrently;
// each instance owns its scratch and must not be shared between threads.

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "raes/error.hpp"

namespace raes {

namespace fft_detail {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

inline PlanPair plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> r(static_cast<std::size_t>(n));
  std::vector<fftw_complex> c(static_cast<std::size_t>(n / 2 + 1));
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(n, r.data(), c.data(), flags);
  p.inverse = fftw_plan_dft_c2r_1d(n, c.data(), r.data(), flags);
  if (!p.forward || !p.inverse) throw Error("FFTW planning failed");
  cache.emplace(n, p);
  return p;
}

}  // namespace fft_detail

class RealFft {
 public:
  explicit RealFft(int size) : n_(checked(size)), plans_(fft_detail::plans_for(size)) {
    rbuf_.resize(static_cast<std::size_t>(n_));
    cbuf_.resize(static_cast<std::size_t>(n_ / 2 + 1));
  }

  int size() const { return n_; }
  int num_bins() const { return n_ / 2 + 1; }

  // Unnormalized forward transform; out holds bins 0..n/2.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) {
    std::copy(in.begin(), in.end(), rbuf_.begin());
    fftw_execute_dft_r2c(plans_.forward, rbuf_.data(),
                         reinterpret_cast<fftw_complex*>(cbuf_.data()));
    std::copy(cbuf_.begin(), cbuf_.end(), out.begin());
  }

  // Inverse transform scaled by 1/n, so inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    std::copy(in.begin(), in.end(), cbuf_.begin());
    fftw_execute_dft_c2r(plans_.inverse, reinterpret_cast<fftw_complex*>(cbuf_.data()),
                         rbuf_.data());
    const double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = rbuf_[static_cast<std::size_t>(i)] * scale;
  }

 private:
  static int checked(int size) {
    if (size <= 0 || size % 2 != 0) throw InvalidArgument("FFT size must be positive and even");
    return size;
  }

  int n_;
  fft_detail::PlanPair plans_;
  std::vector<double> rbuf_;
  std::vector<std::complex<double>> cbuf_;
};

}  // namespace raes
