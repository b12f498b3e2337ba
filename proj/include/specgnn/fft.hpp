// Thin wrappers around Eigen's FFT for the project-wide transform convention:
// unnormalized forward, 1/n inverse.
#pragma once

#include <complex>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace specgnn {

using Complex = std::complex<double>;

// y[f] = sum_s x[s] e^{-2*pi*i*f*s/n}
inline Eigen::VectorXcd fft_forward(const Eigen::VectorXcd& x) {
  static thread_local Eigen::FFT<double> fft;
  Eigen::VectorXcd y(x.size());
  fft.fwd(y.data(), x.data(), x.size());
  return y;
}

// x[s] = (1/n) sum_f y[f] e^{+2*pi*i*f*s/n}
inline Eigen::VectorXcd fft_inverse(const Eigen::VectorXcd& y) {
  static thread_local Eigen::FFT<double> fft;
  Eigen::VectorXcd x(y.size());
  fft.inv(x.data(), y.data(), y.size());
  return x;
}

}  // namespace specgnn
