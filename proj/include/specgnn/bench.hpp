// Spatial-vs-spectral timing for the circulant convolution identity. The
// spatial route streams the circulant rows instead of materializing the n x n
// matrix (same O(n^2 d) arithmetic, O(n d) memory); the spectral route is
// dft -> per-frequency multiply -> idft. Equivalence is asserted before
// anything is timed.
#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "specgnn/errors.hpp"
#include "specgnn/rng.hpp"
#include "specgnn/spectral.hpp"

namespace specgnn {

// (L X) W with L the circulant matrix whose first row is kernel_row:
// L[i][j] = kernel_row[(j - i) mod n].
inline Eigen::MatrixXd circulant_spatial_route(
    const Eigen::VectorXd& kernel_row, const Eigen::MatrixXd& x,
    const Eigen::MatrixXd& w) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd lx(n, d);
  for (Eigen::Index b = 0; b < d; ++b) {
    const double* col = x.col(b).data();
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      const double* c = kernel_row.data();
      // split [(j - i) mod n] into the two contiguous runs
      for (Eigen::Index j = i; j < n; ++j) acc += c[j - i] * col[j];
      for (Eigen::Index j = 0; j < i; ++j) acc += c[j - i + n] * col[j];
      lx(i, b) = acc;
    }
  }
  return lx * w;
}

// Same product through the frequency domain: O(n log n d + n d^2).
inline Eigen::MatrixXd circulant_spectral_route(
    const Eigen::VectorXd& kernel_row, const Eigen::MatrixXd& x,
    const Eigen::MatrixXd& w) {
  const Eigen::VectorXcd lambda = kernel_spectrum(kernel_row);
  FrequencyFeatures y = dft_nodes(x);
  const Eigen::MatrixXcd wc = w.cast<Complex>();
  for (Eigen::Index f = 0; f < y.nodes(); ++f) {
    y.data.row(f) = lambda(f) * (y.data.row(f) * wc);
  }
  return idft_nodes(y);
}

struct BenchRow {
  int n = 0;
  double residual = 0.0;  // max-abs difference between the two routes
  double spatial_seconds = 0.0;
  double spectral_seconds = 0.0;
};

namespace detail {
template <typename F>
double best_of(int repeats, F&& body) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    body();
    const auto stop = std::chrono::steady_clock::now();
    best = std::min(best,
                    std::chrono::duration<double>(stop - start).count());
  }
  return best;
}
}  // namespace detail

inline std::vector<BenchRow> run_bench(const std::vector<int>& sizes, int d,
                                       int repeats, std::uint64_t seed) {
  if (d < 1 || repeats < 1) throw InvalidConfig("bench: bad dim/repeats");
  std::vector<BenchRow> rows;
  Rng rng(seed);
  volatile double sink = 0.0;  // keep the timed results live
  for (const int n : sizes) {
    if (n < 2) throw InvalidConfig("bench: sizes must be >= 2");
    // palindromic row = symmetric circulant, the shape graph filters take;
    // the diagonalization multiplier is then the row's own spectrum
    Eigen::VectorXd kernel_row(n);
    for (int i = 0; i < n; ++i) kernel_row(i) = rng.normal() / std::sqrt(n);
    for (int s = 1; s < n; ++s) {
      const double mean = 0.5 * (kernel_row(s) + kernel_row((n - s) % n));
      kernel_row(s) = kernel_row((n - s) % n) = mean;
    }
    Eigen::MatrixXd x(n, d), w(d, d);
    for (int k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
    for (int k = 0; k < w.size(); ++k) w.data()[k] = rng.normal();

    BenchRow row;
    row.n = n;
    const Eigen::MatrixXd spatial =
        circulant_spatial_route(kernel_row, x, w);
    const Eigen::MatrixXd spectral =
        circulant_spectral_route(kernel_row, x, w);
    row.residual = (spatial - spectral).cwiseAbs().maxCoeff();
    if (row.residual > 1e-8) {
      throw NumericalError("bench: route mismatch at n=" + std::to_string(n) +
                           " (residual " + std::to_string(row.residual) +
                           "); refusing to time non-equivalent code");
    }
    row.spatial_seconds = detail::best_of(repeats, [&] {
      sink += circulant_spatial_route(kernel_row, x, w)(0, 0);
    });
    row.spectral_seconds = detail::best_of(repeats, [&] {
      sink += circulant_spectral_route(kernel_row, x, w)(0, 0);
    });
    rows.push_back(row);
  }
  (void)sink;
  return rows;
}

// Least-squares slope of log(t) against log(n).
inline double loglog_slope(const std::vector<std::pair<double, double>>& pts) {
  const double n = static_cast<double>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double spatial_slope(const std::vector<BenchRow>& rows) {
  std::vector<std::pair<double, double>> pts;
  for (const BenchRow& r : rows) pts.push_back({double(r.n), r.spatial_seconds});
  return loglog_slope(pts);
}

inline double spectral_slope(const std::vector<BenchRow>& rows) {
  std::vector<std::pair<double, double>> pts;
  for (const BenchRow& r : rows) {
    pts.push_back({double(r.n), r.spectral_seconds});
  }
  return loglog_slope(pts);
}

}  // namespace specgnn
