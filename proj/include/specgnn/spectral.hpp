// Frequency-domain graph convolution: node-axis DFT, Fourier graph operators
// built from filter kernels, and the dual-band multi-layer network.
//
// Transform convention (fixed project-wide): unnormalized forward DFT along
// the node axis, 1/n-scaled inverse.
#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specgnn/errors.hpp"
#include "specgnn/fft.hpp"

namespace specgnn {

// Node-spectrum feature matrix, one row per frequency bin.
struct FrequencyFeatures {
  Eigen::MatrixXcd data;  // [n x d]

  Eigen::Index nodes() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

inline FrequencyFeatures dft_nodes(const Eigen::MatrixXd& x) {
  if (x.rows() < 1) throw InvalidInput("dft_nodes: empty input");
  FrequencyFeatures out;
  out.data.resize(x.rows(), x.cols());
  Eigen::VectorXcd col(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    col.real() = x.col(j);
    col.imag().setZero();
    out.data.col(j) = fft_forward(col);
  }
  return out;
}

// max |imag| of the inverse transform, relative to the real-part scale.
inline double idft_imag_residue(const Eigen::MatrixXcd& spatial) {
  const double max_imag = spatial.imag().cwiseAbs().maxCoeff();
  const double max_real = spatial.real().cwiseAbs().maxCoeff();
  return max_imag / std::max(1.0, max_real);
}

namespace detail {
inline Eigen::MatrixXcd idft_complex(const FrequencyFeatures& y) {
  Eigen::MatrixXcd spatial(y.nodes(), y.dim());
  for (Eigen::Index j = 0; j < y.dim(); ++j) {
    spatial.col(j) = fft_inverse(y.data.col(j));
  }
  return spatial;
}
}  // namespace detail

// Strict inverse: requires (near-)conjugate-symmetric input, i.e. the
// spectrum of a real signal. Residue above 1e-6 signals an upstream symmetry
// violation.
inline Eigen::MatrixXd idft_nodes(const FrequencyFeatures& y) {
  const Eigen::MatrixXcd spatial = detail::idft_complex(y);
  const double residue = idft_imag_residue(spatial);
  if (residue > 1e-6) {
    throw NumericalError(
        "idft_nodes: imaginary residue " + std::to_string(residue) +
        " exceeds 1e-6; spectrum is not the DFT of a real signal");
  }
  return spatial.real();
}

// Projecting inverse: keeps the real part unconditionally and reports the
// dropped residue. Used after free-spectral stacks, whose outputs are not
// conjugate-symmetric.
inline Eigen::MatrixXd idft_nodes_real(const FrequencyFeatures& y,
                                       double* residue = nullptr) {
  const Eigen::MatrixXcd spatial = detail::idft_complex(y);
  if (residue != nullptr) *residue = idft_imag_residue(spatial);
  return spatial.real();
}

// Adjoint of dft_nodes for real input: g_x = Re(sum_f g_y[f] e^{+2pi i fs/n}).
inline Eigen::MatrixXd dft_nodes_backward(const Eigen::MatrixXcd& g_spectrum) {
  Eigen::MatrixXd g_x(g_spectrum.rows(), g_spectrum.cols());
  const double n = static_cast<double>(g_spectrum.rows());
  for (Eigen::Index j = 0; j < g_spectrum.cols(); ++j) {
    g_x.col(j) = (fft_inverse(g_spectrum.col(j)) * n).real();
  }
  return g_x;
}

// Adjoint of idft_nodes_real: g_y = (1/n) dft(g_spatial).
inline Eigen::MatrixXcd idft_real_backward(const Eigen::MatrixXd& g_spatial) {
  Eigen::MatrixXcd g_y(g_spatial.rows(), g_spatial.cols());
  const double n = static_cast<double>(g_spatial.rows());
  Eigen::VectorXcd col(g_spatial.rows());
  for (Eigen::Index j = 0; j < g_spatial.cols(); ++j) {
    col.real() = g_spatial.col(j);
    col.imag().setZero();
    g_y.col(j) = fft_forward(col) / n;
  }
  return g_y;
}

// Average of L over its wrapped diagonals: c[s] = (1/n) sum_i L(i,(i+s)%n).
// Exact (lossless) when L is circulant.
inline Eigen::VectorXd circulant_kernel_row(const Eigen::MatrixXd& filter) {
  const Eigen::Index n = filter.rows();
  if (filter.cols() != n) {
    throw InvalidInput("circulant_kernel_row: filter not square");
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index s = 0; s < n; ++s) {
      c(s) += filter(i, (i + s) % n);
    }
  }
  return c / static_cast<double>(n);
}

// Per-frequency multiplier of the circulant(-projected) kernel.
inline Eigen::VectorXcd kernel_spectrum(const Eigen::VectorXd& kernel_row) {
  Eigen::VectorXcd c(kernel_row.size());
  c.real() = kernel_row;
  c.imag().setZero();
  return fft_forward(c);
}

enum class Band { kLow, kHigh };

enum class FgoMode {
  kCirculantExact,  // op[f] = lambda(f) * W, W trainable, identity provable
  kFreeSpectral,    // op entries trained directly, initialized band-shaped
};

inline std::string to_string(FgoMode m) {
  return m == FgoMode::kCirculantExact ? "circulant" : "free";
}

// Per-frequency d x d operator plus bias; one per network layer. The
// frequency blocks are stacked row-wise into a single matrix so the tensor is
// one contiguous trainable buffer.
struct FourierGraphOperator {
  Band band = Band::kLow;
  FgoMode mode = FgoMode::kFreeSpectral;
  Eigen::MatrixXcd op;     // [(n_freq * d) x d]
  Eigen::MatrixXd weight;  // [d x d]; the circulant-mode generator of op
  Eigen::VectorXcd bias;   // [d], broadcast over frequencies

  Eigen::Index dim() const { return op.cols(); }
  Eigen::Index n_freq() const { return dim() == 0 ? 0 : op.rows() / dim(); }
  auto op_block(Eigen::Index f) { return op.middleRows(f * dim(), dim()); }
  auto op_block(Eigen::Index f) const {
    return op.middleRows(f * dim(), dim());
  }
};

// op[f] = lambda(f) * W with lambda the spectrum of the circulant-projected
// kernel row of `filter`. Both modes share this construction; they differ in
// what is trained afterwards (W in circulant-exact, op entries in free).
inline FourierGraphOperator build_fgo(const Eigen::MatrixXd& filter,
                                      const Eigen::MatrixXd& weight,
                                      FgoMode mode, Band band = Band::kLow) {
  if (weight.rows() != weight.cols()) {
    throw InvalidInput("build_fgo: weight matrix not square");
  }
  const Eigen::Index d = weight.rows();
  FourierGraphOperator fgo;
  fgo.band = band;
  fgo.mode = mode;
  fgo.weight = weight;
  const Eigen::VectorXcd lambda =
      kernel_spectrum(circulant_kernel_row(filter));
  fgo.op.resize(lambda.size() * d, d);
  for (Eigen::Index f = 0; f < lambda.size(); ++f) {
    fgo.op_block(f) = lambda(f) * weight;
  }
  fgo.bias = Eigen::VectorXcd::Zero(d);
  return fgo;
}

// z[f,:] = y[f,:] * op[f]
inline FrequencyFeatures fgo_apply(const FrequencyFeatures& y,
                                   const FourierGraphOperator& fgo) {
  if (y.nodes() != fgo.n_freq() || y.dim() != fgo.dim()) {
    throw InvalidInput("fgo_apply: shape mismatch (features " +
                       std::to_string(y.nodes()) + "x" +
                       std::to_string(y.dim()) + ", operator " +
                       std::to_string(fgo.n_freq()) + "x" +
                       std::to_string(fgo.dim()) + ")");
  }
  FrequencyFeatures z;
  z.data.resize(y.nodes(), y.dim());
  for (Eigen::Index f = 0; f < y.nodes(); ++f) {
    z.data.row(f) = y.data.row(f) * fgo.op_block(f);
  }
  return z;
}

enum class Activation { kIdentity, kRelu, kLeakyRelu, kTanh };

inline double activate_scalar(Activation a, double x) {
  switch (a) {
    case Activation::kIdentity: return x;
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kLeakyRelu: return x > 0.0 ? x : 0.01 * x;
    case Activation::kTanh: return std::tanh(x);
  }
  return x;
}

inline double activate_grad_scalar(Activation a, double x) {
  switch (a) {
    case Activation::kIdentity: return 1.0;
    case Activation::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::kLeakyRelu: return x > 0.0 ? 1.0 : 0.01;
    case Activation::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

// Complex activation: applied independently to real and imaginary parts.
inline Eigen::MatrixXcd activate_complex(Activation a,
                                         const Eigen::MatrixXcd& x) {
  Eigen::MatrixXcd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      out(i, j) = Complex(activate_scalar(a, x(i, j).real()),
                          activate_scalar(a, x(i, j).imag()));
    }
  }
  return out;
}

// Layer stack for one band. M-layer network means M+1 operators (m = 0..M).
struct FgnStack {
  std::vector<FourierGraphOperator> layers;
  Activation activation = Activation::kLeakyRelu;

  int depth_m() const { return static_cast<int>(layers.size()) - 1; }
};

// Forward cache for one band. running[m] is F(X) * prod_{i<m} op_i, so
// running[0] is the input spectrum itself; preact[m] = running[m+1] + b_m.
struct FgnBandCache {
  std::vector<FrequencyFeatures> running;  // size M+2
  std::vector<Eigen::MatrixXcd> preact;    // size M+1
};

// y = sum_{m=0}^{M} sigma( F(x) * prod_{i=0}^{m} op_i + b_m ); the running
// product is maintained incrementally. Output stays in the frequency domain.
inline FrequencyFeatures fgn_band_forward(const Eigen::MatrixXd& x,
                                          const FgnStack& stack,
                                          FgnBandCache* cache = nullptr) {
  if (stack.layers.empty()) {
    throw InvalidInput("fgn_band_forward: empty stack");
  }
  FrequencyFeatures running = dft_nodes(x);
  if (cache != nullptr) {
    cache->running.clear();
    cache->preact.clear();
    cache->running.push_back(running);
  }
  FrequencyFeatures out;
  out.data = Eigen::MatrixXcd::Zero(running.nodes(), running.dim());
  for (const FourierGraphOperator& layer : stack.layers) {
    running = fgo_apply(running, layer);
    Eigen::MatrixXcd preact = running.data;
    preact.rowwise() += layer.bias.transpose();
    out.data += activate_complex(stack.activation, preact);
    if (cache != nullptr) {
      cache->running.push_back(running);
      cache->preact.push_back(std::move(preact));
    }
  }
  if (!out.data.allFinite()) {
    throw NumericalError("fgn_band_forward: non-finite intermediate");
  }
  return out;
}

inline std::pair<FrequencyFeatures, FrequencyFeatures> fgn_forward(
    const Eigen::MatrixXd& x, const FgnStack& low, const FgnStack& high) {
  return {fgn_band_forward(x, low), fgn_band_forward(x, high)};
}

// Per-layer gradients for one band stack, same layout as the parameters.
struct FgnBandGrads {
  std::vector<Eigen::MatrixXcd> d_op;   // [layer] of [(n_freq*d) x d]
  std::vector<Eigen::VectorXcd> d_bias;  // [layer] of [d]
};

namespace detail {
// gradient of sigma applied separately to re/im, in the real-pair convention
inline Eigen::MatrixXcd activate_complex_backward(
    Activation a, const Eigen::MatrixXcd& preact,
    const Eigen::MatrixXcd& g_out) {
  Eigen::MatrixXcd g(preact.rows(), preact.cols());
  for (Eigen::Index j = 0; j < preact.cols(); ++j) {
    for (Eigen::Index i = 0; i < preact.rows(); ++i) {
      g(i, j) = Complex(
          activate_grad_scalar(a, preact(i, j).real()) * g_out(i, j).real(),
          activate_grad_scalar(a, preact(i, j).imag()) * g_out(i, j).imag());
    }
  }
  return g;
}
}  // namespace detail

// Backward through one band. g_out is dLoss/dY in the real-pair convention
// (dL/dRe + i dL/dIm). Returns dLoss/dX and fills per-layer operator/bias
// gradients when grads is non-null.
inline Eigen::MatrixXd fgn_band_backward(const Eigen::MatrixXcd& g_out,
                                         const FgnStack& stack,
                                         const FgnBandCache& cache,
                                         FgnBandGrads* grads) {
  const int n_layers = static_cast<int>(stack.layers.size());
  const Eigen::Index d = g_out.cols();
  if (grads != nullptr) {
    grads->d_op.assign(n_layers, Eigen::MatrixXcd());
    grads->d_bias.assign(n_layers, Eigen::VectorXcd());
  }
  Eigen::MatrixXcd g_running =
      Eigen::MatrixXcd::Zero(g_out.rows(), g_out.cols());
  for (int m = n_layers - 1; m >= 0; --m) {
    const Eigen::MatrixXcd g_pre = detail::activate_complex_backward(
        stack.activation, cache.preact[m], g_out);
    g_running += g_pre;
    if (grads != nullptr) {
      grads->d_bias[m] = g_pre.colwise().sum().transpose();
      Eigen::MatrixXcd& d_op = grads->d_op[m];
      d_op.resize(g_out.rows() * d, d);
      const FrequencyFeatures& prev = cache.running[m];
      for (Eigen::Index f = 0; f < g_out.rows(); ++f) {
        d_op.middleRows(f * d, d) =
            prev.data.row(f).adjoint() * g_running.row(f);
      }
    }
    Eigen::MatrixXcd g_prev(g_out.rows(), g_out.cols());
    for (Eigen::Index f = 0; f < g_out.rows(); ++f) {
      g_prev.row(f) = g_running.row(f) * stack.layers[m].op_block(f).adjoint();
    }
    g_running = std::move(g_prev);
  }
  return dft_nodes_backward(g_running);
}

// Circulant-mode reduction: op = lambda(f) * W, so
// dW = sum_f Re(conj(lambda_f) * d_op[f]).
inline Eigen::MatrixXd fgo_weight_grad(const Eigen::MatrixXcd& d_op,
                                       const Eigen::VectorXcd& lambda) {
  const Eigen::Index d = d_op.cols();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index f = 0; f < lambda.size(); ++f) {
    g += (d_op.middleRows(f * d, d) * std::conj(lambda(f))).real();
  }
  return g;
}

}  // namespace specgnn
