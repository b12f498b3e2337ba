// AdamW with decoupled weight decay over the flat tensor registry.
#pragma once

#include <cmath>
#include <vector>

#include "specgnn/errors.hpp"
#include "specgnn/params.hpp"

namespace specgnn {

class AdamW {
 public:
  AdamW(double lr, double beta1, double beta2, double eps, double weight_decay)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        weight_decay_(weight_decay) {}

  void step(std::vector<TensorRef>& params,
            const std::vector<TensorRef>& grads) {
    if (params.size() != grads.size()) {
      throw InvalidInput("AdamW: parameter/gradient registry mismatch");
    }
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params[i].size, 0.0);
        v_[i].assign(params[i].size, 0.0);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].size != grads[i].size) {
        throw InvalidInput("AdamW: tensor size mismatch at " + params[i].name);
      }
      double* p = params[i].data;
      const double* g = grads[i].data;
      for (std::size_t k = 0; k < params[i].size; ++k) {
        m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g[k];
        v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g[k] * g[k];
        const double m_hat = m_[i][k] / bc1;
        const double v_hat = v_[i][k] / bc2;
        p[k] -= lr_ * (m_hat / (std::sqrt(v_hat) + eps_) +
                       weight_decay_ * p[k]);
      }
    }
  }

  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace specgnn
