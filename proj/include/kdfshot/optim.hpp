#pragma once

#include <cmath>
#include <vector>

#include "kdfshot/tensor.hpp"

namespace kdfshot {

// Adam with decoupled weight decay. Holds first/second moment state per
// parameter tensor; step order follows the parameter list order.
class AdamW {
 public:
  AdamW(std::vector<diff::Tensor> params, double lr, double weight_decay = 1e-4,
        double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)),
        lr_(lr),
        wd_(weight_decay),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].size(), 0.0);
      v_[i].assign(params_[i].size(), 0.0);
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& val = params_[i].value();
      const auto& g = params_[i].grad();
      for (size_t j = 0; j < val.size(); ++j) {
        m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
        v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
        double mhat = m_[i][j] / bc1;
        double vhat = v_[i][j] / bc2;
        val[j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd_ * val[j]);
      }
    }
  }

  double lr() const { return lr_; }

 private:
  std::vector<diff::Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, wd_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace kdfshot
