#ifndef SJSCC_NN_ADAM_HPP
#define SJSCC_NN_ADAM_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sjscc/nn/layers.hpp"

namespace sjscc::nn {

/// Adaptive-moment gradient descent. One instance per parameter group;
/// moment buffers are created lazily on the first step and are keyed by
/// parameter order, which must stay stable across steps and checkpoints.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<ParamRef>& params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.value->shape());
        v_.emplace_back(p.value->shape());
      }
    }
    if (m_.size() != params.size()) throw std::logic_error("Adam: parameter group changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
      Tensor& w = *params[i].value;
      const Tensor& g = *params[i].grad;
      Tensor& m = m_[i];
      Tensor& v = v_[i];
      for (long j = 0; j < w.size(); ++j) {
        m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
        v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
        w[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
      }
    }
  }

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  long t() const { return t_; }

  // Checkpoint access: moments plus the step counter fully determine state.
  std::vector<Tensor>& moments_m() { return m_; }
  std::vector<Tensor>& moments_v() { return v_; }
  void set_t(long t) { t_ = t; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace sjscc::nn

#endif
