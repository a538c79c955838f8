#ifndef SJSCC_NN_NET_HPP
#define SJSCC_NN_NET_HPP

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sjscc/nn/layers.hpp"

namespace sjscc::nn {

/// Reshapes each sample to a fixed per-sample shape (no parameters).
class Reshape : public Layer {
 public:
  explicit Reshape(std::vector<long> sample_shape) : sample_shape_(std::move(sample_shape)) {}

  Tensor forward(const Tensor& x) override {
    in_shape_ = x.shape();
    std::vector<long> s{x.dim(0)};
    s.insert(s.end(), sample_shape_.begin(), sample_shape_.end());
    return x.reshaped(std::move(s));
  }

  Tensor backward(const Tensor& dy) override { return dy.reshaped(in_shape_); }
  std::string kind() const override { return "reshape"; }

 private:
  std::vector<long> sample_shape_;
  std::vector<long> in_shape_;
};

/// Sequential network: forward caches per layer, backward walks in reverse
/// and fills parameter gradients.
class Net {
 public:
  Net() = default;
  Net(Net&&) = default;
  Net& operator=(Net&&) = default;

  template <class L, class... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor forward(const Tensor& x) {
    Tensor h = x;
    for (auto& l : layers_) h = l->forward(h);
    return h;
  }

  Tensor backward(const Tensor& dy) {
    Tensor g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }

  std::vector<ParamRef> params(const std::string& prefix = "net") {
    std::vector<ParamRef> out;
    for (size_t i = 0; i < layers_.size(); ++i)
      layers_[i]->collect_params(prefix + "." + std::to_string(i) + "." + layers_[i]->kind(),
                                 out);
    return out;
  }

  size_t layer_count() const { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// FNV-1a fingerprint over every parameter tensor of a set, in order.
inline uint64_t params_hash(const std::vector<ParamRef>& params) {
  uint64_t h = 1469598103934665603ull;
  for (const auto& p : params) h = tensor_hash(*p.value, h);
  return h;
}

}  // namespace sjscc::nn

#endif
