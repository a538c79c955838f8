#ifndef SJSCC_NN_LAYERS_HPP
#define SJSCC_NN_LAYERS_HPP

#include <memory>
#include <string>
#include <vector>

#include "sjscc/nn/rng.hpp"
#include "sjscc/nn/tensor.hpp"

namespace sjscc::nn {

struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

/// A differentiable layer. forward() caches whatever backward() needs;
/// backward() overwrites parameter gradients (no accumulation across calls)
/// and returns the gradient with respect to the layer input.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {}
  virtual std::string kind() const = 0;
};

/// 2-D convolution over NHWC batches, im2col + GEMM.
class Conv2D : public Layer {
 public:
  Conv2D(long in_h, long in_w, long in_c, long out_c, long ksize, long stride, long pad,
         RngStream& init_rng);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  std::string kind() const override { return "conv"; }

  long out_h() const { return out_h_; }
  long out_w() const { return out_w_; }
  long out_c() const { return out_c_; }

 private:
  long in_h_, in_w_, in_c_, out_c_, k_, stride_, pad_, out_h_, out_w_;
  Tensor w_, b_, w_grad_, b_grad_;
  aligned_vector<double> col_;  // cached im2col matrix, (k*k*in_c) x (N*out_h*out_w)
  long cached_n_ = 0;
};

/// Transposed 2-D convolution (upsampling stride), the adjoint map of Conv2D.
class ConvTranspose2D : public Layer {
 public:
  ConvTranspose2D(long in_h, long in_w, long in_c, long out_c, long ksize, long stride,
                  long pad, long out_pad, RngStream& init_rng);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  std::string kind() const override { return "convT"; }

  long out_h() const { return out_h_; }
  long out_w() const { return out_w_; }
  long out_c() const { return out_c_; }

 private:
  long in_h_, in_w_, in_c_, out_c_, k_, stride_, pad_, out_pad_, out_h_, out_w_;
  Tensor w_, b_, w_grad_, b_grad_;  // w stored (in_c, k, k, out_c)
  Tensor x_cache_;
  long cached_n_ = 0;
};

/// Fully connected layer on (N, in) tensors.
class Dense : public Layer {
 public:
  Dense(long in, long out, RngStream& init_rng);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  std::string kind() const override { return "dense"; }

 private:
  long in_, out_;
  Tensor w_, b_, w_grad_, b_grad_;
  Tensor x_cache_;
};

/// PReLU with one learnable slope per channel (last tensor dimension).
class PReLU : public Layer {
 public:
  explicit PReLU(long channels, double init_slope = 0.25);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  std::string kind() const override { return "prelu"; }

 private:
  long channels_;
  Tensor a_, a_grad_;
  Tensor x_cache_;
};

/// Elementwise logistic saturation into (0, 1).
class Sigmoid : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  std::string kind() const override { return "sigmoid"; }

 private:
  Tensor y_cache_;
};

}  // namespace sjscc::nn

#endif
