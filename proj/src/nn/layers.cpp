#include "sjscc/nn/layers.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace sjscc::nn {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatCM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
template <class M>
using Map = Eigen::Map<M>;
template <class M>
using CMap = Eigen::Map<const M>;

void he_uniform(Tensor& w, long fan_in, RngStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (long i = 0; i < w.size(); ++i) w[i] = rng.uniform(-limit, limit);
}

long conv_out_dim(long in, long k, long stride, long pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Gathers k x k x C patches of x (NHWC) into a column-major matrix with
// (k*k*C) rows and (N*out_h*out_w) columns. Out-of-range taps read as zero.
void im2col(const double* x, long n, long h, long w, long c, long k, long stride, long pad,
            long oh, long ow, nn::aligned_vector<double>& col) {
  const long rows = k * k * c;
  col.assign(static_cast<size_t>(rows * n * oh * ow), 0.0);
  for (long ni = 0; ni < n; ++ni) {
    const double* xb = x + ni * h * w * c;
    for (long oy = 0; oy < oh; ++oy) {
      for (long ox = 0; ox < ow; ++ox) {
        double* colc = col.data() + ((ni * oh + oy) * ow + ox) * rows;
        for (long ky = 0; ky < k; ++ky) {
          const long iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (long kx = 0; kx < k; ++kx) {
            const long ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= w) continue;
            std::memcpy(colc + (ky * k + kx) * c, xb + (iy * w + ix) * c,
                        sizeof(double) * static_cast<size_t>(c));
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back into an NHWC tensor.
void col2im_add(const nn::aligned_vector<double>& col, long n, long h, long w, long c, long k,
                long stride, long pad, long oh, long ow, double* x) {
  const long rows = k * k * c;
  for (long ni = 0; ni < n; ++ni) {
    double* xb = x + ni * h * w * c;
    for (long oy = 0; oy < oh; ++oy) {
      for (long ox = 0; ox < ow; ++ox) {
        const double* colc = col.data() + ((ni * oh + oy) * ow + ox) * rows;
        for (long ky = 0; ky < k; ++ky) {
          const long iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (long kx = 0; kx < k; ++kx) {
            const long ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= w) continue;
            const double* src = colc + (ky * k + kx) * c;
            double* dst = xb + (iy * w + ix) * c;
            for (long ci = 0; ci < c; ++ci) dst[ci] += src[ci];
          }
        }
      }
    }
  }
}

void check_nhwc(const Tensor& x, long h, long w, long c, const char* who) {
  if (x.ndim() != 4 || x.dim(1) != h || x.dim(2) != w || x.dim(3) != c)
    throw std::invalid_argument(std::string(who) + ": bad input shape " + x.shape_str());
}

}  // namespace

// ---------------------------------------------------------------- Conv2D

Conv2D::Conv2D(long in_h, long in_w, long in_c, long out_c, long ksize, long stride,
               long pad, RngStream& init_rng)
    : in_h_(in_h),
      in_w_(in_w),
      in_c_(in_c),
      out_c_(out_c),
      k_(ksize),
      stride_(stride),
      pad_(pad),
      out_h_(conv_out_dim(in_h, ksize, stride, pad)),
      out_w_(conv_out_dim(in_w, ksize, stride, pad)),
      w_({out_c, ksize, ksize, in_c}),
      b_({out_c}),
      w_grad_({out_c, ksize, ksize, in_c}),
      b_grad_({out_c}) {
  if (out_h_ < 1 || out_w_ < 1) throw std::invalid_argument("Conv2D: empty output");
  he_uniform(w_, k_ * k_ * in_c_, init_rng);
}

Tensor Conv2D::forward(const Tensor& x) {
  check_nhwc(x, in_h_, in_w_, in_c_, "Conv2D");
  const long n = x.dim(0);
  cached_n_ = n;
  im2col(x.data(), n, in_h_, in_w_, in_c_, k_, stride_, pad_, out_h_, out_w_, col_);

  const long rows = k_ * k_ * in_c_;
  const long cols = n * out_h_ * out_w_;
  Tensor y({n, out_h_, out_w_, out_c_});
  CMap<MatCM> colm(col_.data(), rows, cols);
  CMap<MatRM> wm(w_.data(), out_c_, rows);
  Map<MatRM> ym(y.data(), cols, out_c_);
  ym.noalias() = colm.transpose() * wm.transpose();
  CMap<Eigen::VectorXd> bv(b_.data(), out_c_);
  ym.rowwise() += bv.transpose();
  return y;
}

Tensor Conv2D::backward(const Tensor& dy) {
  const long n = cached_n_;
  const long rows = k_ * k_ * in_c_;
  const long cols = n * out_h_ * out_w_;
  if (dy.size() != cols * out_c_) throw std::invalid_argument("Conv2D::backward: shape");

  CMap<MatRM> dym(dy.data(), cols, out_c_);
  CMap<MatCM> colm(col_.data(), rows, cols);

  Map<MatRM> wg(w_grad_.data(), out_c_, rows);
  wg.noalias() = dym.transpose() * colm.transpose();
  Map<Eigen::VectorXd> bg(b_grad_.data(), out_c_);
  bg = dym.colwise().sum();

  nn::aligned_vector<double> dcol(static_cast<size_t>(rows * cols));
  Map<MatCM> dcolm(dcol.data(), rows, cols);
  CMap<MatRM> wm(w_.data(), out_c_, rows);
  dcolm.noalias() = wm.transpose() * dym.transpose();

  Tensor dx({n, in_h_, in_w_, in_c_});
  col2im_add(dcol, n, in_h_, in_w_, in_c_, k_, stride_, pad_, out_h_, out_w_, dx.data());
  return dx;
}

void Conv2D::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".w", &w_, &w_grad_});
  out.push_back({prefix + ".b", &b_, &b_grad_});
}

// ------------------------------------------------------- ConvTranspose2D

ConvTranspose2D::ConvTranspose2D(long in_h, long in_w, long in_c, long out_c, long ksize,
                                 long stride, long pad, long out_pad, RngStream& init_rng)
    : in_h_(in_h),
      in_w_(in_w),
      in_c_(in_c),
      out_c_(out_c),
      k_(ksize),
      stride_(stride),
      pad_(pad),
      out_pad_(out_pad),
      out_h_((in_h - 1) * stride + ksize - 2 * pad + out_pad),
      out_w_((in_w - 1) * stride + ksize - 2 * pad + out_pad),
      w_({in_c, ksize, ksize, out_c}),
      b_({out_c}),
      w_grad_({in_c, ksize, ksize, out_c}),
      b_grad_({out_c}) {
  if (out_pad_ >= stride_)
    throw std::invalid_argument("ConvTranspose2D: out_pad must be < stride");
  // The adjoint conv must map the output grid back onto the input grid.
  if (conv_out_dim(out_h_, k_, stride_, pad_) != in_h_ ||
      conv_out_dim(out_w_, k_, stride_, pad_) != in_w_)
    throw std::invalid_argument("ConvTranspose2D: inconsistent geometry");
  he_uniform(w_, k_ * k_ * in_c_, init_rng);
}

Tensor ConvTranspose2D::forward(const Tensor& x) {
  check_nhwc(x, in_h_, in_w_, in_c_, "ConvTranspose2D");
  const long n = x.dim(0);
  cached_n_ = n;
  x_cache_ = x;

  const long rows = k_ * k_ * out_c_;
  const long cols = n * in_h_ * in_w_;
  nn::aligned_vector<double> dcol(static_cast<size_t>(rows * cols));
  Map<MatCM> dcolm(dcol.data(), rows, cols);
  CMap<MatRM> wm(w_.data(), in_c_, rows);
  CMap<MatRM> xm(x.data(), cols, in_c_);
  dcolm.noalias() = wm.transpose() * xm.transpose();

  Tensor y({n, out_h_, out_w_, out_c_});
  col2im_add(dcol, n, out_h_, out_w_, out_c_, k_, stride_, pad_, in_h_, in_w_, y.data());
  CMap<Eigen::VectorXd> bv(b_.data(), out_c_);
  Map<MatRM> ym(y.data(), n * out_h_ * out_w_, out_c_);
  ym.rowwise() += bv.transpose();
  return y;
}

Tensor ConvTranspose2D::backward(const Tensor& dy) {
  const long n = cached_n_;
  if (dy.size() != n * out_h_ * out_w_ * out_c_)
    throw std::invalid_argument("ConvTranspose2D::backward: shape");

  const long rows = k_ * k_ * out_c_;
  const long cols = n * in_h_ * in_w_;
  nn::aligned_vector<double> col_dy;
  im2col(dy.data(), n, out_h_, out_w_, out_c_, k_, stride_, pad_, in_h_, in_w_, col_dy);

  CMap<MatCM> colm(col_dy.data(), rows, cols);
  CMap<MatRM> wm(w_.data(), in_c_, rows);
  CMap<MatRM> xm(x_cache_.data(), cols, in_c_);

  Tensor dx({n, in_h_, in_w_, in_c_});
  Map<MatRM> dxm(dx.data(), cols, in_c_);
  dxm.noalias() = colm.transpose() * wm.transpose();

  Map<MatRM> wg(w_grad_.data(), in_c_, rows);
  wg.noalias() = xm.transpose() * colm.transpose();

  CMap<MatRM> dym(dy.data(), n * out_h_ * out_w_, out_c_);
  Map<Eigen::VectorXd> bg(b_grad_.data(), out_c_);
  bg = dym.colwise().sum();
  return dx;
}

void ConvTranspose2D::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".w", &w_, &w_grad_});
  out.push_back({prefix + ".b", &b_, &b_grad_});
}

// ----------------------------------------------------------------- Dense

Dense::Dense(long in, long out, RngStream& init_rng)
    : in_(in), out_(out), w_({out, in}), b_({out}), w_grad_({out, in}), b_grad_({out}) {
  he_uniform(w_, in_, init_rng);
}

Tensor Dense::forward(const Tensor& x) {
  const long n = x.dim(0);
  if (x.size() != n * in_) throw std::invalid_argument("Dense: bad input " + x.shape_str());
  x_cache_ = x;
  Tensor y({n, out_});
  CMap<MatRM> xm(x.data(), n, in_);
  CMap<MatRM> wm(w_.data(), out_, in_);
  Map<MatRM> ym(y.data(), n, out_);
  ym.noalias() = xm * wm.transpose();
  CMap<Eigen::VectorXd> bv(b_.data(), out_);
  ym.rowwise() += bv.transpose();
  return y;
}

Tensor Dense::backward(const Tensor& dy) {
  const long n = x_cache_.dim(0);
  if (dy.size() != n * out_) throw std::invalid_argument("Dense::backward: shape");
  CMap<MatRM> dym(dy.data(), n, out_);
  CMap<MatRM> xm(x_cache_.data(), n, in_);
  CMap<MatRM> wm(w_.data(), out_, in_);

  Map<MatRM> wg(w_grad_.data(), out_, in_);
  wg.noalias() = dym.transpose() * xm;
  Map<Eigen::VectorXd> bg(b_grad_.data(), out_);
  bg = dym.colwise().sum();

  Tensor dx(x_cache_.shape());
  Map<MatRM> dxm(dx.data(), n, in_);
  dxm.noalias() = dym * wm;
  return dx;
}

void Dense::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".w", &w_, &w_grad_});
  out.push_back({prefix + ".b", &b_, &b_grad_});
}

// ----------------------------------------------------------------- PReLU

PReLU::PReLU(long channels, double init_slope)
    : channels_(channels), a_({channels}), a_grad_({channels}) {
  a_.fill(init_slope);
}

Tensor PReLU::forward(const Tensor& x) {
  if (x.dim(x.ndim() - 1) != channels_)
    throw std::invalid_argument("PReLU: channel mismatch " + x.shape_str());
  x_cache_ = x;
  Tensor y = x;
  const long total = x.size();
  for (long i = 0; i < total; ++i) {
    if (y[i] < 0.0) y[i] *= a_[i % channels_];
  }
  return y;
}

Tensor PReLU::backward(const Tensor& dy) {
  if (!dy.same_shape(x_cache_)) throw std::invalid_argument("PReLU::backward: shape");
  Tensor dx = dy;
  a_grad_.fill(0.0);
  const long total = dy.size();
  for (long i = 0; i < total; ++i) {
    const double x = x_cache_[i];
    if (x < 0.0) {
      const long c = i % channels_;
      a_grad_[c] += dy[i] * x;
      dx[i] = dy[i] * a_[c];
    }
  }
  return dx;
}

void PReLU::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".a", &a_, &a_grad_});
}

// --------------------------------------------------------------- Sigmoid

Tensor Sigmoid::forward(const Tensor& x) {
  Tensor y = x;
  for (long i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-y[i]));
  y_cache_ = y;
  return y;
}

Tensor Sigmoid::backward(const Tensor& dy) {
  if (!dy.same_shape(y_cache_)) throw std::invalid_argument("Sigmoid::backward: shape");
  Tensor dx = dy;
  for (long i = 0; i < dx.size(); ++i) {
    const double y = y_cache_[i];
    dx[i] *= y * (1.0 - y);
  }
  return dx;
}

}  // namespace sjscc::nn
