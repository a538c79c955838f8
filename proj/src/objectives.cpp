#include "sjscc/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace sjscc::obj {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr double kProbFloor = 1e-12;

const double* window_weights() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kWin * kWin);
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i)
      for (int j = 0; j < kWin; ++j) {
        const double di = i - (kWin - 1) / 2.0;
        const double dj = j - (kWin - 1) / 2.0;
        v[static_cast<size_t>(i * kWin + j)] =
            std::exp(-(di * di + dj * dj) / (2.0 * kSigma * kSigma));
        sum += v[static_cast<size_t>(i * kWin + j)];
      }
    for (double& x : v) x /= sum;
    return v;
  }();
  return w.data();
}

void check_image_pair(const nn::Tensor& u, const nn::Tensor& uhat, const char* who) {
  if (!u.same_shape(uhat))
    throw std::invalid_argument(std::string(who) + ": shape mismatch " + u.shape_str() +
                                " vs " + uhat.shape_str());
  if (u.ndim() != 4)
    throw std::invalid_argument(std::string(who) + ": expected (batch, H, W, C)");
}

void check_probs(const nn::Tensor& q, const char* who) {
  if (q.ndim() != 2) throw std::invalid_argument(std::string(who) + ": expected (batch, L)");
  const long B = q.dim(0), L = q.dim(1);
  for (long i = 0; i < B; ++i) {
    double s = 0.0;
    for (long l = 0; l < L; ++l) {
      const double v = q[i * L + l];
      if (v < 0.0) throw std::invalid_argument(std::string(who) + ": negative probability");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-6)
      throw std::invalid_argument(std::string(who) + ": posterior row does not sum to 1");
  }
}

}  // namespace

double mse(const nn::Tensor& u, const nn::Tensor& uhat) {
  check_image_pair(u, uhat, "mse");
  double acc = 0.0;
  for (long i = 0; i < u.size(); ++i) {
    const double d = u[i] - uhat[i];
    acc += d * d;
  }
  return acc / static_cast<double>(u.size());
}

nn::Tensor mse_backward(const nn::Tensor& u, const nn::Tensor& uhat) {
  check_image_pair(u, uhat, "mse_backward");
  nn::Tensor g(uhat.shape());
  const double scale = 2.0 / static_cast<double>(u.size());
  for (long i = 0; i < u.size(); ++i) g[i] = scale * (uhat[i] - u[i]);
  return g;
}

namespace {

/// Shared SSIM sweep. With grad null, only the mean value is produced.
double ssim_sweep(const nn::Tensor& u, const nn::Tensor& uhat, nn::Tensor* grad) {
  const long B = u.dim(0), H = u.dim(1), W = u.dim(2), C = u.dim(3);
  if (H < kWin || W < kWin)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  const double* wt = window_weights();
  const long oh = H - kWin + 1, ow = W - kWin + 1;
  const double inv_count = 1.0 / static_cast<double>(B * C * oh * ow);

  double acc = 0.0;
  for (long b = 0; b < B; ++b) {
    for (long c = 0; c < C; ++c) {
      auto at = [&](const nn::Tensor& t, long y, long x) {
        return t[((b * H + y) * W + x) * C + c];
      };
      for (long oy = 0; oy < oh; ++oy) {
        for (long ox = 0; ox < ow; ++ox) {
          double mx = 0.0, my = 0.0, rxx = 0.0, ryy = 0.0, rxy = 0.0;
          for (int i = 0; i < kWin; ++i)
            for (int j = 0; j < kWin; ++j) {
              const double wij = wt[i * kWin + j];
              const double xv = at(u, oy + i, ox + j);
              const double yv = at(uhat, oy + i, ox + j);
              mx += wij * xv;
              my += wij * yv;
              rxx += wij * xv * xv;
              ryy += wij * yv * yv;
              rxy += wij * xv * yv;
            }
          const double a1 = 2.0 * mx * my + kC1;
          const double a2 = 2.0 * (rxy - mx * my) + kC2;
          const double b1 = mx * mx + my * my + kC1;
          const double b2 = (rxx - mx * mx) + (ryy - my * my) + kC2;
          const double s = (a1 * a2) / (b1 * b2);
          acc += s;

          if (grad) {
            // adjoint through the filtered raw moments my, ryy, rxy
            const double inv_b1b2 = 1.0 / (b1 * b2);
            const double d_my =
                2.0 * mx * (a2 - a1) * inv_b1b2 + 2.0 * my * s * (1.0 / b2 - 1.0 / b1);
            const double d_ryy = -s / b2;
            const double d_rxy = 2.0 * a1 * inv_b1b2;
            for (int i = 0; i < kWin; ++i)
              for (int j = 0; j < kWin; ++j) {
                const double wij = wt[i * kWin + j] * inv_count;
                const double xv = at(u, oy + i, ox + j);
                const double yv = at(uhat, oy + i, ox + j);
                (*grad)[((b * H + oy + i) * W + ox + j) * C + c] +=
                    wij * (d_my + 2.0 * yv * d_ryy + xv * d_rxy);
              }
          }
        }
      }
    }
  }
  return acc * inv_count;
}

}  // namespace

double ssim(const nn::Tensor& u, const nn::Tensor& uhat) {
  check_image_pair(u, uhat, "ssim");
  return ssim_sweep(u, uhat, nullptr);
}

nn::Tensor ssim_backward(const nn::Tensor& u, const nn::Tensor& uhat) {
  check_image_pair(u, uhat, "ssim_backward");
  nn::Tensor grad(uhat.shape());
  ssim_sweep(u, uhat, &grad);
  return grad;
}

double distortion(const nn::Tensor& u, const nn::Tensor& uhat, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("distortion: alpha must be >= 0");
  double d = mse(u, uhat);
  if (alpha > 0.0) d += alpha * (1.0 - ssim(u, uhat));
  return d;
}

nn::Tensor distortion_backward(const nn::Tensor& u, const nn::Tensor& uhat,
                               double alpha) {
  nn::Tensor g = mse_backward(u, uhat);
  if (alpha > 0.0) {
    nn::Tensor gs = ssim_backward(u, uhat);
    for (long i = 0; i < g.size(); ++i) g[i] -= alpha * gs[i];
  }
  return g;
}

nn::Tensor softmax(const nn::Tensor& logits) {
  if (logits.ndim() != 2) throw std::invalid_argument("softmax: expected (batch, L)");
  const long B = logits.dim(0), L = logits.dim(1);
  nn::Tensor q(logits.shape());
  for (long i = 0; i < B; ++i) {
    double mx = logits[i * L];
    for (long l = 1; l < L; ++l) mx = std::max(mx, logits[i * L + l]);
    double sum = 0.0;
    for (long l = 0; l < L; ++l) {
      const double e = std::exp(logits[i * L + l] - mx);
      q[i * L + l] = e;
      sum += e;
    }
    for (long l = 0; l < L; ++l) q[i * L + l] /= sum;
  }
  return q;
}

double cross_entropy_onehot(const nn::Tensor& probs, const std::vector<int>& labels) {
  check_probs(probs, "cross_entropy");
  const long B = probs.dim(0), L = probs.dim(1);
  if (static_cast<long>(labels.size()) != B)
    throw std::invalid_argument("cross_entropy: label count mismatch");
  double acc = 0.0;
  for (long i = 0; i < B; ++i) {
    const int y = labels[static_cast<size_t>(i)];
    if (y < 0 || y >= L) throw std::invalid_argument("cross_entropy: label out of range");
    acc -= std::log(std::max(probs[i * L + y], kProbFloor));
  }
  return acc / static_cast<double>(B);
}

double cross_entropy_uniform(const nn::Tensor& probs) {
  check_probs(probs, "cross_entropy");
  const long B = probs.dim(0), L = probs.dim(1);
  double acc = 0.0;
  for (long i = 0; i < B; ++i)
    for (long l = 0; l < L; ++l)
      acc -= std::log(std::max(probs[i * L + l], kProbFloor)) / static_cast<double>(L);
  return acc / static_cast<double>(B);
}

double cross_entropy(const nn::Tensor& probs, const std::vector<double>& target) {
  check_probs(probs, "cross_entropy");
  const long B = probs.dim(0), L = probs.dim(1);
  if (static_cast<long>(target.size()) != L)
    throw std::invalid_argument("cross_entropy: target length mismatch");
  double tsum = 0.0;
  for (double t : target) {
    if (t < 0.0) throw std::invalid_argument("cross_entropy: negative target mass");
    tsum += t;
  }
  if (std::abs(tsum - 1.0) > 1e-9)
    throw std::invalid_argument("cross_entropy: target does not sum to 1");
  double acc = 0.0;
  for (long i = 0; i < B; ++i)
    for (long l = 0; l < L; ++l)
      acc -= target[static_cast<size_t>(l)] * std::log(std::max(probs[i * L + l], kProbFloor));
  return acc / static_cast<double>(B);
}

nn::Tensor softmax_ce_onehot_backward(const nn::Tensor& probs,
                                      const std::vector<int>& labels) {
  const long B = probs.dim(0), L = probs.dim(1);
  if (static_cast<long>(labels.size()) != B)
    throw std::invalid_argument("softmax_ce_onehot_backward: label count mismatch");
  nn::Tensor g = probs;
  for (long i = 0; i < B; ++i) g[i * L + labels[static_cast<size_t>(i)]] -= 1.0;
  for (long i = 0; i < g.size(); ++i) g[i] /= static_cast<double>(B);
  return g;
}

nn::Tensor softmax_ce_uniform_backward(const nn::Tensor& probs) {
  const long B = probs.dim(0), L = probs.dim(1);
  nn::Tensor g = probs;
  const double p = 1.0 / static_cast<double>(L);
  for (long i = 0; i < g.size(); ++i) g[i] = (g[i] - p) / static_cast<double>(B);
  return g;
}

LossReport legit_loss(const nn::Tensor& u, const nn::Tensor& uhat,
                      const std::vector<nn::Tensor>& posteriors,
                      const std::vector<int>& labels, const std::vector<double>& w,
                      double alpha, bool use_alc) {
  if (posteriors.empty()) throw std::invalid_argument("legit_loss: no posteriors");
  if (w.size() != 1 && w.size() != posteriors.size())
    throw std::invalid_argument("legit_loss: weight count mismatch");

  LossReport rep;
  rep.mse = mse(u, uhat);
  rep.ssim = ssim(u, uhat);
  rep.distortion = rep.mse + alpha * (1.0 - rep.ssim);

  const double m_eff = static_cast<double>(posteriors.size());
  double leakage = 0.0;
  for (size_t m = 0; m < posteriors.size(); ++m) {
    const double ce = use_alc ? cross_entropy_uniform(posteriors[m])
                              : cross_entropy_onehot(posteriors[m], labels);
    rep.per_adversary_ce.push_back(ce);
    leakage += (w.size() == 1 ? w[0] : w[m]) * ce;
  }
  leakage /= m_eff;
  rep.total = use_alc ? rep.distortion + leakage : rep.distortion - leakage;
  return rep;
}

double adversary_loss(const nn::Tensor& q, const std::vector<int>& labels) {
  return cross_entropy_onehot(q, labels);
}

}  // namespace sjscc::obj
