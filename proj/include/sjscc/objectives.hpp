#ifndef SJSCC_OBJECTIVES_HPP
#define SJSCC_OBJECTIVES_HPP

#include <vector>

#include "sjscc/nn/tensor.hpp"

namespace sjscc::obj {

/// Mean squared error, averaged over pixels and batch.
double mse(const nn::Tensor& u, const nn::Tensor& uhat);

/// d(mse)/d(uhat).
nn::Tensor mse_backward(const nn::Tensor& u, const nn::Tensor& uhat);

/// Mean structural similarity over all valid 11x11 windows (Gaussian weights,
/// sigma = 1.5), channels and batch, with c1 = (0.01)^2 and c2 = (0.03)^2 for
/// unit dynamic range. Inputs are (batch, H, W, C) with H, W >= 11.
double ssim(const nn::Tensor& u, const nn::Tensor& uhat);

/// d(ssim)/d(uhat).
nn::Tensor ssim_backward(const nn::Tensor& u, const nn::Tensor& uhat);

/// d(u, uhat) = mse + alpha * (1 - ssim).
double distortion(const nn::Tensor& u, const nn::Tensor& uhat, double alpha);

/// d(distortion)/d(uhat).
nn::Tensor distortion_backward(const nn::Tensor& u, const nn::Tensor& uhat,
                               double alpha);

/// Row-wise softmax of (batch, L) logits.
nn::Tensor softmax(const nn::Tensor& logits);

/// Batch-mean cross-entropy of a posterior against one-hot labels, natural
/// log, probabilities clamped below at 1e-12.
double cross_entropy_onehot(const nn::Tensor& probs, const std::vector<int>& labels);

/// Batch-mean cross-entropy against the uniform distribution over L classes.
double cross_entropy_uniform(const nn::Tensor& probs);

/// Batch-mean cross-entropy against one shared target distribution.
double cross_entropy(const nn::Tensor& probs, const std::vector<double>& target);

/// Gradient of cross_entropy_onehot(softmax(logits), labels) with respect to
/// the logits: (probs - onehot) / batch.
nn::Tensor softmax_ce_onehot_backward(const nn::Tensor& probs,
                                      const std::vector<int>& labels);

/// Gradient of cross_entropy_uniform(softmax(logits)) with respect to the
/// logits: (probs - 1/L) / batch.
nn::Tensor softmax_ce_uniform_backward(const nn::Tensor& probs);

/// Decomposed legitimate-pair loss. per_adversary_ce holds the cross-entropy
/// that enters the leakage term (against the true label without the
/// compensation variant, against the uniform prior with it), so
///   total = distortion - (1/M) sum w_m ce_m   (use_alc = false)
///   total = distortion + (1/M) sum w_m ce_m   (use_alc = true)
/// is reproducible from the report.
struct LossReport {
  double total = 0.0;
  double distortion = 0.0;
  double mse = 0.0;
  double ssim = 0.0;
  std::vector<double> per_adversary_ce;
};

/// Loss the legitimate pair descends. Pass the M solo posteriors, or in
/// colluding mode the single colluded posterior (the average then runs over
/// one term). w holds one weight per posterior, or a single shared weight.
LossReport legit_loss(const nn::Tensor& u, const nn::Tensor& uhat,
                      const std::vector<nn::Tensor>& posteriors,
                      const std::vector<int>& labels, const std::vector<double>& w,
                      double alpha, bool use_alc);

/// Loss each adversary descends: batch-mean cross-entropy of its posterior
/// against the true sensitive label.
double adversary_loss(const nn::Tensor& q, const std::vector<int>& labels);

}  // namespace sjscc::obj

#endif
