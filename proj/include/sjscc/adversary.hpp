#ifndef SJSCC_ADVERSARY_HPP
#define SJSCC_ADVERSARY_HPP

#include <vector>

#include "sjscc/codec.hpp"
#include "sjscc/config.hpp"
#include "sjscc/nn/net.hpp"

namespace sjscc::adv {

/// M independently initialized classifiers mapping an eavesdropped signal
/// (batch, k, 2) to logits over the L secret classes, plus one trainable
/// scalar collusion weight per member (initialized to 1/M, unconstrained).
struct Ensemble {
  std::vector<nn::Net> members;
  nn::Tensor weights;
  nn::Tensor weights_grad;
  bool colluding = false;
  long num_classes = 0;
  long k = 0;

  long size() const { return static_cast<long>(members.size()); }

  /// Member parameters plus the collusion weights, all named.
  std::vector<nn::ParamRef> params();
  std::vector<nn::ParamRef> member_params(long m);
};

Ensemble build_ensemble(const ValidatedConfig& vc, nn::RngStream& rng);

/// Deterministic logits of member m on its received signal.
nn::Tensor adversary_forward(Ensemble& ens, long m, const nn::Tensor& z);

/// Weighted sum of all members' logits under the ensemble's collusion
/// weights: combined = sum_m w_m logits_m.
nn::Tensor collude_aggregate(const std::vector<nn::Tensor>& logits,
                             const nn::Tensor& weights);

/// Gradients of the aggregate: per-member d(combined)/d(logits_m) = w_m g, and
/// the collusion-weight gradient dw_m = <g, logits_m> accumulated into wgrad.
std::vector<nn::Tensor> collude_backward(const std::vector<nn::Tensor>& logits,
                                         const nn::Tensor& weights,
                                         const nn::Tensor& grad_combined,
                                         nn::Tensor& weights_grad);

/// Argmax class per posterior row; ties break toward the lowest index.
std::vector<int> predict(const nn::Tensor& posterior);

/// Fraction of rows whose prediction matches the label.
double accuracy(const nn::Tensor& posterior, const std::vector<int>& labels);

}  // namespace sjscc::adv

#endif
