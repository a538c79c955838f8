#include "sjscc/adversary.hpp"

#include <stdexcept>

namespace sjscc::adv {

namespace {

nn::Net build_member(const ValidatedConfig& vc, const codec::LatentGeometry& g,
                     nn::RngStream& rng) {
  const long gh = g.grid_h, gw = g.grid_w, c0 = g.dec_in_c;
  nn::Net net;
  net.emplace<nn::Reshape>(std::vector<long>{gh, gw, c0});
  net.emplace<nn::Conv2D>(gh, gw, c0, 32, 5, 2, 2, rng);
  net.emplace<nn::PReLU>(32);
  const long h2 = (gh + 2 * 2 - 5) / 2 + 1;
  const long w2 = (gw + 2 * 2 - 5) / 2 + 1;
  net.emplace<nn::Conv2D>(h2, w2, 32, 32, 5, 1, 2, rng);
  net.emplace<nn::PReLU>(32);
  net.emplace<nn::Reshape>(std::vector<long>{h2 * w2 * 32});
  net.emplace<nn::Dense>(h2 * w2 * 32, 128, rng);
  net.emplace<nn::PReLU>(128);
  net.emplace<nn::Dense>(128, vc.num_classes, rng);
  return net;
}

}  // namespace

Ensemble build_ensemble(const ValidatedConfig& vc, nn::RngStream& rng) {
  const codec::LatentGeometry g = codec::latent_geometry(vc);
  Ensemble ens;
  ens.colluding = vc.cfg.colluding;
  ens.num_classes = vc.num_classes;
  ens.k = vc.k;
  const long m = vc.cfg.m_eavesdroppers;
  for (long i = 0; i < m; ++i) ens.members.push_back(build_member(vc, g, rng));
  ens.weights = nn::Tensor({m});
  ens.weights.fill(1.0 / static_cast<double>(m));
  ens.weights_grad = nn::Tensor({m});
  return ens;
}

std::vector<nn::ParamRef> Ensemble::params() {
  std::vector<nn::ParamRef> out;
  for (size_t i = 0; i < members.size(); ++i) {
    auto p = members[i].params("adversary" + std::to_string(i));
    out.insert(out.end(), p.begin(), p.end());
  }
  out.push_back({"collusion.w", &weights, &weights_grad});
  return out;
}

std::vector<nn::ParamRef> Ensemble::member_params(long m) {
  return members[static_cast<size_t>(m)].params("adversary" + std::to_string(m));
}

nn::Tensor adversary_forward(Ensemble& ens, long m, const nn::Tensor& z) {
  if (m < 0 || m >= ens.size())
    throw std::invalid_argument("adversary_forward: member index out of range");
  if (z.ndim() != 3 || z.dim(1) != ens.k || z.dim(2) != 2)
    throw std::invalid_argument("adversary_forward: signal " + z.shape_str() +
                                " does not match configured k = " +
                                std::to_string(ens.k));
  return ens.members[static_cast<size_t>(m)].forward(z);
}

nn::Tensor collude_aggregate(const std::vector<nn::Tensor>& logits,
                             const nn::Tensor& weights) {
  if (logits.empty()) throw std::invalid_argument("collude_aggregate: no logits");
  if (weights.size() != static_cast<long>(logits.size()))
    throw std::invalid_argument("collude_aggregate: weight count mismatch");
  nn::Tensor combined(logits[0].shape());
  for (size_t m = 0; m < logits.size(); ++m) {
    if (!logits[m].same_shape(combined))
      throw std::invalid_argument("collude_aggregate: logit shape mismatch");
    const double w = weights[static_cast<long>(m)];
    for (long i = 0; i < combined.size(); ++i) combined[i] += w * logits[m][i];
  }
  return combined;
}

std::vector<nn::Tensor> collude_backward(const std::vector<nn::Tensor>& logits,
                                         const nn::Tensor& weights,
                                         const nn::Tensor& grad_combined,
                                         nn::Tensor& weights_grad) {
  std::vector<nn::Tensor> grads;
  for (size_t m = 0; m < logits.size(); ++m) {
    const double w = weights[static_cast<long>(m)];
    nn::Tensor g(grad_combined.shape());
    double wg = 0.0;
    for (long i = 0; i < g.size(); ++i) {
      g[i] = w * grad_combined[i];
      wg += grad_combined[i] * logits[m][i];
    }
    weights_grad[static_cast<long>(m)] = wg;
    grads.push_back(std::move(g));
  }
  return grads;
}

std::vector<int> predict(const nn::Tensor& posterior) {
  if (posterior.ndim() != 2) throw std::invalid_argument("predict: expected (batch, L)");
  const long B = posterior.dim(0), L = posterior.dim(1);
  std::vector<int> out(static_cast<size_t>(B));
  for (long i = 0; i < B; ++i) {
    int best = 0;
    for (long l = 1; l < L; ++l)
      if (posterior[i * L + l] > posterior[i * L + best]) best = static_cast<int>(l);
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

double accuracy(const nn::Tensor& posterior, const std::vector<int>& labels) {
  const std::vector<int> pred = predict(posterior);
  if (pred.size() != labels.size())
    throw std::invalid_argument("accuracy: label count mismatch");
  long hits = 0;
  for (size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace sjscc::adv
