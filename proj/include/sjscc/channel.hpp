#ifndef SJSCC_CHANNEL_HPP
#define SJSCC_CHANNEL_HPP

#include <vector>

#include "sjscc/config.hpp"
#include "sjscc/nn/rng.hpp"
#include "sjscc/nn/tensor.hpp"

namespace sjscc::channel {

/// Complex tensors are stored as real tensors with a trailing dimension of 2
/// holding (re, im):
///   codeword        (batch, n_T, k, 2)
///   channel gains   (batch, n_T, 2)
///   received signal (batch, k, 2)

/// Per-sample exact power normalization: sample i is scaled by
/// sqrt(k P) / ||raw_i||_F so that (1/k) sum_t ||x_t||^2 = P holds exactly
/// for every sample. scale and raw_norm2 are kept for the backward pass.
struct NormContext {
  nn::Tensor x;
  std::vector<double> scale;
  std::vector<double> raw_norm2;
};

NormContext power_normalize(const nn::Tensor& raw, double P);

/// Gradient of a scalar loss with respect to raw, given its gradient with
/// respect to the normalized codeword.
nn::Tensor power_normalize_backward(const NormContext& ctx, const nn::Tensor& raw,
                                    const nn::Tensor& grad_x);

/// (1/k) sum_t ||x_t||^2 for one sample of a (batch, n_T, k, 2) codeword.
double sample_power(const nn::Tensor& x, long i);

/// sigma^2 = P * 10^(-snr_db / 10); callers split it evenly between the real
/// and imaginary noise components.
double snr_db_to_noise_var(double snr_db, double P);

/// One complex gain per antenna per sample, constant across the k channel
/// uses of that sample. AWGN fixes all gains at 1+0i; Rayleigh draws
/// circularly symmetric complex Gaussians with unit mean power; Nakagami
/// draws |h|^2 ~ Gamma(m, 1/m) with an independent uniform phase.
nn::Tensor sample_gains(const ChannelSpec& spec, int n_t, long batch,
                        nn::RngStream& rng);

/// y_t = h^T x_t + n_t with fresh complex Gaussian noise of total variance
/// noise_var per use. Gains and noise act as sampled constants, so the map is
/// differentiable in x.
nn::Tensor apply_channel(const nn::Tensor& x, const nn::Tensor& gains,
                         double noise_var, nn::RngStream& rng);

/// Gradient with respect to x: the adjoint multiplies by conj(h).
nn::Tensor apply_channel_backward(const nn::Tensor& gains, const nn::Tensor& grad_y,
                                  long n_t, long k);

/// Gamma(shape, scale) via Marsaglia-Tsang squeeze (with the boost trick for
/// shape < 1). Exposed for the fading samplers and their tests.
double sample_gamma(double shape, double scale, nn::RngStream& rng);

}  // namespace sjscc::channel

#endif
