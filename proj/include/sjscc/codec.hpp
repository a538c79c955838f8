#ifndef SJSCC_CODEC_HPP
#define SJSCC_CODEC_HPP

#include "sjscc/channel.hpp"
#include "sjscc/config.hpp"
#include "sjscc/nn/net.hpp"

namespace sjscc::codec {

/// Spatial geometry shared by the encoder head, the decoder input and the
/// adversary input: images downsample by 4 in each dimension, and the 2k (or
/// 2k n_T) latent reals must tile that grid exactly.
struct LatentGeometry {
  long grid_h = 0;
  long grid_w = 0;
  long enc_head_c = 0;  // 2 k n_T / (grid_h grid_w)
  long dec_in_c = 0;    // 2 k / (grid_h grid_w)
};

LatentGeometry latent_geometry(const ValidatedConfig& vc);

/// Image (batch, H, W, C) -> raw complex codeword (batch, n_T, k, 2). Four
/// strided conv blocks with PReLU; the flat head output pairs consecutive
/// reals into (re, im) per antenna.
struct Encoder {
  nn::Net net;
  long n_t = 0;
  long k = 0;
  ImageDims dims;
};

Encoder build_encoder(const ValidatedConfig& vc, nn::RngStream& rng);

/// Received signal (batch, k, 2) -> image (batch, H, W, C) in (0, 1). The 2k
/// reals are laid onto the downsampled grid, refined by two unit-stride conv
/// blocks, then upsampled back by two transposed convs and saturated.
struct Decoder {
  nn::Net net;
  long k = 0;
  ImageDims dims;
};

Decoder build_decoder(const ValidatedConfig& vc, nn::RngStream& rng);

/// Everything the backward pass needs from one encode call.
struct EncodeState {
  nn::Tensor raw;             // pre-normalization codeword
  channel::NormContext norm;  // norm.x is the transmitted codeword
};

/// Forward pass plus exact per-sample power normalization.
EncodeState encode(Encoder& enc, const nn::Tensor& u, double P);

/// Backpropagates a gradient at the normalized codeword through the
/// normalization and the encoder net (filling parameter gradients); returns
/// the gradient at the input pixels.
nn::Tensor encode_backward(Encoder& enc, const EncodeState& st,
                           const nn::Tensor& grad_x);

nn::Tensor decode(Decoder& dec, const nn::Tensor& y);

/// Backpropagates a gradient at the reconstruction through the decoder net;
/// returns the gradient at the received signal.
nn::Tensor decode_backward(Decoder& dec, const nn::Tensor& grad_u);

}  // namespace sjscc::codec

#endif
