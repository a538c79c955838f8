#include "sjscc/codec.hpp"

#include <stdexcept>

namespace sjscc::codec {

LatentGeometry latent_geometry(const ValidatedConfig& vc) {
  const long H = vc.dims.height, W = vc.dims.width;
  if (H % 4 != 0 || W % 4 != 0)
    throw std::invalid_argument("codec: image height and width must be divisible by 4");
  LatentGeometry g;
  g.grid_h = H / 4;
  g.grid_w = W / 4;
  const long cells = g.grid_h * g.grid_w;
  const long enc_total = 2 * vc.k * vc.cfg.n_t;
  const long dec_total = 2 * vc.k;
  if (enc_total % cells != 0 || dec_total % cells != 0)
    throw std::invalid_argument(
        "codec: 2*k*n_T latent values do not tile the downsampled grid " +
        std::to_string(g.grid_h) + "x" + std::to_string(g.grid_w));
  g.enc_head_c = enc_total / cells;
  g.dec_in_c = dec_total / cells;
  if (g.enc_head_c < 1 || g.dec_in_c < 1)
    throw std::invalid_argument("codec: latent too small for the grid");
  return g;
}

Encoder build_encoder(const ValidatedConfig& vc, nn::RngStream& rng) {
  const LatentGeometry g = latent_geometry(vc);
  const long H = vc.dims.height, W = vc.dims.width, C = vc.dims.channels;

  Encoder enc;
  enc.n_t = vc.cfg.n_t;
  enc.k = vc.k;
  enc.dims = vc.dims;
  enc.net.emplace<nn::Conv2D>(H, W, C, 16, 5, 2, 2, rng);
  enc.net.emplace<nn::PReLU>(16);
  enc.net.emplace<nn::Conv2D>(H / 2, W / 2, 16, 32, 5, 2, 2, rng);
  enc.net.emplace<nn::PReLU>(32);
  enc.net.emplace<nn::Conv2D>(g.grid_h, g.grid_w, 32, 32, 5, 1, 2, rng);
  enc.net.emplace<nn::PReLU>(32);
  enc.net.emplace<nn::Conv2D>(g.grid_h, g.grid_w, 32, g.enc_head_c, 5, 1, 2, rng);
  enc.net.emplace<nn::PReLU>(g.enc_head_c);
  enc.net.emplace<nn::Reshape>(std::vector<long>{enc.n_t, enc.k, 2});
  return enc;
}

Decoder build_decoder(const ValidatedConfig& vc, nn::RngStream& rng) {
  const LatentGeometry g = latent_geometry(vc);
  const long H = vc.dims.height, W = vc.dims.width, C = vc.dims.channels;

  Decoder dec;
  dec.k = vc.k;
  dec.dims = vc.dims;
  dec.net.emplace<nn::Reshape>(std::vector<long>{g.grid_h, g.grid_w, g.dec_in_c});
  dec.net.emplace<nn::Conv2D>(g.grid_h, g.grid_w, g.dec_in_c, 32, 5, 1, 2, rng);
  dec.net.emplace<nn::PReLU>(32);
  dec.net.emplace<nn::Conv2D>(g.grid_h, g.grid_w, 32, 32, 5, 1, 2, rng);
  dec.net.emplace<nn::PReLU>(32);
  dec.net.emplace<nn::ConvTranspose2D>(g.grid_h, g.grid_w, 32, 16, 5, 2, 2, 1, rng);
  dec.net.emplace<nn::PReLU>(16);
  dec.net.emplace<nn::ConvTranspose2D>(H / 2, W / 2, 16, C, 5, 2, 2, 1, rng);
  dec.net.emplace<nn::Sigmoid>();
  return dec;
}

EncodeState encode(Encoder& enc, const nn::Tensor& u, double P) {
  if (u.ndim() != 4 || u.dim(1) != enc.dims.height || u.dim(2) != enc.dims.width ||
      u.dim(3) != enc.dims.channels)
    throw std::invalid_argument("encode: image batch " + u.shape_str() +
                                " does not match the configured dimensions");
  EncodeState st;
  st.raw = enc.net.forward(u);
  st.norm = channel::power_normalize(st.raw, P);
  return st;
}

nn::Tensor encode_backward(Encoder& enc, const EncodeState& st,
                           const nn::Tensor& grad_x) {
  nn::Tensor grad_raw = channel::power_normalize_backward(st.norm, st.raw, grad_x);
  return enc.net.backward(grad_raw);
}

nn::Tensor decode(Decoder& dec, const nn::Tensor& y) {
  if (y.ndim() != 3 || y.dim(1) != dec.k || y.dim(2) != 2)
    throw std::invalid_argument("decode: received signal " + y.shape_str() +
                                " does not match configured k = " +
                                std::to_string(dec.k));
  return dec.net.forward(y);
}

nn::Tensor decode_backward(Decoder& dec, const nn::Tensor& grad_u) {
  return dec.net.backward(grad_u);
}

}  // namespace sjscc::codec
