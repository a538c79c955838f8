#include "sjscc/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace sjscc::channel {

namespace {

void check_codeword_shape(const nn::Tensor& x, const char* who) {
  if (x.ndim() != 4 || x.dim(3) != 2)
    throw std::invalid_argument(std::string(who) +
                                ": expected complex codeword (batch, n_T, k, 2), got " +
                                x.shape_str());
}

}  // namespace

NormContext power_normalize(const nn::Tensor& raw, double P) {
  check_codeword_shape(raw, "power_normalize");
  if (!(P > 0.0)) throw std::invalid_argument("power_normalize: P must be positive");
  const long batch = raw.dim(0);
  const long per = raw.size() / std::max<long>(batch, 1);
  const long k = raw.dim(2);

  NormContext ctx;
  ctx.x = raw;
  ctx.scale.resize(static_cast<size_t>(batch));
  ctx.raw_norm2.resize(static_cast<size_t>(batch));
  const double target = std::sqrt(static_cast<double>(k) * P);
  double* d = ctx.x.data();
  for (long i = 0; i < batch; ++i) {
    double n2 = 0.0;
    const double* s = raw.data() + i * per;
    for (long j = 0; j < per; ++j) n2 += s[j] * s[j];
    if (n2 == 0.0)
      throw std::invalid_argument("power_normalize: all-zero sample has no defined scale");
    const double scale = target / std::sqrt(n2);
    ctx.scale[static_cast<size_t>(i)] = scale;
    ctx.raw_norm2[static_cast<size_t>(i)] = n2;
    for (long j = 0; j < per; ++j) d[i * per + j] = s[j] * scale;
  }
  return ctx;
}

nn::Tensor power_normalize_backward(const NormContext& ctx, const nn::Tensor& raw,
                                    const nn::Tensor& grad_x) {
  if (!raw.same_shape(grad_x))
    throw std::invalid_argument("power_normalize_backward: shape mismatch");
  const long batch = raw.dim(0);
  const long per = raw.size() / std::max<long>(batch, 1);

  nn::Tensor grad_raw(raw.shape());
  for (long i = 0; i < batch; ++i) {
    const double s = ctx.scale[static_cast<size_t>(i)];
    const double n2 = ctx.raw_norm2[static_cast<size_t>(i)];
    const double* r = raw.data() + i * per;
    const double* g = grad_x.data() + i * per;
    double dot = 0.0;
    for (long j = 0; j < per; ++j) dot += g[j] * r[j];
    const double coef = s * dot / n2;
    double* out = grad_raw.data() + i * per;
    for (long j = 0; j < per; ++j) out[j] = s * g[j] - coef * r[j];
  }
  return grad_raw;
}

double sample_power(const nn::Tensor& x, long i) {
  check_codeword_shape(x, "sample_power");
  const long per = x.dim(1) * x.dim(2) * 2;
  const double* s = x.data() + i * per;
  double n2 = 0.0;
  for (long j = 0; j < per; ++j) n2 += s[j] * s[j];
  return n2 / static_cast<double>(x.dim(2));
}

double snr_db_to_noise_var(double snr_db, double P) {
  if (!(P > 0.0)) throw std::invalid_argument("snr_db_to_noise_var: P must be positive");
  return P * std::pow(10.0, -snr_db / 10.0);
}

double sample_gamma(double shape, double scale, nn::RngStream& rng) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw std::invalid_argument("sample_gamma: shape and scale must be positive");
  if (shape < 1.0) {
    const double g = sample_gamma(shape + 1.0, scale, rng);
    const double u = 1.0 - rng.uniform();  // (0, 1]
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z, v;
    do {
      z = rng.normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - rng.uniform();  // (0, 1]
    const double z2 = z * z;
    if (u < 1.0 - 0.0331 * z2 * z2) return d * v * scale;
    if (std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) return d * v * scale;
  }
}

nn::Tensor sample_gains(const ChannelSpec& spec, int n_t, long batch,
                        nn::RngStream& rng) {
  if (n_t < 1) throw std::invalid_argument("sample_gains: n_t must be positive");
  nn::Tensor h({batch, n_t, 2});
  double* d = h.data();
  switch (spec.family) {
    case ChannelSpec::Family::AWGN:
      for (long i = 0; i < batch * n_t; ++i) {
        d[2 * i] = 1.0;
        d[2 * i + 1] = 0.0;
      }
      break;
    case ChannelSpec::Family::Rayleigh: {
      const double sd = std::sqrt(0.5);
      for (long i = 0; i < batch * n_t; ++i) {
        d[2 * i] = sd * rng.normal();
        d[2 * i + 1] = sd * rng.normal();
      }
      break;
    }
    case ChannelSpec::Family::Nakagami: {
      if (spec.nakagami_m < 0.5)
        throw std::invalid_argument("sample_gains: Nakagami fading needs m >= 0.5");
      const double m = spec.nakagami_m;
      for (long i = 0; i < batch * n_t; ++i) {
        const double r = std::sqrt(sample_gamma(m, 1.0 / m, rng));
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        d[2 * i] = r * std::cos(theta);
        d[2 * i + 1] = r * std::sin(theta);
      }
      break;
    }
  }
  return h;
}

nn::Tensor apply_channel(const nn::Tensor& x, const nn::Tensor& gains,
                         double noise_var, nn::RngStream& rng) {
  check_codeword_shape(x, "apply_channel");
  const long batch = x.dim(0), n_t = x.dim(1), k = x.dim(2);
  if (gains.ndim() != 3 || gains.dim(0) != batch || gains.dim(1) != n_t ||
      gains.dim(2) != 2)
    throw std::invalid_argument("apply_channel: gains shape " + gains.shape_str() +
                                " does not match codeword " + x.shape_str());
  if (noise_var < 0.0)
    throw std::invalid_argument("apply_channel: negative noise variance");

  nn::Tensor y({batch, k, 2});
  const double nsd = std::sqrt(noise_var / 2.0);
  const double* xd = x.data();
  const double* hd = gains.data();
  double* yd = y.data();
  for (long i = 0; i < batch; ++i) {
    const double* hi = hd + i * n_t * 2;
    for (long t = 0; t < k; ++t) {
      double re = 0.0, im = 0.0;
      for (long a = 0; a < n_t; ++a) {
        const double xr = xd[((i * n_t + a) * k + t) * 2];
        const double xi = xd[((i * n_t + a) * k + t) * 2 + 1];
        const double hr = hi[2 * a], hiim = hi[2 * a + 1];
        re += hr * xr - hiim * xi;
        im += hr * xi + hiim * xr;
      }
      yd[(i * k + t) * 2] = re + nsd * rng.normal();
      yd[(i * k + t) * 2 + 1] = im + nsd * rng.normal();
    }
  }
  return y;
}

nn::Tensor apply_channel_backward(const nn::Tensor& gains, const nn::Tensor& grad_y,
                                  long n_t, long k) {
  const long batch = grad_y.dim(0);
  if (grad_y.ndim() != 3 || grad_y.dim(1) != k || grad_y.dim(2) != 2)
    throw std::invalid_argument("apply_channel_backward: bad grad shape " +
                                grad_y.shape_str());
  nn::Tensor grad_x({batch, n_t, k, 2});
  const double* hd = gains.data();
  const double* gd = grad_y.data();
  double* out = grad_x.data();
  for (long i = 0; i < batch; ++i) {
    const double* hi = hd + i * n_t * 2;
    for (long t = 0; t < k; ++t) {
      const double gr = gd[(i * k + t) * 2];
      const double gi = gd[(i * k + t) * 2 + 1];
      for (long a = 0; a < n_t; ++a) {
        const double hr = hi[2 * a], him = hi[2 * a + 1];
        out[((i * n_t + a) * k + t) * 2] = gr * hr + gi * him;
        out[((i * n_t + a) * k + t) * 2 + 1] = -gr * him + gi * hr;
      }
    }
  }
  return grad_x;
}

}  // namespace sjscc::channel
