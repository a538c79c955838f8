#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sjscc/channel.hpp"
#include "sjscc/codec.hpp"
#include "sjscc/nn/adam.hpp"
#include "sjscc/objectives.hpp"
#include "support/gradcheck.hpp"

using namespace sjscc;
using namespace sjscc::codec;

namespace {

ValidatedConfig make_vc(int h, int w, int c, Rational kn, int n_t) {
  TrainingConfig cfg;
  cfg.k_over_n = kn;
  cfg.n_t = n_t;
  return validate_config(cfg, ImageDims{h, w, c});
}

nn::Tensor random_images(long b, const ImageDims& d, nn::RngStream& rng) {
  nn::Tensor t({b, d.height, d.width, d.channels});
  for (long i = 0; i < t.size(); ++i) t[i] = rng.uniform();
  return t;
}

nn::Tensor smooth_images(long b, const ImageDims& d, nn::RngStream& rng) {
  nn::Tensor t({b, d.height, d.width, d.channels});
  for (long n = 0; n < b; ++n) {
    const double fx = rng.uniform(0.5, 2.0), fy = rng.uniform(0.5, 2.0);
    const double ph = rng.uniform(0.0, 6.28), base = rng.uniform(0.3, 0.7);
    for (long y = 0; y < d.height; ++y)
      for (long x = 0; x < d.width; ++x)
        for (long c = 0; c < d.channels; ++c)
          t[((n * d.height + y) * d.width + x) * d.channels + c] =
              base + 0.3 * std::sin(2 * M_PI * (fx * x / d.width + fy * y / d.height) +
                                    ph + 0.9 * c);
  }
  for (long i = 0; i < t.size(); ++i) t[i] = std::min(1.0, std::max(0.0, t[i]));
  return t;
}

}  // namespace

TEST_CASE("full-scale encoder emits 2 k n_T reals paired into a complex codeword") {
  ValidatedConfig vc = make_vc(32, 32, 3, {1, 3}, 4);
  REQUIRE(vc.k == 1024);
  nn::RngStream rng(50, 0);
  Encoder enc = build_encoder(vc, rng);
  nn::RngStream irng(51, 0);
  nn::Tensor u = random_images(2, vc.dims, irng);
  EncodeState st = encode(enc, u, 1.0);
  CHECK(st.raw.shape() == std::vector<long>{2, 4, 1024, 2});
  CHECK(st.raw.size() / 2 == 8192);  // reals per sample
  CHECK(st.norm.x.shape() == std::vector<long>{2, 4, 1024, 2});
  for (long i = 0; i < 2; ++i)
    CHECK(std::abs(channel::sample_power(st.norm.x, i) - 1.0) < 1e-6);
}

TEST_CASE("full-scale decoder reconstructs a 32x32x3 image in (0,1)") {
  ValidatedConfig vc = make_vc(32, 32, 3, {1, 3}, 4);
  nn::RngStream rng(52, 0);
  Decoder dec = build_decoder(vc, rng);
  nn::Tensor y({2, 1024, 2});
  nn::RngStream yr(53, 0);
  for (long i = 0; i < y.size(); ++i) y[i] = yr.normal();
  nn::Tensor u1 = decode(dec, y);
  CHECK(u1.shape() == std::vector<long>{2, 32, 32, 3});
  for (long i = 0; i < u1.size(); ++i) {
    REQUIRE(u1[i] > 0.0);
    REQUIRE(u1[i] < 1.0);
  }
  nn::Tensor u2 = decode(dec, y);
  for (long i = 0; i < u1.size(); ++i) REQUIRE(u1[i] == u2[i]);

  nn::Tensor bad({2, 512, 2});
  CHECK_THROWS_AS(decode(dec, bad), std::invalid_argument);
}

TEST_CASE("identical seeds build identical codecs") {
  ValidatedConfig vc = make_vc(32, 32, 3, {1, 3}, 4);
  nn::RngStream a(60, 0), b(60, 0), c(61, 0);
  Encoder ea = build_encoder(vc, a);
  Encoder eb = build_encoder(vc, b);
  Encoder ec = build_encoder(vc, c);
  CHECK(nn::params_hash(ea.net.params("encoder")) ==
        nn::params_hash(eb.net.params("encoder")));
  CHECK(nn::params_hash(ea.net.params("encoder")) !=
        nn::params_hash(ec.net.params("encoder")));
}

TEST_CASE("geometry that cannot host the latent is rejected at build time") {
  // 12x12x3: grid 3x3 = 9 cells; k/n = 7/100 gives k = 30, 60 reals, 60 % 9 != 0
  TrainingConfig cfg;
  cfg.k_over_n = {7, 100};
  cfg.n_t = 1;
  ValidatedConfig vc = validate_config(cfg, ImageDims{12, 12, 3});
  nn::RngStream rng(62, 0);
  CHECK_THROWS_AS(build_encoder(vc, rng), std::invalid_argument);
  CHECK_THROWS_AS(build_decoder(vc, rng), std::invalid_argument);

  // dimensions not divisible by 4
  ValidatedConfig vc2 = validate_config(TrainingConfig{}, ImageDims{30, 30, 3});
  CHECK_THROWS_AS(build_encoder(vc2, rng), std::invalid_argument);
}

TEST_CASE("slot-0 codeword is independent of the rest of the batch") {
  ValidatedConfig vc = make_vc(16, 16, 3, {1, 3}, 2);
  nn::RngStream rng(63, 0);
  Encoder enc = build_encoder(vc, rng);
  nn::RngStream irng(64, 0);
  nn::Tensor batch = random_images(5, vc.dims, irng);
  nn::Tensor solo({1, 16, 16, 3});
  const long stride = 16 * 16 * 3;
  for (long i = 0; i < stride; ++i) solo[i] = batch[i];

  EncodeState big = encode(enc, batch, 1.0);
  EncodeState one = encode(enc, solo, 1.0);
  const long per = big.norm.x.size() / 5;
  for (long i = 0; i < per; ++i) REQUIRE(one.norm.x[i] == big.norm.x[i]);
}

TEST_CASE("encoder pixel gradient matches finite differences") {
  TrainingConfig cfg;
  cfg.k_over_n = {1, 4};
  cfg.n_t = 2;
  ValidatedConfig vc = validate_config(cfg, ImageDims{8, 8, 1});
  REQUIRE(vc.k == 16);
  nn::RngStream rng(65, 0);
  Encoder enc = build_encoder(vc, rng);
  nn::RngStream irng(66, 0);
  nn::Tensor u = random_images(2, vc.dims, irng);

  nn::Tensor w({2, 2, 16, 2});
  for (long i = 0; i < w.size(); ++i) w[i] = irng.uniform(-1.0, 1.0);
  auto loss = [&](const nn::Tensor& img) {
    EncodeState st = encode(enc, img, 1.0);
    double acc = 0.0;
    for (long i = 0; i < st.norm.x.size(); ++i) acc += w[i] * st.norm.x[i];
    return acc;
  };

  EncodeState st = encode(enc, u, 1.0);
  nn::Tensor grad_pix = encode_backward(enc, st, w);

  nn::RngStream pick(67, 0);
  for (int trial = 0; trial < 8; ++trial) {
    const long idx = static_cast<long>(pick.next_u64() % static_cast<uint64_t>(u.size()));
    const double fd = testing::fd_partial(loss, u, idx, 1e-5);
    CHECK(testing::rel_err(fd, grad_pix[idx]) < 1e-3);
  }
}

TEST_CASE("encoder-channel-decoder composition gradient reaches the parameters") {
  TrainingConfig cfg;
  cfg.k_over_n = {1, 4};
  cfg.n_t = 2;
  ValidatedConfig vc = validate_config(cfg, ImageDims{8, 8, 1});
  nn::RngStream rng(68, 0);
  Encoder enc = build_encoder(vc, rng);
  Decoder dec = build_decoder(vc, rng);
  nn::RngStream irng(69, 0);
  nn::Tensor u = random_images(2, vc.dims, irng);
  nn::Tensor target = random_images(2, vc.dims, irng);

  ChannelSpec awgn{ChannelSpec::Family::AWGN, 20.0, 1.0, 1.0};
  nn::RngStream grng(70, 0);
  nn::Tensor gains = channel::sample_gains(awgn, 2, 2, grng);
  nn::RngStream noise_rng(71, 0);
  const std::string frozen = noise_rng.save_state();
  const double noise_var = 0.01;

  auto loss = [&]() {
    EncodeState st = encode(enc, u, 1.0);
    nn::RngStream nr(0, 0);
    nr.load_state(frozen);
    nn::Tensor y = channel::apply_channel(st.norm.x, gains, noise_var, nr);
    nn::Tensor uhat = decode(dec, y);
    return obj::mse(target, uhat);
  };

  // analytic gradient via the full backward chain
  EncodeState st = encode(enc, u, 1.0);
  nn::RngStream nr(0, 0);
  nr.load_state(frozen);
  nn::Tensor y = channel::apply_channel(st.norm.x, gains, noise_var, nr);
  nn::Tensor uhat = decode(dec, y);
  nn::Tensor grad_uhat = obj::mse_backward(target, uhat);
  nn::Tensor grad_y = decode_backward(dec, grad_uhat);
  nn::Tensor grad_x = channel::apply_channel_backward(gains, grad_y, 2, vc.k);
  encode_backward(enc, st, grad_x);

  auto check_params = [&](std::vector<nn::ParamRef> params) {
    nn::RngStream pick(72, 0);
    int checked = 0;
    for (int trial = 0; trial < 10; ++trial) {
      auto& p = params[pick.next_u64() % params.size()];
      const long idx =
          static_cast<long>(pick.next_u64() % static_cast<uint64_t>(p.value->size()));
      const double analytic = (*p.grad)[idx];
      const double orig = (*p.value)[idx];
      const double step = 1e-5 * (1.0 + std::abs(orig));
      (*p.value)[idx] = orig + step;
      const double fp = loss();
      (*p.value)[idx] = orig - step;
      const double fm = loss();
      (*p.value)[idx] = orig;
      const double fd = (fp - fm) / (2.0 * step);
      CHECK(testing::rel_err(fd, analytic) < 1e-3);
      ++checked;
    }
    REQUIRE(checked == 10);
  };
  check_params(enc.net.params("encoder"));
  check_params(dec.net.params("decoder"));
}

TEST_CASE("codec memorizes a small set through the identity channel") {
  TrainingConfig cfg;
  cfg.k_over_n = {1, 3};
  cfg.n_t = 1;
  ValidatedConfig vc = validate_config(cfg, ImageDims{16, 16, 3});
  REQUIRE(vc.k == 256);
  nn::RngStream rng(73, 0);
  Encoder enc = build_encoder(vc, rng);
  Decoder dec = build_decoder(vc, rng);
  nn::RngStream irng(74, 0);
  nn::Tensor u = smooth_images(64, vc.dims, irng);

  ChannelSpec awgn{ChannelSpec::Family::AWGN, 20.0, 1.0, 1.0};
  nn::RngStream grng(75, 0);
  nn::Tensor gains = channel::sample_gains(awgn, 1, 64, grng);

  std::vector<nn::ParamRef> all = enc.net.params("encoder");
  auto dp = dec.net.params("decoder");
  all.insert(all.end(), dp.begin(), dp.end());
  nn::Adam opt(1e-3);

  nn::RngStream nrng(76, 0);
  double last_mse = 1.0;
  for (int step = 0; step < 200; ++step) {
    EncodeState st = encode(enc, u, 1.0);
    nn::Tensor y = channel::apply_channel(st.norm.x, gains, 0.0, nrng);
    nn::Tensor uhat = decode(dec, y);
    last_mse = obj::mse(u, uhat);
    nn::Tensor grad_uhat = obj::mse_backward(u, uhat);
    nn::Tensor grad_y = decode_backward(dec, grad_uhat);
    nn::Tensor grad_x = channel::apply_channel_backward(gains, grad_y, 1, vc.k);
    encode_backward(enc, st, grad_x);
    opt.step(all);
  }
  CHECK(last_mse < 0.01);
}
