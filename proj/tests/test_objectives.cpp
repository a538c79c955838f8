#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sjscc/nn/rng.hpp"
#include "sjscc/objectives.hpp"
#include "support/gradcheck.hpp"

using namespace sjscc;
using namespace sjscc::obj;

namespace {

nn::Tensor random_images(long b, long h, long w, long c, nn::RngStream& rng) {
  nn::Tensor t({b, h, w, c});
  for (long i = 0; i < t.size(); ++i) t[i] = rng.uniform();
  return t;
}

/// Independent SSIM oracle: same definition, different formulation. Means
/// first, then centered second moments in a second pass over each window.
double ssim_oracle(const nn::Tensor& u, const nn::Tensor& v) {
  const long B = u.dim(0), H = u.dim(1), W = u.dim(2), C = u.dim(3);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03, sigma = 1.5;
  double wsum = 0.0;
  double win[11][11];
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      win[i][j] = std::exp(-((i - 5.0) * (i - 5.0) + (j - 5.0) * (j - 5.0)) /
                           (2.0 * sigma * sigma));
      wsum += win[i][j];
    }
  for (auto& row : win)
    for (double& x : row) x /= wsum;

  double acc = 0.0;
  long count = 0;
  for (long b = 0; b < B; ++b)
    for (long c = 0; c < C; ++c)
      for (long oy = 0; oy + 11 <= H; ++oy)
        for (long ox = 0; ox + 11 <= W; ++ox) {
          auto at = [&](const nn::Tensor& t, long y, long x) {
            return t[((b * H + y) * W + x) * C + c];
          };
          double mx = 0, my = 0;
          for (int i = 0; i < 11; ++i)
            for (int j = 0; j < 11; ++j) {
              mx += win[i][j] * at(u, oy + i, ox + j);
              my += win[i][j] * at(v, oy + i, ox + j);
            }
          double vx = 0, vy = 0, cxy = 0;
          for (int i = 0; i < 11; ++i)
            for (int j = 0; j < 11; ++j) {
              const double dx = at(u, oy + i, ox + j) - mx;
              const double dy = at(v, oy + i, ox + j) - my;
              vx += win[i][j] * dx * dx;
              vy += win[i][j] * dy * dy;
              cxy += win[i][j] * dx * dy;
            }
          acc += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
          ++count;
        }
  return acc / static_cast<double>(count);
}

}  // namespace

TEST_CASE("mse basics") {
  nn::RngStream rng(31, 0);
  nn::Tensor u = random_images(2, 4, 4, 3, rng);
  CHECK(mse(u, u) == 0.0);

  nn::Tensor zeros({1, 2, 2, 1});
  nn::Tensor ones({1, 2, 2, 1});
  ones.fill(1.0);
  CHECK(mse(zeros, ones) == 1.0);

  // hand summation oracle on a 2x2 pair
  nn::Tensor a({1, 2, 2, 1}), b({1, 2, 2, 1});
  const double av[4] = {0.1, 0.5, 0.9, 0.3};
  const double bv[4] = {0.2, 0.4, 0.8, 0.7};
  double hand = 0.0;
  for (int i = 0; i < 4; ++i) {
    a[i] = av[i];
    b[i] = bv[i];
    hand += (av[i] - bv[i]) * (av[i] - bv[i]);
  }
  hand /= 4.0;
  CHECK(mse(a, b) == doctest::Approx(hand).epsilon(1e-15));

  nn::Tensor wrong({1, 2, 3, 1});
  CHECK_THROWS_AS(mse(a, wrong), std::invalid_argument);
}

TEST_CASE("ssim of an image with itself is exactly one") {
  nn::RngStream rng(32, 0);
  nn::Tensor u = random_images(2, 16, 13, 3, rng);
  CHECK(ssim(u, u) == 1.0);
}

TEST_CASE("ssim of constant images collapses to the luminance term") {
  const double a = 0.3, b = 0.8, c1 = 0.01 * 0.01;
  nn::Tensor ua({1, 12, 12, 1}), ub({1, 12, 12, 1});
  ua.fill(a);
  ub.fill(b);
  const double expect = (2 * a * b + c1) / (a * a + b * b + c1);
  CHECK(ssim(ua, ub) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ssim matches an independent windowed implementation") {
  nn::RngStream rng(33, 0);
  nn::Tensor u = random_images(2, 32, 32, 3, rng);
  nn::Tensor v = random_images(2, 32, 32, 3, rng);
  CHECK(ssim(u, v) == doctest::Approx(ssim_oracle(u, v)).epsilon(1e-6));

  // also on a correlated pair (reconstruction-like): v = u + small noise
  nn::Tensor w = u;
  for (long i = 0; i < w.size(); ++i) w[i] = std::min(1.0, std::max(0.0, w[i] + 0.05 * rng.normal()));
  CHECK(ssim(u, w) == doctest::Approx(ssim_oracle(u, w)).epsilon(1e-6));
  CHECK(ssim(u, w) > ssim(u, v));
}

TEST_CASE("ssim is symmetric") {
  nn::RngStream rng(34, 0);
  nn::Tensor u = random_images(1, 14, 14, 2, rng);
  nn::Tensor v = random_images(1, 14, 14, 2, rng);
  CHECK(ssim(u, v) == doctest::Approx(ssim(v, u)).epsilon(1e-9));
}

TEST_CASE("ssim rejects images smaller than the window") {
  nn::Tensor a({1, 10, 12, 1}), b({1, 10, 12, 1});
  CHECK_THROWS_AS(ssim(a, b), std::invalid_argument);
}

TEST_CASE("distortion composes mse and ssim") {
  nn::RngStream rng(35, 0);
  nn::Tensor u = random_images(1, 12, 12, 3, rng);
  nn::Tensor v = random_images(1, 12, 12, 3, rng);
  CHECK(distortion(u, u, 0.7) == 0.0);
  CHECK(distortion(u, v, 0.0) == mse(u, v));
  CHECK(distortion(u, v, 0.1) ==
        doctest::Approx(mse(u, v) + 0.1 * (1.0 - ssim(u, v))).epsilon(1e-12));
  CHECK_THROWS_AS(distortion(u, v, -0.1), std::invalid_argument);
}

TEST_CASE("cross entropy anchor values") {
  nn::Tensor q({1, 10});
  q.fill(0.1);
  CHECK(cross_entropy_onehot(q, {3}) == doctest::Approx(std::log(10.0)).epsilon(1e-9));
  CHECK(cross_entropy_uniform(q) == doctest::Approx(std::log(10.0)).epsilon(1e-9));

  nn::Tensor onehot({1, 10});
  onehot[4] = 1.0;
  CHECK(cross_entropy_onehot(onehot, {4}) == 0.0);
  // fully wrong confident posterior hits the clamp
  CHECK(cross_entropy_onehot(onehot, {2}) ==
        doctest::Approx(-std::log(1e-12)).epsilon(1e-9));

  nn::Tensor q3({1, 3});
  q3[0] = 0.7;
  q3[1] = 0.2;
  q3[2] = 0.1;
  CHECK(cross_entropy_onehot(q3, {0}) == doctest::Approx(-std::log(0.7)).epsilon(1e-9));
  CHECK(cross_entropy(q3, {1.0, 0.0, 0.0}) ==
        doctest::Approx(-std::log(0.7)).epsilon(1e-9));
}

TEST_CASE("cross entropy rejects invalid distributions") {
  nn::Tensor notprob({1, 3});
  notprob[0] = 0.5;
  notprob[1] = 0.2;
  notprob[2] = 0.1;  // sums to 0.8
  CHECK_THROWS_AS(cross_entropy_onehot(notprob, {0}), std::invalid_argument);

  nn::Tensor q({1, 3});
  q[0] = 0.5;
  q[1] = 0.3;
  q[2] = 0.2;
  CHECK_THROWS_AS(cross_entropy(q, {0.5, 0.6, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(cross_entropy(q, {0.5, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(cross_entropy_onehot(q, {5}), std::invalid_argument);
}

TEST_CASE("cross entropy against one-hot targets is nonnegative") {
  nn::RngStream rng(36, 0);
  for (int trial = 0; trial < 100; ++trial) {
    nn::Tensor logits({4, 10});
    for (long i = 0; i < logits.size(); ++i) logits[i] = rng.uniform(-8.0, 8.0);
    nn::Tensor q = softmax(logits);
    std::vector<int> labels = {1, 7, 0, 9};
    CHECK(cross_entropy_onehot(q, labels) >= 0.0);
  }
}

TEST_CASE("softmax rows are valid distributions and shift-invariant") {
  nn::RngStream rng(37, 0);
  nn::Tensor logits({3, 5});
  for (long i = 0; i < logits.size(); ++i) logits[i] = rng.uniform(-3.0, 3.0);
  nn::Tensor q = softmax(logits);
  for (long i = 0; i < 3; ++i) {
    double s = 0.0;
    for (long l = 0; l < 5; ++l) s += q[i * 5 + l];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  nn::Tensor shifted = logits;
  for (long i = 0; i < shifted.size(); ++i) shifted[i] += 100.0;
  nn::Tensor q2 = softmax(shifted);
  for (long i = 0; i < q.size(); ++i) CHECK(q[i] == doctest::Approx(q2[i]).epsilon(1e-12));
}

TEST_CASE("loss gradients match finite differences") {
  nn::RngStream rng(38, 0);
  nn::Tensor u = random_images(2, 12, 12, 2, rng);
  nn::Tensor v = random_images(2, 12, 12, 2, rng);

  std::vector<long> coords;
  nn::RngStream pick(39, 0);
  for (int i = 0; i < 20; ++i)
    coords.push_back(static_cast<long>(pick.next_u64() % static_cast<uint64_t>(v.size())));

  SUBCASE("mse") {
    nn::Tensor g = mse_backward(u, v);
    const double err = testing::max_grad_rel_err(
        [&](const nn::Tensor& t) { return mse(u, t); }, v, g, coords);
    CHECK(err < 1e-6);
  }
  SUBCASE("ssim") {
    nn::Tensor g = ssim_backward(u, v);
    const double err = testing::max_grad_rel_err(
        [&](const nn::Tensor& t) { return ssim(u, t); }, v, g, coords, 1e-5);
    CHECK(err < 1e-4);
  }
  SUBCASE("distortion") {
    nn::Tensor g = distortion_backward(u, v, 0.1);
    const double err = testing::max_grad_rel_err(
        [&](const nn::Tensor& t) { return distortion(u, t, 0.1); }, v, g, coords, 1e-5);
    CHECK(err < 1e-4);
  }
  SUBCASE("softmax cross entropy, one-hot target") {
    nn::Tensor logits({3, 10});
    for (long i = 0; i < logits.size(); ++i) logits[i] = rng.uniform(-2.0, 2.0);
    std::vector<int> labels = {4, 0, 9};
    nn::Tensor g = softmax_ce_onehot_backward(softmax(logits), labels);
    const double err = testing::max_grad_rel_err(
        [&](const nn::Tensor& t) { return cross_entropy_onehot(softmax(t), labels); },
        logits, g);
    CHECK(err < 1e-4);
  }
  SUBCASE("softmax cross entropy, uniform target") {
    nn::Tensor logits({3, 10});
    for (long i = 0; i < logits.size(); ++i) logits[i] = rng.uniform(-2.0, 2.0);
    nn::Tensor g = softmax_ce_uniform_backward(softmax(logits));
    const double err = testing::max_grad_rel_err(
        [&](const nn::Tensor& t) { return cross_entropy_uniform(softmax(t)); }, logits,
        g);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("legitimate loss composes its report") {
  nn::RngStream rng(40, 0);
  nn::Tensor u = random_images(3, 12, 12, 3, rng);
  nn::Tensor v = random_images(3, 12, 12, 3, rng);
  std::vector<int> labels = {0, 4, 9};
  std::vector<nn::Tensor> qs;
  for (int m = 0; m < 3; ++m) {
    nn::Tensor logits({3, 10});
    for (long i = 0; i < logits.size(); ++i) logits[i] = rng.uniform(-2.0, 2.0);
    qs.push_back(softmax(logits));
  }
  const std::vector<double> w = {5.0, 2.0, 1.0};

  SUBCASE("one-hot variant subtracts the leakage term") {
    LossReport rep = legit_loss(u, v, qs, labels, w, 0.1, false);
    REQUIRE(rep.per_adversary_ce.size() == 3);
    double leak = 0.0;
    for (int m = 0; m < 3; ++m) {
      CHECK(rep.per_adversary_ce[static_cast<size_t>(m)] ==
            doctest::Approx(cross_entropy_onehot(qs[static_cast<size_t>(m)], labels))
                .epsilon(1e-12));
      leak += w[static_cast<size_t>(m)] * rep.per_adversary_ce[static_cast<size_t>(m)];
    }
    CHECK(rep.distortion == doctest::Approx(distortion(u, v, 0.1)).epsilon(1e-12));
    CHECK(rep.total == doctest::Approx(rep.distortion - leak / 3.0).epsilon(1e-6));
  }
  SUBCASE("compensation variant adds the uniform-target term") {
    LossReport rep = legit_loss(u, v, qs, labels, w, 0.1, true);
    double leak = 0.0;
    for (int m = 0; m < 3; ++m) {
      CHECK(rep.per_adversary_ce[static_cast<size_t>(m)] ==
            doctest::Approx(cross_entropy_uniform(qs[static_cast<size_t>(m)]))
                .epsilon(1e-12));
      leak += w[static_cast<size_t>(m)] * rep.per_adversary_ce[static_cast<size_t>(m)];
    }
    CHECK(rep.total == doctest::Approx(rep.distortion + leak / 3.0).epsilon(1e-6));
  }
  SUBCASE("zero weight reduces to pure distortion") {
    LossReport rep = legit_loss(u, v, qs, labels, {0.0}, 0.1, false);
    CHECK(rep.total == doctest::Approx(distortion(u, v, 0.1)).epsilon(1e-12));
  }
  SUBCASE("equal per-adversary CE values average to w times c") {
    nn::Tensor unif({3, 10});
    unif.fill(0.1);
    std::vector<nn::Tensor> same = {unif, unif};
    LossReport rep = legit_loss(u, v, same, labels, {5.0}, 0.0, false);
    const double c = cross_entropy_onehot(unif, labels);
    CHECK(rep.total == doctest::Approx(mse(u, v) - 5.0 * c).epsilon(1e-9));
  }
  SUBCASE("single colluded posterior averages over one term") {
    std::vector<nn::Tensor> one = {qs[0]};
    LossReport rep = legit_loss(u, v, one, labels, {5.0}, 0.1, true);
    CHECK(rep.total == doctest::Approx(rep.distortion +
                                       5.0 * cross_entropy_uniform(qs[0]))
                           .epsilon(1e-9));
  }
}

TEST_CASE("uniform-target CE is minimized at the uniform posterior") {
  // along q_t = (1-t) uniform + t onehot the value ln L is the minimum
  const long L = 10;
  double prev = -1.0;
  for (int step = 0; step <= 9; ++step) {
    const double t = step / 10.0;
    nn::Tensor q({1, L});
    for (long l = 0; l < L; ++l) q[l] = (1.0 - t) / L + (l == 2 ? t : 0.0);
    const double h = cross_entropy_uniform(q);
    if (step == 0) {
      CHECK(h == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    } else {
      CHECK(h > prev);
    }
    prev = h;
  }
}

TEST_CASE("legitimate and adversary objectives pull in opposite directions") {
  nn::RngStream rng(41, 0);
  nn::Tensor u = random_images(2, 12, 12, 1, rng);
  nn::Tensor v = random_images(2, 12, 12, 1, rng);
  std::vector<int> labels = {3, 3};

  auto posterior_with_confidence = [&](double p_true) {
    nn::Tensor q({2, 10});
    for (long i = 0; i < 2; ++i)
      for (long l = 0; l < 10; ++l)
        q[i * 10 + l] = (l == 3) ? p_true : (1.0 - p_true) / 9.0;
    return q;
  };

  nn::Tensor sharp = posterior_with_confidence(0.9);   // low H(q, true)
  nn::Tensor blunt = posterior_with_confidence(0.05);  // high H(q, true)
  CHECK(adversary_loss(blunt, labels) > adversary_loss(sharp, labels));

  LossReport rep_sharp = legit_loss(u, v, {sharp}, labels, {5.0}, 0.1, false);
  LossReport rep_blunt = legit_loss(u, v, {blunt}, labels, {5.0}, 0.1, false);
  CHECK(rep_blunt.total < rep_sharp.total);
}

TEST_CASE("adversary loss anchor values") {
  nn::Tensor q({2, 10});
  // row 0: confident and correct; row 1: uniform
  q[0 * 10 + 6] = 1.0;
  for (long l = 0; l < 10; ++l) q[1 * 10 + l] = 0.1;
  std::vector<int> labels = {6, 1};
  const double expect = (0.0 + std::log(10.0)) / 2.0;
  CHECK(adversary_loss(q, labels) == doctest::Approx(expect).epsilon(1e-12));
}
