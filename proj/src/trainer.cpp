#include "sjscc/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "sjscc/channel.hpp"

namespace sjscc::train {

namespace {

constexpr uint64_t kEncoderStream = 1001;
constexpr uint64_t kDecoderStream = 1002;
constexpr uint64_t kEnsembleStream = 1003;
constexpr uint64_t kBobStream = 1010;
constexpr uint64_t kEveStreamBase = 1020;
constexpr double kPowerTolerance = 1e-6;

void add_into(nn::Tensor& acc, const nn::Tensor& g) {
  for (long i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

std::string record_json(const StepRecord& rec, bool colluding) {
  nlohmann::json j;
  j["step"] = rec.step;
  j["episode"] = rec.episode;
  j["legit"] = {{"total", rec.legit.total},
                {"distortion", rec.legit.distortion},
                {"mse", rec.legit.mse},
                {"ssim", rec.legit.ssim},
                {"leakage_ce", rec.legit.per_adversary_ce}};
  j["adversary_ce"] = rec.adversary_ce;
  if (colluding) j["colluded_ce"] = rec.colluded_ce;
  j["power_error"] = rec.power_error;
  return j.dump();
}

}  // namespace

ModelBundle build_models(const ValidatedConfig& vc) {
  ModelBundle b;
  nn::RngStream enc_rng(vc.cfg.seed, kEncoderStream);
  nn::RngStream dec_rng(vc.cfg.seed, kDecoderStream);
  nn::RngStream ens_rng(vc.cfg.seed, kEnsembleStream);
  b.encoder = codec::build_encoder(vc, enc_rng);
  b.decoder = codec::build_decoder(vc, dec_rng);
  b.ensemble = adv::build_ensemble(vc, ens_rng);
  return b;
}

Trainer::Trainer(const ValidatedConfig& vc)
    : vc_(vc),
      bundle_(build_models(vc)),
      bob_spec_(train_bob_spec(vc)),
      eve_spec_(train_eve_spec(vc)),
      adam_legit_(vc.cfg.learning_rate),
      adam_collude_(vc.cfg.learning_rate),
      rng_bob_(vc.cfg.seed, kBobStream) {
  for (int m = 0; m < vc.cfg.m_eavesdroppers; ++m) {
    adam_adv_.emplace_back(vc.cfg.learning_rate);
    rng_eve_.emplace_back(vc.cfg.seed, kEveStreamBase + static_cast<uint64_t>(m));
  }
}

bool Trainer::colluding_active() const {
  return vc_.cfg.colluding && vc_.cfg.m_eavesdroppers >= 2;
}

std::vector<nn::ParamRef> Trainer::legit_params() {
  auto out = bundle_.encoder.net.params("encoder");
  auto dp = bundle_.decoder.net.params("decoder");
  out.insert(out.end(), dp.begin(), dp.end());
  return out;
}

std::vector<nn::ParamRef> Trainer::collusion_params() {
  return {{"collusion.w", &bundle_.ensemble.weights, &bundle_.ensemble.weights_grad}};
}

obj::LossReport Trainer::legit_step(const data::Batch& batch, double* power_error) {
  const auto& cfg = vc_.cfg;
  const long B = batch.size();
  const long M = cfg.m_eavesdroppers;
  const bool collude = colluding_active();

  auto st = codec::encode(bundle_.encoder, batch.images, cfg.power);
  const nn::Tensor& x = st.norm.x;

  double perr = 0.0;
  for (long i = 0; i < B; ++i)
    perr = std::max(perr, std::abs(channel::sample_power(x, i) - cfg.power));
  if (power_error) *power_error = perr;
  if (!(perr <= kPowerTolerance))
    throw std::runtime_error("trainer: power constraint violated by " +
                             std::to_string(perr) + " at step " + std::to_string(step_));

  const double var_b = channel::snr_db_to_noise_var(bob_spec_.snr_db, cfg.power);
  const double var_e = channel::snr_db_to_noise_var(eve_spec_.snr_db, cfg.power);

  auto gains_b = channel::sample_gains(bob_spec_, cfg.n_t, B, rng_bob_);
  auto y_b = channel::apply_channel(x, gains_b, var_b, rng_bob_);
  auto uhat = codec::decode(bundle_.decoder, y_b);

  std::vector<nn::Tensor> gains_e, logits, probs;
  for (long m = 0; m < M; ++m) {
    gains_e.push_back(channel::sample_gains(eve_spec_, cfg.n_t, B, rng_eve_[m]));
    auto z = channel::apply_channel(x, gains_e.back(), var_e, rng_eve_[m]);
    logits.push_back(adv::adversary_forward(bundle_.ensemble, m, z));
    probs.push_back(obj::softmax(logits.back()));
  }

  std::vector<nn::Tensor> posteriors;
  std::vector<double> w_eff;
  if (collude) {
    posteriors.push_back(obj::softmax(adv::collude_aggregate(logits, bundle_.ensemble.weights)));
    double wsum = 0.0;
    for (long m = 0; m < M; ++m) wsum += vc_.w_of(static_cast<int>(m));
    w_eff.push_back(wsum / static_cast<double>(M));
  } else {
    posteriors = probs;
    for (long m = 0; m < M; ++m) w_eff.push_back(vc_.w_of(static_cast<int>(m)));
  }

  auto rep = obj::legit_loss(batch.images, uhat, posteriors, batch.labels, w_eff,
                             cfg.alpha, cfg.use_alc);
  if (!std::isfinite(rep.total))
    throw std::runtime_error(
        "trainer: non-finite legitimate loss at step " + std::to_string(step_) +
        " (distortion " + std::to_string(rep.distortion) + ")");

  auto grad_uhat = obj::distortion_backward(batch.images, uhat, cfg.alpha);
  auto grad_yb = codec::decode_backward(bundle_.decoder, grad_uhat);
  auto grad_x = channel::apply_channel_backward(gains_b, grad_yb, cfg.n_t, vc_.k);

  // The leakage term is +/- (1/M_eff) sum_m w_m H_m, so each posterior's
  // logits receive the fused softmax CE gradient scaled by that coefficient.
  const double m_eff = static_cast<double>(posteriors.size());
  auto leakage_logit_grad = [&](const nn::Tensor& p, double wm) {
    nn::Tensor g = cfg.use_alc ? obj::softmax_ce_uniform_backward(p)
                               : obj::softmax_ce_onehot_backward(p, batch.labels);
    const double c = (cfg.use_alc ? 1.0 : -1.0) * wm / m_eff;
    for (long i = 0; i < g.size(); ++i) g[i] *= c;
    return g;
  };

  if (collude) {
    auto g_comb = leakage_logit_grad(posteriors[0], w_eff[0]);
    bundle_.ensemble.weights_grad.fill(0.0);
    auto member_grads = adv::collude_backward(logits, bundle_.ensemble.weights, g_comb,
                                              bundle_.ensemble.weights_grad);
    for (long m = 0; m < M; ++m) {
      auto gz = bundle_.ensemble.members[static_cast<size_t>(m)].backward(member_grads[m]);
      add_into(grad_x, channel::apply_channel_backward(gains_e[m], gz, cfg.n_t, vc_.k));
    }
  } else {
    for (long m = 0; m < M; ++m) {
      auto gz = bundle_.ensemble.members[static_cast<size_t>(m)].backward(
          leakage_logit_grad(probs[m], vc_.w_of(static_cast<int>(m))));
      add_into(grad_x, channel::apply_channel_backward(gains_e[m], gz, cfg.n_t, vc_.k));
    }
  }

  codec::encode_backward(bundle_.encoder, st, grad_x);
  auto lp = legit_params();
  adam_legit_.step(lp);
  return rep;
}

std::vector<double> Trainer::adversary_step(const data::Batch& batch,
                                            double* colluded_ce) {
  const auto& cfg = vc_.cfg;
  const long B = batch.size();
  const long M = cfg.m_eavesdroppers;
  const bool collude = colluding_active();

  auto st = codec::encode(bundle_.encoder, batch.images, cfg.power);
  const double var_e = channel::snr_db_to_noise_var(eve_spec_.snr_db, cfg.power);

  std::vector<nn::Tensor> logits, probs;
  std::vector<double> losses;
  for (long m = 0; m < M; ++m) {
    auto gains = channel::sample_gains(eve_spec_, cfg.n_t, B, rng_eve_[m]);
    auto z = channel::apply_channel(st.norm.x, gains, var_e, rng_eve_[m]);
    logits.push_back(adv::adversary_forward(bundle_.ensemble, m, z));
    probs.push_back(obj::softmax(logits.back()));
    losses.push_back(obj::adversary_loss(probs.back(), batch.labels));
    if (!std::isfinite(losses.back()))
      throw std::runtime_error("trainer: non-finite adversary loss (member " +
                               std::to_string(m) + ", step " + std::to_string(step_) + ")");
  }

  std::vector<nn::Tensor> logit_grads;
  for (long m = 0; m < M; ++m)
    logit_grads.push_back(obj::softmax_ce_onehot_backward(probs[m], batch.labels));

  if (colluded_ce) *colluded_ce = 0.0;
  if (collude) {
    auto probs_c = obj::softmax(adv::collude_aggregate(logits, bundle_.ensemble.weights));
    const double ce_c = obj::adversary_loss(probs_c, batch.labels);
    if (!std::isfinite(ce_c))
      throw std::runtime_error("trainer: non-finite colluded loss at step " +
                               std::to_string(step_));
    if (colluded_ce) *colluded_ce = ce_c;
    auto g_c = obj::softmax_ce_onehot_backward(probs_c, batch.labels);
    bundle_.ensemble.weights_grad.fill(0.0);
    auto member = adv::collude_backward(logits, bundle_.ensemble.weights, g_c,
                                        bundle_.ensemble.weights_grad);
    for (long m = 0; m < M; ++m) add_into(logit_grads[m], member[m]);
  }

  for (long m = 0; m < M; ++m) {
    bundle_.ensemble.members[static_cast<size_t>(m)].backward(logit_grads[m]);
    auto mp = bundle_.ensemble.member_params(m);
    adam_adv_[static_cast<size_t>(m)].step(mp);
  }
  if (collude) {
    auto cp = collusion_params();
    adam_collude_.step(cp);
  }
  return losses;
}

StepRecord Trainer::step_pair(const data::Batch& batch) {
  StepRecord rec;
  rec.episode = episode_;
  rec.legit = legit_step(batch, &rec.power_error);
  rec.adversary_ce = adversary_step(batch, &rec.colluded_ce);
  rec.step = ++step_;
  return rec;
}

void Trainer::train(const data::Dataset& ds, const std::string& run_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(run_dir);
  {
    std::ofstream cf(fs::path(run_dir) / "config.snapshot");
    cf << serialize_config(vc_);
  }
  const auto hist_path = fs::path(run_dir) / "history.jsonl";
  std::ofstream hist(hist_path, step_ == 0 ? std::ios::trunc : std::ios::app);
  if (!hist) throw std::runtime_error("trainer: cannot open " + hist_path.string());
  const auto ckpt_path = (fs::path(run_dir) / "checkpoint.bin").string();

  data::BatchIterator it(ds, vc_.cfg.batch_size, vc_.cfg.seed);
  for (long ep = episode_; ep < vc_.cfg.episodes; ++ep) {
    it.start_epoch(ep);
    data::Batch batch;
    while (it.next(batch)) hist << record_json(step_pair(batch), colluding_active()) << '\n';
    hist.flush();
    episode_ = ep + 1;
    if (vc_.cfg.checkpoint_interval > 0 && episode_ % vc_.cfg.checkpoint_interval == 0)
      ckpt::save_archive(ckpt_path, snapshot());
  }
  ckpt::save_archive(ckpt_path, snapshot());
}

ckpt::Archive Trainer::snapshot() {
  ckpt::Archive a;
  a.config = vc_;
  a.episode = episode_;
  a.step = step_;
  ckpt::store_params(a, legit_params());
  ckpt::store_params(a, bundle_.ensemble.params());

  auto put_adam = [&a](const std::string& group, nn::Adam& ad) {
    a.strings["adam." + group + ".t"] = std::to_string(ad.t());
    for (size_t i = 0; i < ad.moments_m().size(); ++i) {
      a.tensors["adam." + group + ".m." + std::to_string(i)] = ad.moments_m()[i];
      a.tensors["adam." + group + ".v." + std::to_string(i)] = ad.moments_v()[i];
    }
  };
  put_adam("legit", adam_legit_);
  for (long m = 0; m < bundle_.ensemble.size(); ++m)
    put_adam("adv" + std::to_string(m), adam_adv_[static_cast<size_t>(m)]);
  put_adam("collude", adam_collude_);

  a.strings["rng.bob"] = rng_bob_.save_state();
  for (long m = 0; m < bundle_.ensemble.size(); ++m)
    a.strings["rng.eve" + std::to_string(m)] = rng_eve_[static_cast<size_t>(m)].save_state();
  return a;
}

void Trainer::restore(const ckpt::Archive& a) {
  if (!(a.config == vc_))
    throw std::runtime_error("trainer: archive was written under a different config");
  episode_ = a.episode;
  step_ = a.step;

  auto lp = legit_params();
  ckpt::load_params(a, lp);
  auto ep = bundle_.ensemble.params();
  ckpt::load_params(a, ep);

  auto get_adam = [&a](const std::string& group, nn::Adam& ad, size_t nparams) {
    ad.set_t(std::stol(a.strings.at("adam." + group + ".t")));
    ad.moments_m().clear();
    ad.moments_v().clear();
    if (ad.t() == 0) return;
    for (size_t i = 0; i < nparams; ++i) {
      ad.moments_m().push_back(a.tensors.at("adam." + group + ".m." + std::to_string(i)));
      ad.moments_v().push_back(a.tensors.at("adam." + group + ".v." + std::to_string(i)));
    }
  };
  get_adam("legit", adam_legit_, lp.size());
  for (long m = 0; m < bundle_.ensemble.size(); ++m)
    get_adam("adv" + std::to_string(m), adam_adv_[static_cast<size_t>(m)],
             bundle_.ensemble.member_params(m).size());
  get_adam("collude", adam_collude_, 1);

  rng_bob_.load_state(a.strings.at("rng.bob"));
  for (long m = 0; m < bundle_.ensemble.size(); ++m)
    rng_eve_[static_cast<size_t>(m)].load_state(a.strings.at("rng.eve" + std::to_string(m)));
}

}  // namespace sjscc::train
