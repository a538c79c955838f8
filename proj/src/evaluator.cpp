#include "sjscc/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

#include "sjscc/adversary.hpp"
#include "sjscc/channel.hpp"
#include "sjscc/codec.hpp"
#include "sjscc/objectives.hpp"

namespace sjscc::eval {

namespace {

constexpr uint64_t kSweepStreamBase = 2000;
constexpr uint64_t kAblationStreamBase = 3000;
constexpr uint64_t kSurfaceStreamBase = 4000;

nn::Tensor image_row(const nn::Tensor& t, long i) {
  nn::Tensor out({1, t.dim(1), t.dim(2), t.dim(3)});
  const long per = out.size();
  std::copy(t.data() + i * per, t.data() + (i + 1) * per, out.data());
  return out;
}

/// Running mean and standard error over per-image scores.
struct Welford {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double se() const {
    if (n < 2) return 0.0;
    const double var = m2 / static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
  }
};

std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t t = i; t <= j; ++t) r[idx[t]] = avg;
    i = j + 1;
  }
  return r;
}

void check_compatible(const train::ModelBundle& bundle, const data::Dataset& ds,
                      const ChannelSpec& bob, const ChannelSpec& eve,
                      const ValidatedConfig& vc) {
  if (!(ds.dims == vc.dims))
    throw std::invalid_argument("eval_point: dataset dims do not match the config");
  if (bundle.encoder.k != vc.k || bundle.decoder.k != vc.k)
    throw std::invalid_argument("eval_point: bundle was built for a different k");
  if (bundle.ensemble.size() != vc.cfg.m_eavesdroppers)
    throw std::invalid_argument("eval_point: bundle has a different adversary count");
  if (bob.power != vc.cfg.power || eve.power != vc.cfg.power)
    throw std::invalid_argument("eval_point: channel power differs from the config");
}

/// Runs every remaining episode of a freshly built trainer without writing
/// run artifacts; ablation and surface cells keep their output to the report.
void run_cell_training(train::Trainer& t, const data::Dataset& ds) {
  data::BatchIterator it(ds, t.config().cfg.batch_size, t.config().cfg.seed);
  data::Batch b;
  for (long ep = 0; ep < t.config().cfg.episodes; ++ep) {
    it.start_epoch(ep);
    while (it.next(b)) t.step_pair(b);
  }
}

std::vector<double> cell_weights(const ValidatedConfig& base, int m, bool secure) {
  if (!secure) return {0.0};
  if (base.cfg.w.size() == 1) return base.cfg.w;
  std::vector<double> w(base.cfg.w.begin(), base.cfg.w.begin() + m);
  return w;
}

}  // namespace

double binomial_se(double p, long n) {
  if (n <= 0) return 0.0;
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("spearman_rho: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("spearman_rho: need at least 2 points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

PointMetrics eval_point(train::ModelBundle& bundle, const data::Dataset& ds,
                        const ChannelSpec& bob, const ChannelSpec& eve,
                        const ValidatedConfig& vc, uint64_t stream_id) {
  check_compatible(bundle, ds, bob, eve, vc);

  PointMetrics pm;
  pm.bob_spec = bob;
  pm.eve_spec = eve;
  const int M = vc.cfg.m_eavesdroppers;
  pm.solo_accuracy.assign(static_cast<size_t>(M), 0.0);

  const double var_b = channel::snr_db_to_noise_var(bob.snr_db, vc.cfg.power);
  const double var_e = channel::snr_db_to_noise_var(eve.snr_db, vc.cfg.power);
  nn::RngStream rng(vc.cfg.seed, stream_id);

  Welford ssim_acc, mse_acc;
  std::vector<long> solo_correct(static_cast<size_t>(M), 0);
  long colluded_correct = 0;

  data::BatchIterator it(ds, vc.cfg.batch_size, vc.cfg.seed);
  it.start_epoch(0);
  data::Batch b;
  while (it.next(b)) {
    const long B = b.size();
    auto st = codec::encode(bundle.encoder, b.images, vc.cfg.power);

    auto gains_b = channel::sample_gains(bob, vc.cfg.n_t, B, rng);
    auto y = channel::apply_channel(st.norm.x, gains_b, var_b, rng);
    auto uhat = codec::decode(bundle.decoder, y);
    for (long i = 0; i < B; ++i) {
      auto u_i = image_row(b.images, i);
      auto uhat_i = image_row(uhat, i);
      ssim_acc.add(obj::ssim(u_i, uhat_i));
      mse_acc.add(obj::mse(u_i, uhat_i));
    }

    std::vector<nn::Tensor> logits;
    logits.reserve(static_cast<size_t>(M));
    for (int m = 0; m < M; ++m) {
      auto gains_e = channel::sample_gains(eve, vc.cfg.n_t, B, rng);
      auto z = channel::apply_channel(st.norm.x, gains_e, var_e, rng);
      logits.push_back(adv::adversary_forward(bundle.ensemble, m, z));
      const auto preds = adv::predict(obj::softmax(logits.back()));
      for (long i = 0; i < B; ++i)
        if (preds[static_cast<size_t>(i)] == b.labels[static_cast<size_t>(i)])
          ++solo_correct[static_cast<size_t>(m)];
    }
    auto combined = adv::collude_aggregate(logits, bundle.ensemble.weights);
    const auto cpreds = adv::predict(obj::softmax(combined));
    for (long i = 0; i < B; ++i)
      if (cpreds[static_cast<size_t>(i)] == b.labels[static_cast<size_t>(i)])
        ++colluded_correct;

    pm.samples += B;
  }

  if (pm.samples == 0) throw std::invalid_argument("eval_point: empty dataset");

  pm.mean_ssim = ssim_acc.mean;
  pm.ssim_se = ssim_acc.se();
  pm.mean_mse = mse_acc.mean;
  pm.mse_se = mse_acc.se();
  const double n = static_cast<double>(pm.samples);
  for (int m = 0; m < M; ++m) {
    pm.solo_accuracy[static_cast<size_t>(m)] =
        static_cast<double>(solo_correct[static_cast<size_t>(m)]) / n;
    pm.mean_solo_accuracy += pm.solo_accuracy[static_cast<size_t>(m)];
  }
  pm.mean_solo_accuracy /= static_cast<double>(M);
  pm.colluded_accuracy = static_cast<double>(colluded_correct) / n;
  return pm;
}

SweepResult snr_sweep(train::ModelBundle& bundle, const data::Dataset& ds,
                      const ChannelSpec& family_template,
                      const std::vector<double>& gamma_b_db,
                      const ValidatedConfig& vc) {
  if (gamma_b_db.empty()) throw std::invalid_argument("snr_sweep: empty SNR list");

  SweepResult r;
  r.family = family_template.family;
  r.nakagami_m = family_template.nakagami_m;
  r.config_fp = config_fingerprint(vc);
  for (size_t i = 0; i < gamma_b_db.size(); ++i) {
    ChannelSpec bob = family_template;
    bob.snr_db = gamma_b_db[i];
    bob.power = vc.cfg.power;
    ChannelSpec eve = bob;
    eve.snr_db = gamma_b_db[i] - 5.0;
    r.gamma_b_db.push_back(bob.snr_db);
    r.gamma_e_db.push_back(eve.snr_db);
    r.points.push_back(
        eval_point(bundle, ds, bob, eve, vc, kSweepStreamBase + i));
  }

  std::vector<double> acc;
  acc.reserve(r.points.size());
  for (const auto& p : r.points) acc.push_back(p.mean_solo_accuracy);
  r.accuracy_spearman =
      acc.size() >= 2 ? spearman_rho(r.gamma_e_db, acc) : 0.0;
  const auto [lo, hi] = std::minmax_element(acc.begin(), acc.end());
  r.accuracy_range = *hi - *lo;
  return r;
}

AblationReport ablation_suite(const data::Dataset& train_ds,
                              const data::Dataset& eval_ds,
                              const ValidatedConfig& base) {
  AblationReport rep;
  uint64_t stream = kAblationStreamBase;
  for (bool colluding : {false, true}) {
    for (int m = 1; m <= base.cfg.m_eavesdroppers; ++m) {
      if (colluding && m == 1) continue;
      AblationGap gap;
      gap.m = m;
      gap.colluding = colluding;
      double acc[2] = {0.0, 0.0}, ssim[2] = {0.0, 0.0};
      int side = 0;
      for (bool secure : {true, false}) {
        AblationRow row;
        row.m = m;
        row.colluding = colluding;
        TrainingConfig cfg = base.cfg;
        cfg.m_eavesdroppers = m;
        cfg.colluding = colluding;
        cfg.w = cell_weights(base, m, secure);
        row.w = cfg.w[0];
        row.name = std::string(secure ? "secure" : "insecure") + "_m" +
                   std::to_string(m) + (colluding ? "_colluding" : "");
        row.vc = validate_config(cfg, base.dims);

        train::Trainer trainer(row.vc);
        run_cell_training(trainer, train_ds);
        row.metrics =
            eval_point(trainer.models(), eval_ds, train_bob_spec(row.vc),
                       train_eve_spec(row.vc), row.vc, stream++);

        acc[side] = colluding ? row.metrics.colluded_accuracy
                              : row.metrics.mean_solo_accuracy;
        ssim[side] = row.metrics.mean_ssim;
        ++side;
        rep.rows.push_back(std::move(row));
      }
      gap.accuracy_gap = acc[1] - acc[0];
      gap.ssim_gap = ssim[1] - ssim[0];
      rep.gaps.push_back(gap);
    }
  }
  return rep;
}

SurfaceResult tradeoff_surface(const data::Dataset& train_ds,
                               const data::Dataset& eval_ds,
                               const std::vector<double>& alpha_grid,
                               const std::vector<double>& w_grid,
                               const ValidatedConfig& base) {
  if (alpha_grid.empty() || w_grid.empty())
    throw std::invalid_argument("tradeoff_surface: empty grid");

  SurfaceResult r;
  r.alpha_grid = alpha_grid;
  r.w_grid = w_grid;
  r.config_fp = config_fingerprint(base);
  uint64_t stream = kSurfaceStreamBase;
  for (double a : alpha_grid) {
    for (double w : w_grid) {
      SurfaceCell cell;
      cell.alpha = a;
      cell.w = w;
      TrainingConfig cfg = base.cfg;
      cfg.alpha = a;
      cfg.w = {w};
      const auto vc = validate_config(cfg, base.dims);

      train::Trainer trainer(vc);
      run_cell_training(trainer, train_ds);
      cell.metrics = eval_point(trainer.models(), eval_ds, train_bob_spec(vc),
                                train_eve_spec(vc), vc, stream++);
      r.cells.push_back(std::move(cell));
    }
  }
  return r;
}

}  // namespace sjscc::eval
