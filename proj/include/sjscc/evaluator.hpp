#ifndef SJSCC_EVALUATOR_HPP
#define SJSCC_EVALUATOR_HPP

#include <string>
#include <vector>

#include "sjscc/config.hpp"
#include "sjscc/dataio.hpp"
#include "sjscc/trainer.hpp"

namespace sjscc::eval {

/// sqrt(p(1-p)/n), the one-sigma width of a proportion estimate.
double binomial_se(double p, long n);

/// Spearman rank correlation; ties get average ranks.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

/// Metrics of one full pass over an evaluation split at one channel operating
/// point. Accuracies count exact prediction matches over the whole split;
/// ssim/mse are per-image means with their standard errors.
struct PointMetrics {
  double mean_ssim = 0.0;
  double ssim_se = 0.0;
  double mean_mse = 0.0;
  double mse_se = 0.0;
  std::vector<double> solo_accuracy;  // one per adversary
  double mean_solo_accuracy = 0.0;
  double colluded_accuracy = 0.0;  // aggregated-logits accuracy; equals solo when M=1
  long samples = 0;
  ChannelSpec bob_spec, eve_spec;

  double solo_accuracy_se() const { return binomial_se(mean_solo_accuracy, samples); }
  double colluded_accuracy_se() const { return binomial_se(colluded_accuracy, samples); }
};

/// One pass over ds: encode -> Bob channel -> decode for the reconstruction
/// metrics, encode -> Eve channel -> every adversary for the leakage metrics.
/// Model parameters are read-only; channel noise is stochastic, drawn from
/// (config seed, stream_id).
PointMetrics eval_point(train::ModelBundle& bundle, const data::Dataset& ds,
                        const ChannelSpec& bob, const ChannelSpec& eve,
                        const ValidatedConfig& vc, uint64_t stream_id);

struct SweepResult {
  ChannelSpec::Family family = ChannelSpec::Family::Rayleigh;
  double nakagami_m = 1.0;
  std::vector<double> gamma_b_db, gamma_e_db;
  std::vector<PointMetrics> points;
  double accuracy_spearman = 0.0;  // mean solo accuracy against gamma_e
  double accuracy_range = 0.0;     // max - min of mean solo accuracy
  uint64_t config_fp = 0;
};

/// Evaluates one trained bundle across Bob SNRs with the eavesdropper held
/// 5 dB below Bob on the same channel family. family_template fixes the
/// family and fading figure; its SNR field is ignored.
SweepResult snr_sweep(train::ModelBundle& bundle, const data::Dataset& ds,
                      const ChannelSpec& family_template,
                      const std::vector<double>& gamma_b_db,
                      const ValidatedConfig& vc);

/// One trained-and-evaluated ablation cell.
struct AblationRow {
  std::string name;
  int m = 1;
  bool colluding = false;
  double w = 0.0;
  ValidatedConfig vc;
  PointMetrics metrics;
};

/// Secure-minus-insecure contrast for one (M, collusion) setting. Accuracy
/// uses the colluded total in colluding mode, the solo mean otherwise.
struct AblationGap {
  int m = 1;
  bool colluding = false;
  double accuracy_gap = 0.0;  // insecure - secure
  double ssim_gap = 0.0;      // insecure - secure
};

struct AblationReport {
  std::vector<AblationRow> rows;
  std::vector<AblationGap> gaps;
};

/// Trains matched secure (configured w) vs insecure (w=0) pairs for every
/// adversary count up to the configured M, non-colluding and colluding, all
/// from identical seeds, then evaluates each at the training operating point.
AblationReport ablation_suite(const data::Dataset& train_ds,
                              const data::Dataset& eval_ds,
                              const ValidatedConfig& base);

struct SurfaceCell {
  double alpha = 0.0;
  double w = 0.0;
  PointMetrics metrics;
};

struct SurfaceResult {
  std::vector<double> alpha_grid, w_grid;
  std::vector<SurfaceCell> cells;  // row-major over (alpha, w)
  uint64_t config_fp = 0;
};

/// Trains one model per (alpha, w) cell from identical seeds and evaluates
/// each at the training operating point.
SurfaceResult tradeoff_surface(const data::Dataset& train_ds,
                               const data::Dataset& eval_ds,
                               const std::vector<double>& alpha_grid,
                               const std::vector<double>& w_grid,
                               const ValidatedConfig& base);

}  // namespace sjscc::eval

#endif
