#ifndef SJSCC_TRAINER_HPP
#define SJSCC_TRAINER_HPP

#include <string>
#include <vector>

#include "sjscc/adversary.hpp"
#include "sjscc/checkpoint.hpp"
#include "sjscc/codec.hpp"
#include "sjscc/config.hpp"
#include "sjscc/dataio.hpp"
#include "sjscc/nn/adam.hpp"
#include "sjscc/objectives.hpp"

namespace sjscc::train {

/// The three trainable components, independently initialized from the
/// config seed so any one can be rebuilt without disturbing the others.
struct ModelBundle {
  codec::Encoder encoder;
  codec::Decoder decoder;
  adv::Ensemble ensemble;
};

ModelBundle build_models(const ValidatedConfig& vc);

/// One alternating step's record; history.jsonl holds one line per record.
struct StepRecord {
  long step = 0;
  long episode = 0;
  obj::LossReport legit;
  std::vector<double> adversary_ce;
  double colluded_ce = 0.0;  // meaningful only in colluding mode
  double power_error = 0.0;  // max per-sample deviation from the power budget
};

/// Alternating minimax trainer: each step runs one gradient update of the
/// legitimate pair against the frozen adversaries, then one update of every
/// adversary (plus collusion weights) against the frozen pair. Training
/// always transmits over Rayleigh fading at the configured training SNRs.
class Trainer {
 public:
  explicit Trainer(const ValidatedConfig& vc);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  /// Updates encoder and decoder only. Audits the power constraint on the
  /// transmitted batch; throws on non-finite loss or a power violation.
  obj::LossReport legit_step(const data::Batch& batch, double* power_error = nullptr);

  /// Updates every adversary (and collusion weights when colluding) only.
  /// Returns each member's cross-entropy on its own received signal.
  std::vector<double> adversary_step(const data::Batch& batch,
                                     double* colluded_ce = nullptr);

  /// legit_step followed by adversary_step on the same batch.
  StepRecord step_pair(const data::Batch& batch);

  /// Runs the remaining episodes, appending one history record per step and
  /// checkpointing at the configured interval and at the end. Writes
  /// config.snapshot, history.jsonl and checkpoint.bin under run_dir.
  void train(const data::Dataset& ds, const std::string& run_dir);

  /// Full training state: parameters, optimizer moments, channel rng states
  /// and schedule position.
  ckpt::Archive snapshot();

  /// Inverse of snapshot. The archive must carry the same config.
  void restore(const ckpt::Archive& a);

  ModelBundle& models() { return bundle_; }
  const ValidatedConfig& config() const { return vc_; }
  long episode() const { return episode_; }
  long step() const { return step_; }

 private:
  bool colluding_active() const;
  std::vector<nn::ParamRef> legit_params();
  std::vector<nn::ParamRef> collusion_params();

  ValidatedConfig vc_;
  ModelBundle bundle_;
  ChannelSpec bob_spec_, eve_spec_;
  nn::Adam adam_legit_;
  std::vector<nn::Adam> adam_adv_;
  nn::Adam adam_collude_;
  nn::RngStream rng_bob_;
  std::vector<nn::RngStream> rng_eve_;
  long episode_ = 0;
  long step_ = 0;
};

}  // namespace sjscc::train

#endif
