#ifndef SJSCC_CONFIG_HPP
#define SJSCC_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace sjscc {

/// Channel family plus the parameters that select one conditional
/// distribution: SNR in dB, fading figure m (Nakagami only), transmit power.
struct ChannelSpec {
  enum class Family { AWGN, Rayleigh, Nakagami };
  Family family = Family::Rayleigh;
  double snr_db = 20.0;
  double nakagami_m = 1.0;
  double power = 1.0;

  bool operator==(const ChannelSpec&) const = default;
};

std::string family_name(ChannelSpec::Family f);
ChannelSpec::Family family_from_name(const std::string& name);

/// Exact bandwidth-compression ratio k/n.
struct Rational {
  long num = 1;
  long den = 3;
  bool operator==(const Rational&) const = default;
};

Rational parse_rational(const std::string& text);
std::string format_rational(const Rational& r);

struct ImageDims {
  int height = 32;
  int width = 32;
  int channels = 3;
  bool operator==(const ImageDims&) const = default;
};

/// Every tunable of the system. Field defaults follow the operating point
/// used throughout the experiments (w=5, alpha=0.1, n_T=4, k/n=1/3,
/// 200 episodes of batch-128 Adam at 1e-4, trained at 20/15 dB).
struct TrainingConfig {
  int m_eavesdroppers = 1;
  bool colluding = false;
  std::vector<double> w = {5.0};  // one shared value, or one per adversary
  double alpha = 0.1;
  bool use_alc = true;
  Rational k_over_n = {1, 3};
  int n_t = 4;
  int num_classes = 10;
  int batch_size = 128;
  int episodes = 200;
  double learning_rate = 1e-4;
  double snr_train_bob_db = 20.0;
  double snr_train_eve_db = 15.0;
  double power = 1.0;
  uint64_t seed = 1;
  int checkpoint_interval = 0;  // episodes between checkpoints; 0 = end only
  long subset_train = 0;        // 0 = full split
  long subset_eval = 0;

  bool operator==(const TrainingConfig&) const = default;
};

/// Config with derived quantities filled in; immutable after validation and
/// safe to share read-only across workers.
struct ValidatedConfig {
  TrainingConfig cfg;
  ImageDims dims;
  long n = 0;  // source bandwidth H*W*C
  long k = 0;  // channel uses per image
  int num_classes = 10;

  double w_of(int m) const {
    return cfg.w.size() == 1 ? cfg.w[0] : cfg.w[static_cast<size_t>(m)];
  }
  bool operator==(const ValidatedConfig&) const = default;
};

/// Checks consistency and fills n, k, L. Throws std::invalid_argument on
/// inconsistent settings (k/n outside (0,1), no eavesdroppers, negative
/// weights, sub-physical Nakagami m, ...).
ValidatedConfig validate_config(const TrainingConfig& cfg, const ImageDims& dims);

/// Key-value config file (nested [section] blocks) mapping 1:1 onto
/// TrainingConfig + ImageDims fields. Unknown keys are rejected.
struct ParsedConfigFile {
  TrainingConfig cfg;
  ImageDims dims;
};
ParsedConfigFile parse_config_text(const std::string& text);
ParsedConfigFile load_config_file(const std::string& path);

/// Round-trip-exact serialization (doubles printed with full precision).
std::string serialize_config(const ValidatedConfig& vc);
ValidatedConfig parse_validated_config(const std::string& text);

/// Reduced preset for desk-scale runs: 5000 balanced training images,
/// 2000 evaluation images, 20 episodes, smaller batches and a faster
/// learning rate to compensate for the shorter schedule.
void apply_desk_preset(TrainingConfig& cfg);

/// Training-time channel specs (fading is always Rayleigh during training).
ChannelSpec train_bob_spec(const ValidatedConfig& vc);
ChannelSpec train_eve_spec(const ValidatedConfig& vc);

uint64_t config_fingerprint(const ValidatedConfig& vc);

}  // namespace sjscc

#endif
