#ifndef SJSCC_CHECKPOINT_HPP
#define SJSCC_CHECKPOINT_HPP

#include <map>
#include <string>
#include <vector>

#include "sjscc/config.hpp"
#include "sjscc/nn/layers.hpp"
#include "sjscc/nn/tensor.hpp"

namespace sjscc::ckpt {

/// Self-describing training archive: the config that built the model, the
/// position in the schedule, every named parameter/moment tensor, and named
/// opaque strings (rng states, counters).
struct Archive {
  ValidatedConfig config;
  long episode = 0;
  long step = 0;
  std::map<std::string, nn::Tensor> tensors;
  std::map<std::string, std::string> strings;
};

/// Binary write with an integrity fingerprint, atomic via temp-then-rename.
void save_archive(const std::string& path, const Archive& a);

/// Rejects unknown layout, truncation and fingerprint mismatch.
Archive load_archive(const std::string& path);

/// Copies archive tensors into live parameters by name. Throws when a
/// parameter is missing from the archive or shapes disagree.
void load_params(const Archive& a, const std::vector<nn::ParamRef>& params);

/// Records live parameters into the archive under their names.
void store_params(Archive& a, const std::vector<nn::ParamRef>& params);

}  // namespace sjscc::ckpt

#endif
