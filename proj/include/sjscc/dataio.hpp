#ifndef SJSCC_DATAIO_HPP
#define SJSCC_DATAIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sjscc/config.hpp"
#include "sjscc/nn/tensor.hpp"

namespace sjscc::data {

enum class Split { Train, Test };

/// Full split held in memory: pixels as (N, H, W, C) doubles in [0,1] plus
/// the sensitive class label of every image.
struct Dataset {
  nn::Tensor images;
  std::vector<int> labels;
  Split split = Split::Train;
  ImageDims dims;
  int num_classes = 10;

  long size() const { return static_cast<long>(labels.size()); }
};

/// Reads the standard binary batch files under `dir` (five train files or the
/// single test file, 10000 records each, 1 label byte + 3072 channel-planar
/// pixel bytes per record). Pixels are rescaled to [0,1]. A nonzero
/// subset_size keeps a class-balanced prefix: the first subset_size/10 images
/// of each class in file order.
Dataset load_dataset(const std::string& dir, Split split, long subset_size = 0);

struct Batch {
  nn::Tensor images;  // (B, H, W, C)
  std::vector<int> labels;

  long size() const { return static_cast<long>(labels.size()); }
};

/// Epoch-wise batch stream. Every epoch visits a fresh permutation derived
/// from (seed, epoch) alone, so identical seeds reproduce identical batch
/// order. Train splits drop the final partial batch; test splits keep it so
/// every image is seen exactly once per pass.
class BatchIterator {
 public:
  BatchIterator(const Dataset& ds, int batch_size, uint64_t seed);

  void start_epoch(long epoch);
  bool next(Batch& out);
  long batches_per_epoch() const;
  long epoch() const { return epoch_; }

 private:
  const Dataset* ds_;
  int batch_size_;
  uint64_t seed_;
  long epoch_ = 0;
  long cursor_ = 0;
  std::vector<long> order_;
};

/// Writes a synthetic ten-class image set in the exact binary batch layout
/// the loader expects (six files, 10000 records each). Classes differ in
/// mean color and in the orientation/frequency of a sinusoidal texture;
/// per-image phase, color jitter and pixel noise provide within-class
/// variation. Deterministic given the seed.
void write_synthetic_images(const std::string& dir, uint64_t seed);

/// write_synthetic_images, skipped when the six files already exist with the
/// correct sizes.
void ensure_synthetic_images(const std::string& dir, uint64_t seed);

/// Directory the tools read data from: $SJSCC_CIFAR_DIR when it holds the six
/// batch files, otherwise a synthesized cache under $SJSCC_SYNTH_DIR (default
/// ~/.cache/sjscc/synth) that is generated on first use.
std::string resolve_data_dir();

}  // namespace sjscc::data

#endif
