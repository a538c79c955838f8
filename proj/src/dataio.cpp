#include "sjscc/dataio.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "sjscc/nn/rng.hpp"

namespace sjscc::data {

namespace {

constexpr long kRecordsPerFile = 10000;
constexpr long kPixelsPerImage = 32 * 32;
constexpr long kRecordBytes = 1 + 3 * kPixelsPerImage;

std::vector<std::string> split_files(Split split) {
  if (split == Split::Test) return {"test_batch.bin"};
  std::vector<std::string> names;
  for (int i = 1; i <= 5; ++i) names.push_back("data_batch_" + std::to_string(i) + ".bin");
  return names;
}

void read_batch_file(const std::string& path, std::vector<uint8_t>& raw) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw std::runtime_error("dataset file missing: " + path);
  const auto bytes = static_cast<long>(f.tellg());
  if (bytes != kRecordsPerFile * kRecordBytes)
    throw std::runtime_error("dataset file has wrong size (" + std::to_string(bytes) +
                             " bytes): " + path);
  const size_t off = raw.size();
  raw.resize(off + static_cast<size_t>(bytes));
  f.seekg(0);
  f.read(reinterpret_cast<char*>(raw.data() + off), bytes);
  if (!f) throw std::runtime_error("short read on dataset file: " + path);
}

}  // namespace

Dataset load_dataset(const std::string& dir, Split split, long subset_size) {
  Dataset ds;
  ds.split = split;
  ds.dims = {32, 32, 3};
  ds.num_classes = 10;

  std::vector<uint8_t> raw;
  for (const auto& name : split_files(split))
    read_batch_file(dir + "/" + name, raw);
  const long total = static_cast<long>(raw.size()) / kRecordBytes;

  std::vector<long> keep;
  if (subset_size > 0) {
    if (subset_size % ds.num_classes != 0)
      throw std::invalid_argument("subset_size must be a multiple of the class count");
    const long per_class = subset_size / ds.num_classes;
    std::vector<long> quota(static_cast<size_t>(ds.num_classes), per_class);
    for (long r = 0; r < total && static_cast<long>(keep.size()) < subset_size; ++r) {
      const uint8_t label = raw[static_cast<size_t>(r * kRecordBytes)];
      if (label < ds.num_classes && quota[label] > 0) {
        --quota[label];
        keep.push_back(r);
      }
    }
    if (static_cast<long>(keep.size()) != subset_size)
      throw std::runtime_error("split too small for a balanced subset of " +
                               std::to_string(subset_size));
  } else {
    keep.resize(static_cast<size_t>(total));
    for (long r = 0; r < total; ++r) keep[static_cast<size_t>(r)] = r;
  }

  const long n = static_cast<long>(keep.size());
  ds.images = nn::Tensor({n, 32, 32, 3});
  ds.labels.resize(static_cast<size_t>(n));
  double* px = ds.images.data();
  for (long i = 0; i < n; ++i) {
    const uint8_t* rec = raw.data() + keep[static_cast<size_t>(i)] * kRecordBytes;
    const int label = rec[0];
    if (label >= ds.num_classes)
      throw std::runtime_error("label out of range in dataset record");
    ds.labels[static_cast<size_t>(i)] = label;
    const uint8_t* planes = rec + 1;
    double* img = px + i * 3 * kPixelsPerImage;
    for (long p = 0; p < kPixelsPerImage; ++p)
      for (int c = 0; c < 3; ++c)
        img[p * 3 + c] = static_cast<double>(planes[c * kPixelsPerImage + p]) / 255.0;
  }
  return ds;
}

BatchIterator::BatchIterator(const Dataset& ds, int batch_size, uint64_t seed)
    : ds_(&ds), batch_size_(batch_size), seed_(seed) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  start_epoch(0);
}

void BatchIterator::start_epoch(long epoch) {
  epoch_ = epoch;
  cursor_ = 0;
  nn::RngStream rng(seed_, static_cast<uint64_t>(epoch));
  order_ = rng.permutation(ds_->size());
}

long BatchIterator::batches_per_epoch() const {
  const long n = ds_->size();
  if (ds_->split == Split::Train) return n / batch_size_;
  return (n + batch_size_ - 1) / batch_size_;
}

bool BatchIterator::next(Batch& out) {
  const long n = ds_->size();
  long remain = n - cursor_;
  if (ds_->split == Split::Train && remain < batch_size_) return false;
  if (remain <= 0) return false;
  const long b = std::min<long>(batch_size_, remain);

  const ImageDims& d = ds_->dims;
  const long stride = static_cast<long>(d.height) * d.width * d.channels;
  out.images = nn::Tensor({b, d.height, d.width, d.channels});
  out.labels.resize(static_cast<size_t>(b));
  for (long i = 0; i < b; ++i) {
    const long src = order_[static_cast<size_t>(cursor_ + i)];
    std::copy_n(ds_->images.data() + src * stride, stride, out.images.data() + i * stride);
    out.labels[static_cast<size_t>(i)] = ds_->labels[static_cast<size_t>(src)];
  }
  cursor_ += b;
  return true;
}

namespace {

/// Class signature: a base color plus an oriented sinusoidal texture.
struct ClassStyle {
  double base[3];
  double texw[3];
  double angle;
  double freq;
};

ClassStyle class_style(int c) {
  ClassStyle s;
  const double hue = 2.0 * M_PI * c / 10.0;
  for (int ch = 0; ch < 3; ++ch) {
    s.base[ch] = 0.35 + 0.22 * std::sin(hue + 2.0 * M_PI * ch / 3.0);
    s.texw[ch] = 0.55 + 0.45 * std::sin(hue * 1.7 + 2.0 * M_PI * ch / 3.0 + 0.9);
  }
  s.angle = M_PI * c / 10.0;
  s.freq = 1.5 + (c % 5);
  return s;
}

void render_record(uint8_t* rec, int label, nn::RngStream& rng) {
  rec[0] = static_cast<uint8_t>(label);
  const ClassStyle st = class_style(label);
  const double phase = rng.uniform(0.0, 2.0 * M_PI);
  const double amp = rng.uniform(0.22, 0.42);
  double jitter[3];
  for (double& j : jitter) j = rng.uniform(-0.06, 0.06);
  const double cosa = std::cos(st.angle), sina = std::sin(st.angle);

  uint8_t* planes = rec + 1;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const double u = (x * cosa + y * sina) / 32.0;
      const double tex = std::sin(2.0 * M_PI * st.freq * u + phase);
      const double noise = rng.uniform(-0.05, 0.05);
      for (int ch = 0; ch < 3; ++ch) {
        double v = st.base[ch] + jitter[ch] + amp * st.texw[ch] * tex + noise;
        v = std::min(1.0, std::max(0.0, v));
        planes[ch * kPixelsPerImage + y * 32 + x] =
            static_cast<uint8_t>(std::lround(v * 255.0));
      }
    }
  }
}

}  // namespace

void write_synthetic_images(const std::string& dir, uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> names = split_files(Split::Train);
  names.push_back("test_batch.bin");

  std::vector<uint8_t> rec(static_cast<size_t>(kRecordBytes));
  for (size_t fi = 0; fi < names.size(); ++fi) {
    nn::RngStream rng(seed, fi);
    const std::string path = dir + "/" + names[fi];
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write dataset file: " + path);
    for (long r = 0; r < kRecordsPerFile; ++r) {
      render_record(rec.data(), static_cast<int>(r % 10), rng);
      f.write(reinterpret_cast<const char*>(rec.data()), kRecordBytes);
    }
    if (!f) throw std::runtime_error("short write on dataset file: " + path);
  }
}

namespace {

bool has_all_files(const std::string& dir) {
  std::vector<std::string> names = split_files(Split::Train);
  names.push_back("test_batch.bin");
  for (const auto& name : names) {
    std::error_code ec;
    const auto sz = std::filesystem::file_size(dir + "/" + name, ec);
    if (ec || static_cast<long>(sz) != kRecordsPerFile * kRecordBytes) return false;
  }
  return true;
}

}  // namespace

void ensure_synthetic_images(const std::string& dir, uint64_t seed) {
  if (has_all_files(dir)) return;
  write_synthetic_images(dir, seed);
}

std::string resolve_data_dir() {
  if (const char* env = std::getenv("SJSCC_CIFAR_DIR"); env && *env && has_all_files(env))
    return env;
  std::string cache;
  if (const char* env = std::getenv("SJSCC_SYNTH_DIR"); env && *env) {
    cache = env;
  } else {
    const char* home = std::getenv("HOME");
    cache = std::string(home && *home ? home : ".") + "/.cache/sjscc/synth";
  }
  ensure_synthetic_images(cache, 20260816);
  return cache;
}

}  // namespace sjscc::data
