#ifndef SJSCC_NN_TENSOR_HPP
#define SJSCC_NN_TENSOR_HPP

#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

namespace sjscc::nn {

/// 64-byte aligned allocation keeps SIMD peel patterns (and therefore
/// floating-point summation order in vectorized reductions) a function of
/// buffer size alone, independent of heap history. Bitwise reproducibility
/// of training and of checkpoint resumes depends on this.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr size_t kAlign = 64;

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(size_t n) {
    if (n == 0) return nullptr;
    const size_t bytes = (n * sizeof(T) + kAlign - 1) / kAlign * kAlign;
    void* p = std::aligned_alloc(kAlign, bytes);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, size_t) { std::free(p); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <class T>
using aligned_vector = std::vector<T, AlignedAllocator<T>>;

/// Dense row-major tensor of doubles. Image batches use NHWC layout.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<long> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(count(shape_)), 0.0);
  }

  Tensor(std::initializer_list<long> shape) : Tensor(std::vector<long>(shape)) {}

  static Tensor zeros(std::vector<long> shape) { return Tensor(std::move(shape)); }

  long size() const { return static_cast<long>(data_.size()); }
  int ndim() const { return static_cast<int>(shape_.size()); }
  const std::vector<long>& shape() const { return shape_; }

  long dim(int i) const { return shape_.at(static_cast<size_t>(i)); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](long i) { return data_[static_cast<size_t>(i)]; }
  double operator[](long i) const { return data_[static_cast<size_t>(i)]; }

  void fill(double v) { data_.assign(data_.size(), v); }

  /// Reinterpret with a new shape; element count must match.
  void reshape(std::vector<long> shape) {
    if (count(shape) != size())
      throw std::invalid_argument("Tensor::reshape: element count mismatch");
    shape_ = std::move(shape);
  }

  Tensor reshaped(std::vector<long> shape) const {
    Tensor t = *this;
    t.reshape(std::move(shape));
    return t;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape_.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape_[i]);
    return s + ")";
  }

 private:
  static long count(const std::vector<long>& shape) {
    long n = 1;
    for (long d : shape) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  std::vector<long> shape_;
  aligned_vector<double> data_;
};

/// 64-bit FNV-1a over raw bytes; used to fingerprint parameter sets.
inline uint64_t fnv1a64(const void* bytes, size_t len, uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t tensor_hash(const Tensor& t, uint64_t h = 1469598103934665603ull) {
  return fnv1a64(t.data(), sizeof(double) * static_cast<size_t>(t.size()), h);
}

}  // namespace sjscc::nn

#endif
