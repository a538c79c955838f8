#include "sjscc/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace sjscc::ckpt {

namespace {

constexpr char kMagic[8] = {'S', 'J', 'S', 'C', 'C', 'A', 'R', '1'};

template <class T>
void put(std::string& out, T v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_bytes(std::string& out, const std::string& s) {
  put<uint64_t>(out, s.size());
  out.append(s);
}

struct Cursor {
  const char* p;
  const char* end;

  void need(size_t n) const {
    if (static_cast<size_t>(end - p) < n)
      throw std::runtime_error("checkpoint: truncated archive");
  }
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, p, sizeof(T));
    p += sizeof(T);
    return v;
  }
  std::string get_bytes() {
    const uint64_t n = get<uint64_t>();
    need(n);
    std::string s(p, p + n);
    p += n;
    return s;
  }
};

}  // namespace

void save_archive(const std::string& path, const Archive& a) {
  std::string body;
  body.append(kMagic, sizeof(kMagic));
  put_bytes(body, serialize_config(a.config));
  put<int64_t>(body, a.episode);
  put<int64_t>(body, a.step);

  put<uint64_t>(body, a.tensors.size());
  for (const auto& [name, t] : a.tensors) {
    put_bytes(body, name);
    put<uint32_t>(body, static_cast<uint32_t>(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i) put<int64_t>(body, t.dim(i));
    body.append(reinterpret_cast<const char*>(t.data()),
                sizeof(double) * static_cast<size_t>(t.size()));
  }
  put<uint64_t>(body, a.strings.size());
  for (const auto& [name, s] : a.strings) {
    put_bytes(body, name);
    put_bytes(body, s);
  }
  put<uint64_t>(body, nn::fnv1a64(body.data(), body.size()));

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + tmp);
    f.write(body.data(), static_cast<long>(body.size()));
    if (!f) throw std::runtime_error("checkpoint: short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Archive load_archive(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  const auto size = static_cast<size_t>(f.tellg());
  std::string body(size, '\0');
  f.seekg(0);
  f.read(body.data(), static_cast<long>(size));
  if (!f) throw std::runtime_error("checkpoint: short read from " + path);

  if (size < sizeof(kMagic) + sizeof(uint64_t) ||
      std::memcmp(body.data(), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: not a recognized archive: " + path);

  uint64_t stored;
  std::memcpy(&stored, body.data() + size - sizeof(uint64_t), sizeof(uint64_t));
  if (nn::fnv1a64(body.data(), size - sizeof(uint64_t)) != stored)
    throw std::runtime_error("checkpoint: fingerprint mismatch (corrupt archive)");

  Cursor c{body.data() + sizeof(kMagic), body.data() + size - sizeof(uint64_t)};
  Archive a;
  a.config = parse_validated_config(c.get_bytes());
  a.episode = c.get<int64_t>();
  a.step = c.get<int64_t>();

  const uint64_t ntensors = c.get<uint64_t>();
  for (uint64_t i = 0; i < ntensors; ++i) {
    const std::string name = c.get_bytes();
    const uint32_t ndim = c.get<uint32_t>();
    std::vector<long> dims;
    for (uint32_t d = 0; d < ndim; ++d) dims.push_back(static_cast<long>(c.get<int64_t>()));
    nn::Tensor t(dims);
    c.need(sizeof(double) * static_cast<size_t>(t.size()));
    std::memcpy(t.data(), c.p, sizeof(double) * static_cast<size_t>(t.size()));
    c.p += sizeof(double) * static_cast<size_t>(t.size());
    a.tensors.emplace(name, std::move(t));
  }
  const uint64_t nstrings = c.get<uint64_t>();
  for (uint64_t i = 0; i < nstrings; ++i) {
    const std::string name = c.get_bytes();
    a.strings.emplace(name, c.get_bytes());
  }
  return a;
}

void load_params(const Archive& a, const std::vector<nn::ParamRef>& params) {
  for (const auto& p : params) {
    auto it = a.tensors.find(p.name);
    if (it == a.tensors.end())
      throw std::runtime_error("checkpoint: archive is missing parameter '" + p.name + "'");
    if (!it->second.same_shape(*p.value))
      throw std::runtime_error("checkpoint: shape mismatch for parameter '" + p.name +
                               "': archive " + it->second.shape_str() + " vs model " +
                               p.value->shape_str());
    *p.value = it->second;
  }
}

void store_params(Archive& a, const std::vector<nn::ParamRef>& params) {
  for (const auto& p : params) a.tensors[p.name] = *p.value;
}

}  // namespace sjscc::ckpt
