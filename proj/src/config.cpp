#include "sjscc/config.hpp"

#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "sjscc/nn/tensor.hpp"

namespace sjscc {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_double(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw std::invalid_argument("config: bad number for '" + key + "': " + s);
  }
}

long to_long(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw std::invalid_argument("config: bad integer for '" + key + "': " + s);
  }
}

bool to_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "': " + s);
}

std::vector<double> to_double_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), key));
  if (out.empty()) throw std::invalid_argument("config: empty list for '" + key + "'");
  return out;
}

std::string format_double_list(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_double(v[i]);
  return s;
}

}  // namespace

std::string family_name(ChannelSpec::Family f) {
  switch (f) {
    case ChannelSpec::Family::AWGN: return "awgn";
    case ChannelSpec::Family::Rayleigh: return "rayleigh";
    case ChannelSpec::Family::Nakagami: return "nakagami";
  }
  throw std::logic_error("family_name: unreachable");
}

ChannelSpec::Family family_from_name(const std::string& name) {
  if (name == "awgn") return ChannelSpec::Family::AWGN;
  if (name == "rayleigh") return ChannelSpec::Family::Rayleigh;
  if (name == "nakagami") return ChannelSpec::Family::Nakagami;
  throw std::invalid_argument("unknown channel family: " + name);
}

Rational parse_rational(const std::string& text) {
  const std::string s = trim(text);
  size_t slash = s.find('/');
  if (slash == std::string::npos)
    throw std::invalid_argument("rational must be written p/q: " + text);
  Rational r;
  r.num = to_long(trim(s.substr(0, slash)), "k_over_n");
  r.den = to_long(trim(s.substr(slash + 1)), "k_over_n");
  if (r.den == 0) throw std::invalid_argument("rational with zero denominator: " + text);
  return r;
}

std::string format_rational(const Rational& r) {
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

ValidatedConfig validate_config(const TrainingConfig& cfg, const ImageDims& dims) {
  if (cfg.m_eavesdroppers < 1)
    throw std::invalid_argument("config: at least one eavesdropper is required (M >= 1)");
  if (cfg.k_over_n.num <= 0 || cfg.k_over_n.den <= 0 ||
      cfg.k_over_n.num >= cfg.k_over_n.den)
    throw std::invalid_argument("config: k_over_n must lie strictly inside (0, 1)");
  if (cfg.w.empty() ||
      (cfg.w.size() != 1 && cfg.w.size() != static_cast<size_t>(cfg.m_eavesdroppers)))
    throw std::invalid_argument("config: w must hold one shared value or one per adversary");
  for (double wi : cfg.w)
    if (!(wi >= 0.0) || !std::isfinite(wi))
      throw std::invalid_argument("config: leakage weight w must be finite and >= 0");
  if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha))
    throw std::invalid_argument("config: alpha must be finite and >= 0");
  if (cfg.n_t < 1) throw std::invalid_argument("config: n_t must be positive");
  if (cfg.batch_size < 1) throw std::invalid_argument("config: batch_size must be positive");
  if (cfg.episodes < 1) throw std::invalid_argument("config: episodes must be positive");
  if (!(cfg.learning_rate > 0.0))
    throw std::invalid_argument("config: learning_rate must be positive");
  if (!(cfg.power > 0.0)) throw std::invalid_argument("config: power must be positive");
  if (cfg.num_classes < 2) throw std::invalid_argument("config: need at least two classes");
  if (!std::isfinite(cfg.snr_train_bob_db) || !std::isfinite(cfg.snr_train_eve_db))
    throw std::invalid_argument("config: training SNRs must be finite");
  if (dims.height < 1 || dims.width < 1 || dims.channels < 1)
    throw std::invalid_argument("config: bad image dimensions");
  if (cfg.subset_train < 0 || cfg.subset_eval < 0)
    throw std::invalid_argument("config: subset sizes must be >= 0");

  ValidatedConfig vc;
  vc.cfg = cfg;
  vc.dims = dims;
  vc.n = static_cast<long>(dims.height) * dims.width * dims.channels;
  vc.k = (vc.n * cfg.k_over_n.num) / cfg.k_over_n.den;  // floor(n * k/n)
  vc.num_classes = cfg.num_classes;
  if (vc.k < 1) throw std::invalid_argument("config: derived k must be >= 1");
  return vc;
}

namespace {

using KvMap = std::map<std::string, std::string>;

KvMap flatten_ini(const std::string& text) {
  KvMap kv;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: bad section header at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(lineno));
    std::string key = section + "." + trim(line.substr(0, eq));
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace

ParsedConfigFile parse_config_text(const std::string& text) {
  KvMap kv = flatten_ini(text);
  ParsedConfigFile out;
  TrainingConfig& c = out.cfg;
  ImageDims& d = out.dims;

  auto take = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    return &it->second;
  };
  auto consume = [&](const std::string& key) { kv.erase(key); };

  if (auto* v = take("model.n_t")) c.n_t = static_cast<int>(to_long(*v, "n_t"));
  consume("model.n_t");
  if (auto* v = take("model.k_over_n")) c.k_over_n = parse_rational(*v);
  consume("model.k_over_n");
  if (auto* v = take("model.num_classes"))
    c.num_classes = static_cast<int>(to_long(*v, "num_classes"));
  consume("model.num_classes");

  if (auto* v = take("channel.power")) c.power = to_double(*v, "power");
  consume("channel.power");
  if (auto* v = take("channel.snr_train_bob_db"))
    c.snr_train_bob_db = to_double(*v, "snr_train_bob_db");
  consume("channel.snr_train_bob_db");
  if (auto* v = take("channel.snr_train_eve_db"))
    c.snr_train_eve_db = to_double(*v, "snr_train_eve_db");
  consume("channel.snr_train_eve_db");

  if (auto* v = take("adversary.count"))
    c.m_eavesdroppers = static_cast<int>(to_long(*v, "count"));
  consume("adversary.count");
  if (auto* v = take("adversary.colluding")) c.colluding = to_bool(*v, "colluding");
  consume("adversary.colluding");
  if (auto* v = take("adversary.w")) c.w = to_double_list(*v, "w");
  consume("adversary.w");

  if (auto* v = take("train.alpha")) c.alpha = to_double(*v, "alpha");
  consume("train.alpha");
  if (auto* v = take("train.use_alc")) c.use_alc = to_bool(*v, "use_alc");
  consume("train.use_alc");
  if (auto* v = take("train.batch_size"))
    c.batch_size = static_cast<int>(to_long(*v, "batch_size"));
  consume("train.batch_size");
  if (auto* v = take("train.episodes")) c.episodes = static_cast<int>(to_long(*v, "episodes"));
  consume("train.episodes");
  if (auto* v = take("train.learning_rate")) c.learning_rate = to_double(*v, "learning_rate");
  consume("train.learning_rate");
  if (auto* v = take("train.seed")) c.seed = static_cast<uint64_t>(to_long(*v, "seed"));
  consume("train.seed");
  if (auto* v = take("train.checkpoint_interval"))
    c.checkpoint_interval = static_cast<int>(to_long(*v, "checkpoint_interval"));
  consume("train.checkpoint_interval");

  if (auto* v = take("data.subset_train")) c.subset_train = to_long(*v, "subset_train");
  consume("data.subset_train");
  if (auto* v = take("data.subset_eval")) c.subset_eval = to_long(*v, "subset_eval");
  consume("data.subset_eval");
  if (auto* v = take("data.height")) d.height = static_cast<int>(to_long(*v, "height"));
  consume("data.height");
  if (auto* v = take("data.width")) d.width = static_cast<int>(to_long(*v, "width"));
  consume("data.width");
  if (auto* v = take("data.channels")) d.channels = static_cast<int>(to_long(*v, "channels"));
  consume("data.channels");

  if (!kv.empty())
    throw std::invalid_argument("config: unknown key '" + kv.begin()->first + "'");
  return out;
}

ParsedConfigFile load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const ValidatedConfig& vc) {
  const TrainingConfig& c = vc.cfg;
  std::ostringstream os;
  os << "[model]\n";
  os << "n_t = " << c.n_t << "\n";
  os << "k_over_n = " << format_rational(c.k_over_n) << "\n";
  os << "num_classes = " << c.num_classes << "\n";
  os << "\n[channel]\n";
  os << "power = " << fmt_double(c.power) << "\n";
  os << "snr_train_bob_db = " << fmt_double(c.snr_train_bob_db) << "\n";
  os << "snr_train_eve_db = " << fmt_double(c.snr_train_eve_db) << "\n";
  os << "\n[adversary]\n";
  os << "count = " << c.m_eavesdroppers << "\n";
  os << "colluding = " << (c.colluding ? "true" : "false") << "\n";
  os << "w = " << format_double_list(c.w) << "\n";
  os << "\n[train]\n";
  os << "alpha = " << fmt_double(c.alpha) << "\n";
  os << "use_alc = " << (c.use_alc ? "true" : "false") << "\n";
  os << "batch_size = " << c.batch_size << "\n";
  os << "episodes = " << c.episodes << "\n";
  os << "learning_rate = " << fmt_double(c.learning_rate) << "\n";
  os << "seed = " << c.seed << "\n";
  os << "checkpoint_interval = " << c.checkpoint_interval << "\n";
  os << "\n[data]\n";
  os << "subset_train = " << c.subset_train << "\n";
  os << "subset_eval = " << c.subset_eval << "\n";
  os << "height = " << vc.dims.height << "\n";
  os << "width = " << vc.dims.width << "\n";
  os << "channels = " << vc.dims.channels << "\n";
  return os.str();
}

ValidatedConfig parse_validated_config(const std::string& text) {
  ParsedConfigFile p = parse_config_text(text);
  return validate_config(p.cfg, p.dims);
}

void apply_desk_preset(TrainingConfig& cfg) {
  cfg.subset_train = 5000;
  cfg.subset_eval = 2000;
  cfg.episodes = 20;
  cfg.batch_size = 64;
  cfg.learning_rate = 1e-3;
}

ChannelSpec train_bob_spec(const ValidatedConfig& vc) {
  return {ChannelSpec::Family::Rayleigh, vc.cfg.snr_train_bob_db, 1.0, vc.cfg.power};
}

ChannelSpec train_eve_spec(const ValidatedConfig& vc) {
  return {ChannelSpec::Family::Rayleigh, vc.cfg.snr_train_eve_db, 1.0, vc.cfg.power};
}

uint64_t config_fingerprint(const ValidatedConfig& vc) {
  const std::string s = serialize_config(vc);
  return nn::fnv1a64(s.data(), s.size());
}

}  // namespace sjscc
