#pragma once

// File formats:
//   impulse CSV   index,time,coeff_re,coeff_im
//   response CSV  freq,magnitude,magnitude_db
//   cutoff CSV    filter,f1_hz,f2_hz
//   run report    JSON (see write_run_report)
//   checkpoint    little-endian binary of named complex arrays (see save_checkpoint)
// Floats in text outputs carry 9 significant digits.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaborwave/filterbank.hpp"
#include "gaborwave/model.hpp"
#include "gaborwave/train.hpp"

namespace gaborwave {

inline std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Impulse response. time is in seconds when sample_rate > 0, else in samples.
inline void write_impulse_csv(std::ostream& os, const SampledFilter& s, double sample_rate = 0.0) {
  os << "index,time,coeff_re,coeff_im\n";
  for (std::size_t i = 0; i < s.taps(); ++i) {
    const double t = sample_rate > 0.0 ? s.time_of(i) / sample_rate : s.time_of(i);
    os << i << ',' << fmt9(t) << ',' << fmt9(s.coeffs[i].real()) << ',' << fmt9(s.coeffs[i].imag()) << '\n';
  }
}

/// Magnitude response on normalized frequencies; written in Hz when sample_rate > 0.
inline void write_response_csv(std::ostream& os, std::span<const double> freqs, std::span<const double> magnitude,
                               double sample_rate = 0.0) {
  os << "freq,magnitude,magnitude_db\n";
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const double f = sample_rate > 0.0 ? freqs[i] * sample_rate : freqs[i];
    const double db = magnitude[i] > 0.0 ? 20.0 * std::log10(magnitude[i]) : -INFINITY;
    os << fmt9(f) << ',' << fmt9(magnitude[i]) << ',' << fmt9(db) << '\n';
  }
}

inline void write_cutoffs_csv(std::ostream& os, const std::vector<std::pair<double, double>>& cutoffs_hz) {
  os << "filter,f1_hz,f2_hz\n";
  for (std::size_t i = 0; i < cutoffs_hz.size(); ++i) {
    os << i << ',' << fmt9(cutoffs_hz[i].first) << ',' << fmt9(cutoffs_hz[i].second) << '\n';
  }
}

/// Floats are rounded to 9 significant digits, matching the CSV outputs.
inline nlohmann::json run_report_json(const RunReport& r) {
  const auto d9 = [](double v) { return std::strtod(fmt9(v).c_str(), nullptr); };
  nlohmann::json j;
  j["seed"] = r.seed;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.config_hash));
  j["config_hash"] = hash;
  j["test_accuracy"] = d9(r.test_accuracy);
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    j["epochs"].push_back(
        {{"epoch", e.epoch}, {"train_loss", d9(e.train_loss)}, {"valid_loss", d9(e.valid_loss)}, {"valid_acc", d9(e.valid_acc)}, {"lr", d9(e.lr)}});
  }
  j["cutoffs_hz"] = nlohmann::json::array();
  for (const auto& [f1, f2] : r.cutoffs_hz) j["cutoffs_hz"].push_back({d9(f1), d9(f2)});
  return j;
}

inline void write_run_report(std::ostream& os, const RunReport& r) { os << run_report_json(r).dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// Checkpoint
//
//   magic    8 bytes  "GWCKPT01"
//   count    u32      number of arrays
//   per array:
//     name_len u32, name bytes (UTF-8)
//     real_only u8
//     rank u32, dims u64 x rank
//     values  f64 x 2 x numel, interleaved (re, im)
// All integers and floats little-endian. Batch-norm running statistics are
// stored as arrays named "<layer>.bn_running_mean" / "<layer>.bn_running_var".

namespace detail {

inline void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint64_t get_le(std::istream& is, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == EOF) throw NumericError("checkpoint: unexpected end of file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}
inline void put_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v), 8); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_le(is, 8)); }

struct NamedArray {
  std::string name;
  bool real_only = false;
  ComplexTensor value;
};

inline std::vector<NamedArray> checkpoint_arrays(const Model& m) {
  std::vector<NamedArray> out;
  for (const auto& p : m.parameters()) out.push_back({p.name, p.real_only, p.value});
  for (std::size_t j = 0; j < m.norm_stats().size(); ++j) {
    const auto& s = m.norm_stats()[j];
    const std::string base = "dense" + std::to_string(j);
    out.push_back({base + ".bn_running_mean", false, ComplexTensor({s.running_mean.size()}, s.running_mean)});
    std::vector<Complex> var(s.running_var.begin(), s.running_var.end());
    out.push_back({base + ".bn_running_var", true, ComplexTensor({s.running_var.size()}, std::move(var))});
  }
  return out;
}

}  // namespace detail

inline constexpr char kCheckpointMagic[9] = "GWCKPT01";

inline void save_checkpoint(std::ostream& os, const Model& m) {
  const auto arrays = detail::checkpoint_arrays(m);
  os.write(kCheckpointMagic, 8);
  detail::put_le(os, arrays.size(), 4);
  for (const auto& a : arrays) {
    detail::put_le(os, a.name.size(), 4);
    os.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    detail::put_le(os, a.real_only ? 1 : 0, 1);
    detail::put_le(os, a.value.rank(), 4);
    for (auto d : a.value.shape()) detail::put_le(os, d, 8);
    for (const auto& v : a.value.data()) {
      detail::put_f64(os, v.real());
      detail::put_f64(os, v.imag());
    }
  }
}

/// Restores parameters and running statistics into a model built from the
/// same graph. Every array must match by name and shape.
inline void load_checkpoint(std::istream& is, Model& m) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != std::string(kCheckpointMagic, 8)) throw NumericError("checkpoint: bad magic");
  const auto count = detail::get_le(is, 4);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = detail::get_le(is, 4);
    std::string name(len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(len));
    detail::get_le(is, 1);
    const auto rank = detail::get_le(is, 4);
    if (!is || len > 4096 || rank < 1 || rank > 8) throw NumericError("checkpoint: corrupt header for array " + std::to_string(i));
    Shape shape(rank);
    std::uint64_t numel = 1;
    for (auto& d : shape) {
      d = detail::get_le(is, 8);
      if (d == 0 || d > (std::uint64_t{1} << 32)) throw NumericError("checkpoint: corrupt shape for '" + name + "'");
      numel *= d;
      if (numel > (std::uint64_t{1} << 32)) throw NumericError("checkpoint: corrupt shape for '" + name + "'");
    }
    ComplexTensor t(shape);
    for (auto& v : t.data()) {
      const double re = detail::get_f64(is);
      v = Complex(re, detail::get_f64(is));
    }
    if (!is) throw NumericError("checkpoint: truncated in array '" + name + "'");
    auto check = [&](const Shape& want) {
      if (want != shape) {
        throw DimensionError("checkpoint: array '" + name + "' has shape " + shape_string(shape) + ", model expects " +
                             shape_string(want));
      }
    };
    const auto dot = name.find(".bn_running_");
    if (dot != std::string::npos) {
      const std::size_t j = std::stoul(name.substr(5, dot - 5));
      auto& s = m.norm_stats().at(j);
      if (name.ends_with("mean")) {
        check({s.running_mean.size()});
        std::copy(t.data().begin(), t.data().end(), s.running_mean.begin());
      } else {
        check({s.running_var.size()});
        for (std::size_t k = 0; k < t.size(); ++k) s.running_var[k] = t[k].real();
      }
    } else {
      auto& p = m.parameter(name);
      check(p.value.shape());
      p.value = std::move(t);
    }
  }
}

}  // namespace gaborwave
