#pragma once

// Band-identification task: each class is noise confined to its own frequency
// band, buried in white noise at a given SNR.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gaborwave/complex_tensor.hpp"
#include "gaborwave/filterbank.hpp"
#include "gaborwave/layers.hpp"

namespace gaborwave {

struct SyntheticTask {
  std::vector<Cutoffs> bands;  // one per class, normalized frequency
  double snr_db = 10.0;
  double sample_rate = 16000.0;
  std::size_t chunk_length = 512;

  std::size_t n_classes() const { return bands.size(); }
};

/// Three well separated bands.
inline SyntheticTask default_task() {
  SyntheticTask t;
  t.bands = {{0.04, 0.07}, {0.14, 0.17}, {0.28, 0.31}};
  return t;
}

inline void validate(const SyntheticTask& t) {
  if (t.bands.size() < 2) throw ParameterError("synthetic task needs at least two classes");
  if (t.chunk_length < 8) throw ParameterError("synthetic task chunk length too short");
  for (const auto& b : t.bands) {
    if (!(b.f1 > 0.0 && b.f1 < b.f2 && b.f2 < 0.5)) throw ParameterError("class bands must lie inside (0, 0.5)");
  }
  for (std::size_t i = 0; i < t.bands.size(); ++i)
    for (std::size_t j = i + 1; j < t.bands.size(); ++j) {
      const auto& a = t.bands[i];
      const auto& b = t.bands[j];
      if (a.f1 < b.f2 && b.f1 < a.f2) {
        throw ParameterError("class bands " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
      }
    }
}

/// Fixed-length waveforms stored row-major with their labels.
struct LabeledSet {
  std::size_t length = 0;
  std::vector<double> samples;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> waveform(std::size_t i) const { return {samples.data() + i * length, length}; }

  /// Stacks the selected examples into a [batch, 1, length] tensor.
  ComplexTensor batch(std::span<const std::size_t> idx) const {
    ComplexTensor x({idx.size(), 1, length});
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const auto w = waveform(idx[b]);
      for (std::size_t t = 0; t < length; ++t) x[b * length + t] = w[t];
    }
    return x;
  }
  std::vector<int> batch_labels(std::span<const std::size_t> idx) const {
    std::vector<int> out(idx.size());
    for (std::size_t b = 0; b < idx.size(); ++b) out[b] = labels[idx[b]];
    return out;
  }
};

struct SyntheticData {
  LabeledSet train, valid, test;
};

namespace detail {

inline double gaussian(std::mt19937_64& rng) {
  // Box-Muller on the library's own uniform draws, independent of the
  // standard library's distribution implementation.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Unit-power sum of random-phase sinusoids covering [lo, hi], plus white noise.
inline void synth_example(const SyntheticTask& t, const Cutoffs& band, std::mt19937_64& rng, std::span<double> out) {
  constexpr double pi = std::numbers::pi;
  const std::size_t n = out.size();
  const auto tones = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(2.0 * band.bandwidth() * n)));
  std::fill(out.begin(), out.end(), 0.0);
  const double spacing = band.bandwidth() / static_cast<double>(tones);
  for (std::size_t k = 0; k < tones; ++k) {
    const double f = band.f1 + spacing * (static_cast<double>(k) + uniform01(rng));
    const double phase = 2.0 * pi * uniform01(rng);
    for (std::size_t i = 0; i < n; ++i) out[i] += std::cos(2.0 * pi * f * static_cast<double>(i) + phase);
  }
  double power = 0.0;
  for (double v : out) power += v * v;
  power /= static_cast<double>(n);
  const double gain = power > 0.0 ? 1.0 / std::sqrt(power) : 0.0;
  const double noise = std::pow(10.0, -t.snr_db / 20.0);
  for (double& v : out) v = v * gain + noise * gaussian(rng);
}

inline LabeledSet synth_split(const SyntheticTask& t, std::size_t count, std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);
  LabeledSet s;
  s.length = t.chunk_length;
  s.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) s.labels[i] = static_cast<int>(i % t.n_classes());
  // Fisher-Yates with our own draws for a portable order.
  for (std::size_t i = count; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(s.labels[i - 1], s.labels[std::min(j, i - 1)]);
  }
  s.samples.resize(count * t.chunk_length);
  for (std::size_t i = 0; i < count; ++i) {
    synth_example(t, t.bands[static_cast<std::size_t>(s.labels[i])], rng,
                  std::span<double>(s.samples.data() + i * t.chunk_length, t.chunk_length));
  }
  return s;
}

}  // namespace detail

/// Train/valid/test sets with balanced labels; each split uses its own seed stream.
inline SyntheticData generate_synthetic(const SyntheticTask& task, std::size_t n_train, std::size_t n_valid,
                                        std::size_t n_test, std::uint64_t seed) {
  validate(task);
  if (n_train < 1 || n_valid < 1 || n_test < 1) throw ParameterError("generate_synthetic: counts must be >= 1");
  return {detail::synth_split(task, n_train, seed, 1), detail::synth_split(task, n_valid, seed, 2),
          detail::synth_split(task, n_test, seed, 3)};
}

}  // namespace gaborwave
