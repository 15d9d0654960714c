#pragma once

// Parametric band-pass filters over raw waveforms: windowed-sinc, real Gabor and
// complex Gabor kernels parameterized by their cutoff frequencies, together with
// their analytic frequency responses and time/frequency localization
// diagnostics.
//
// All frequencies are normalized (cycles per sample, Nyquist = 0.5). Kernels are
// sampled at integer instants n = -(taps-1)/2 .. (taps-1)/2, so the centre tap
// is t = 0 and even/odd symmetries hold exactly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaborwave/complex_tensor.hpp"
#include "gaborwave/errors.hpp"
#include "gaborwave/tape.hpp"

namespace gaborwave {

enum class FilterFamily { Sinc, GaborReal, GaborComplex };

inline std::string_view to_string(FilterFamily f) {
  switch (f) {
    case FilterFamily::Sinc: return "sinc";
    case FilterFamily::GaborReal: return "gabor-real";
    case FilterFamily::GaborComplex: return "gabor-complex";
  }
  return "?";
}

inline FilterFamily parse_family(std::string_view name) {
  if (name == "sinc") return FilterFamily::Sinc;
  if (name == "gabor-real") return FilterFamily::GaborReal;
  if (name == "gabor-complex") return FilterFamily::GaborComplex;
  throw ParameterError("unknown filter family '" + std::string(name) + "' (sinc | gabor-real | gabor-complex)");
}

/// Gaussian width constant: sigma = A / (pi (f2 - f1)) puts f1 and f2 at -3 dB.
inline const double kGaborA = std::sqrt(3.0 * std::log(10.0) / 10.0);

/// Smallest admissible band (and lowest f1), cycles/sample.
inline constexpr double kMinBand = 0.001;

/// The reference bound on v_time * v_freq.
inline const double kUncertaintyBound = 1.0 / (16.0 * std::numbers::pi * std::numbers::pi);

struct Cutoffs {
  double f1 = 0.0;
  double f2 = 0.0;

  bool valid() const { return f1 > 0.0 && f1 < f2 && f2 <= 0.5; }
  double bandwidth() const { return f2 - f1; }
  double center() const { return 0.5 * (f1 + f2); }
};

inline void require_valid(const Cutoffs& c, const char* op) {
  if (!(c.f2 > c.f1)) {
    throw ParameterError(std::string(op) + ": f2 must exceed f1 (got f1=" + std::to_string(c.f1) +
                         ", f2=" + std::to_string(c.f2) + ")");
  }
  if (!c.valid()) {
    throw ParameterError(std::string(op) + ": cutoffs must satisfy 0 < f1 < f2 <= 0.5");
  }
}

struct GaborParams {
  double sigma = 0.0;  // samples
  double f0 = 0.0;     // cycles/sample
};

inline GaborParams cutoffs_to_gabor(const Cutoffs& c) {
  require_valid(c, "cutoffs_to_gabor");
  return {kGaborA / (std::numbers::pi * (c.f2 - c.f1)), 0.5 * (c.f1 + c.f2)};
}

/// A sampled impulse response. Index center() corresponds to t = 0.
struct SampledFilter {
  FilterFamily family = FilterFamily::GaborComplex;
  ComplexTensor coeffs;

  std::size_t taps() const { return coeffs.size(); }
  std::size_t center() const { return (coeffs.size() - 1) / 2; }
  double time_of(std::size_t index) const {
    return static_cast<double>(index) - static_cast<double>(center());
  }
};

inline void require_odd_taps(std::size_t taps, const char* op) {
  if (taps < 3 || taps % 2 == 0) {
    throw ParameterError(std::string(op) + ": taps must be odd and >= 3, got " + std::to_string(taps));
  }
}

/// Hamming window of length taps.
inline std::vector<double> hamming_window(std::size_t taps) {
  std::vector<double> w(taps, 1.0);
  if (taps < 2) return w;
  for (std::size_t k = 0; k < taps; ++k) {
    w[k] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(taps - 1));
  }
  return w;
}

namespace detail {

/// Kernel values and their partials with respect to f1 and f2.
struct KernelWithPartials {
  std::vector<Complex> value, d_f1, d_f2;
};

inline KernelWithPartials sample_kernel(FilterFamily family, const Cutoffs& c, std::size_t taps, bool windowed) {
  constexpr double pi = std::numbers::pi;
  const double half = static_cast<double>((taps - 1) / 2);
  KernelWithPartials k{std::vector<Complex>(taps), std::vector<Complex>(taps), std::vector<Complex>(taps)};

  if (family == FilterFamily::Sinc) {
    const std::vector<double> win = windowed ? hamming_window(taps) : std::vector<double>(taps, 1.0);
    for (std::size_t i = 0; i < taps; ++i) {
      const double n = static_cast<double>(i) - half;
      double h, dh1, dh2;
      if (n == 0.0) {
        h = 2.0 * c.f2 - 2.0 * c.f1;
        dh1 = -2.0;
        dh2 = 2.0;
      } else {
        h = (std::sin(2.0 * pi * c.f2 * n) - std::sin(2.0 * pi * c.f1 * n)) / (pi * n);
        dh1 = -2.0 * std::cos(2.0 * pi * c.f1 * n);
        dh2 = 2.0 * std::cos(2.0 * pi * c.f2 * n);
      }
      k.value[i] = h * win[i];
      k.d_f1[i] = dh1 * win[i];
      k.d_f2[i] = dh2 * win[i];
    }
    return k;
  }

  const double bw = c.f2 - c.f1;
  const double sigma = kGaborA / (pi * bw);
  const double f0 = 0.5 * (c.f1 + c.f2);
  const double amp = 1.0 / (std::sqrt(2.0 * pi) * sigma);
  for (std::size_t i = 0; i < taps; ++i) {
    const double n = static_cast<double>(i) - half;
    const double env = amp * std::exp(-n * n / (2.0 * sigma * sigma));
    const Complex g = env * Complex(std::cos(2.0 * pi * f0 * n), std::sin(2.0 * pi * f0 * n));
    // d/dsigma of the envelope, times dsigma/df = +-sigma/bw; d/df0 = i 2 pi n, times df0/df = 1/2.
    const double dsig = (-1.0 / sigma + n * n / (sigma * sigma * sigma)) * sigma / bw;
    const Complex dphase(0.0, pi * n);
    Complex d1 = g * (Complex(dsig, 0.0) + dphase);
    Complex d2 = g * (Complex(-dsig, 0.0) + dphase);
    if (family == FilterFamily::GaborReal) {
      k.value[i] = g.real();
      k.d_f1[i] = d1.real();
      k.d_f2[i] = d2.real();
    } else {
      k.value[i] = g;
      k.d_f1[i] = d1;
      k.d_f2[i] = d2;
    }
  }
  return k;
}

}  // namespace detail

inline SampledFilter sample_filter(FilterFamily family, const Cutoffs& c, std::size_t taps, bool windowed = true) {
  require_odd_taps(taps, "sample_filter");
  require_valid(c, "sample_filter");
  auto k = detail::sample_kernel(family, c, taps, windowed);
  return {family, ComplexTensor({taps}, std::move(k.value))};
}

/// Complex Gabor kernel g(n) = w_sigma(n) exp(i 2 pi f0 n).
inline SampledFilter sample_gabor(const Cutoffs& c, std::size_t taps) {
  return sample_filter(FilterFamily::GaborComplex, c, taps);
}

/// Real part of the complex Gabor kernel, w_sigma(n) cos(2 pi f0 n).
inline SampledFilter sample_gabor_real(const Cutoffs& c, std::size_t taps) {
  return sample_filter(FilterFamily::GaborReal, c, taps);
}

/// Band-pass sinc 2 f2 sinc(2 pi f2 n) - 2 f1 sinc(2 pi f1 n), optionally Hamming-windowed.
inline SampledFilter sample_sinc(const Cutoffs& c, std::size_t taps, bool windowed) {
  return sample_filter(FilterFamily::Sinc, c, taps, windowed);
}

/// Analytic Gaussian response G(f) = exp(-2 pi^2 sigma^2 (f - f0)^2).
inline std::vector<double> gabor_frequency_response(const Cutoffs& c, std::span<const double> freqs) {
  const GaborParams p = cutoffs_to_gabor(c);
  const double k = 2.0 * std::numbers::pi * std::numbers::pi * p.sigma * p.sigma;
  std::vector<double> out(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const double d = freqs[i] - p.f0;
    out[i] = std::exp(-k * d * d);
  }
  return out;
}

/// Evenly spaced grid over [0, 0.5], endpoints included.
inline std::vector<double> frequency_grid(std::size_t points) {
  if (points < 2) throw ParameterError("frequency_grid: need at least 2 points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = 0.5 * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

/// DFT of a centred kernel zero-padded to dft_size. Bin k is frequency k/N,
/// i.e. bins above N/2 are negative frequencies.
inline std::vector<Complex> kernel_spectrum(const SampledFilter& s, std::size_t dft_size) {
  const std::size_t n = s.taps();
  const std::size_t c = s.center();
  std::vector<Complex> twiddle(dft_size);
  for (std::size_t m = 0; m < dft_size; ++m) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(dft_size);
    twiddle[m] = Complex(std::cos(a), std::sin(a));
  }
  std::vector<Complex> X(dft_size);
  for (std::size_t k = 0; k < dft_size; ++k) {
    Complex acc{};
    for (std::size_t i = 0; i < n; ++i) {
      // Time index i - c, taken modulo N.
      const std::size_t t = (i + dft_size - c % dft_size) % dft_size;
      acc += s.coeffs[i] * twiddle[(k * t) % dft_size];
    }
    X[k] = acc;
  }
  return X;
}

/// Signed frequency of DFT bin k on [-0.5, 0.5).
inline double bin_frequency(std::size_t k, std::size_t dft_size) {
  const double f = static_cast<double>(k) / static_cast<double>(dft_size);
  return 2 * k >= dft_size ? f - 1.0 : f;
}

struct LocalizationReport {
  double e_time = 0.0;  // samples
  double e_freq = 0.0;  // cycles/sample
  double v_time = 0.0;  // samples^2
  double v_freq = 0.0;  // (cycles/sample)^2
  double product = 0.0;
};

/// Discrete versions of the time/frequency centre and spread of a kernel.
/// Time moments weight tap offsets by |c_n|^2; frequency moments weight the
/// signed DFT grid by |X_k|^2 over the full circle. No leakage correction.
inline LocalizationReport localization_and_spread(const SampledFilter& s, std::size_t dft_size) {
  if (dft_size < 8 * s.taps()) {
    throw ParameterError("localization_and_spread: dft_size must be >= 8*taps (" + std::to_string(8 * s.taps()) + ")");
  }
  LocalizationReport r;
  double norm_t = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < s.taps(); ++i) {
    const double w = std::norm(s.coeffs[i]);
    norm_t += w;
    m1 += s.time_of(i) * w;
  }
  if (!(norm_t > 0.0)) throw NumericError("localization_and_spread: filter has zero energy");
  r.e_time = m1 / norm_t;
  for (std::size_t i = 0; i < s.taps(); ++i) {
    const double d = s.time_of(i) - r.e_time;
    r.v_time += d * d * std::norm(s.coeffs[i]);
  }
  r.v_time /= norm_t;

  const auto X = kernel_spectrum(s, dft_size);
  double norm_f = 0.0, f1 = 0.0;
  for (std::size_t k = 0; k < dft_size; ++k) {
    const double w = std::norm(X[k]);
    norm_f += w;
    f1 += bin_frequency(k, dft_size) * w;
  }
  if (!(norm_f > 0.0)) throw NumericError("localization_and_spread: spectrum has zero energy");
  r.e_freq = f1 / norm_f;
  for (std::size_t k = 0; k < dft_size; ++k) {
    const double d = bin_frequency(k, dft_size) - r.e_freq;
    r.v_freq += d * d * std::norm(X[k]);
  }
  r.v_freq /= norm_f;
  r.product = r.v_time * r.v_freq;
  return r;
}

/// A wide band built from contiguous complex Gabor sub-bands.
struct WideBandComposition {
  SampledFilter filter;               // sum of the sub-band kernels
  std::vector<Cutoffs> sub_bands;
  std::vector<double> grid;
  std::vector<double> summed_response;  // sum of analytic sub-band responses
  std::vector<double> single_response;  // analytic response of one Gabor over the target band
};

/// Tiles target into n_sub equal contiguous sub-bands. n_sub = 1 is the single
/// wide filter itself.
inline WideBandComposition compose_wide_band(const Cutoffs& target, std::size_t n_sub, std::size_t taps,
                                             std::size_t grid_points = 512) {
  if (n_sub < 1) throw ParameterError("compose_wide_band: n_sub must be >= 1");
  require_valid(target, "compose_wide_band");
  require_odd_taps(taps, "compose_wide_band");
  WideBandComposition out;
  out.grid = frequency_grid(grid_points);
  out.single_response = gabor_frequency_response(target, out.grid);
  out.summed_response.assign(out.grid.size(), 0.0);
  ComplexTensor coeffs({taps});
  const double step = target.bandwidth() / static_cast<double>(n_sub);
  for (std::size_t i = 0; i < n_sub; ++i) {
    Cutoffs sub{target.f1 + step * static_cast<double>(i),
                i + 1 == n_sub ? target.f2 : target.f1 + step * static_cast<double>(i + 1)};
    out.sub_bands.push_back(sub);
    const SampledFilter g = sample_gabor(sub, taps);
    for (std::size_t k = 0; k < taps; ++k) coeffs[k] += g.coeffs[k];
    const auto resp = gabor_frequency_response(sub, out.grid);
    for (std::size_t k = 0; k < resp.size(); ++k) out.summed_response[k] += resp[k];
  }
  out.filter = {FilterFamily::GaborComplex, std::move(coeffs)};
  return out;
}

/// Minimum of a response over grid points inside [lo, hi].
inline double band_minimum(std::span<const double> grid, std::span<const double> response, double lo, double hi) {
  double m = INFINITY;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] >= lo && grid[i] <= hi) m = std::min(m, response[i]);
  }
  return m;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Contiguous bands with edges equally spaced in mel between 30 Hz and Nyquist,
/// returned in normalized frequency.
inline std::vector<Cutoffs> init_cutoffs_mel(std::size_t n_filters, double sample_rate) {
  constexpr double kLowHz = 30.0;
  if (n_filters < 1) throw ParameterError("init_cutoffs_mel: n_filters must be >= 1");
  if (!(sample_rate > 2.0 * kLowHz)) throw ParameterError("init_cutoffs_mel: sample rate must exceed 60 Hz");
  const double lo = hz_to_mel(kLowHz);
  const double hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_filters + 1);
  for (std::size_t i = 0; i <= n_filters; ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_filters)) / sample_rate;
  }
  edges.front() = kLowHz / sample_rate;
  edges.back() = 0.5;
  std::vector<Cutoffs> out(n_filters);
  for (std::size_t i = 0; i < n_filters; ++i) out[i] = {edges[i], edges[i + 1]};
  return out;
}

// ---------------------------------------------------------------------------
// Unconstrained parameterization of cutoffs
//
//   f1 = softcap(kMinBand + |raw1|, 0.5 - 2 kMinBand)
//   f2 = softcap(f1 + kMinBand + |raw2|, 0.5)
//
// softcap is the identity up to one kMinBand below its cap and then approaches
// the cap exponentially with matching slope, so 0 < f1 < f2 <= 0.5 for all
// raw inputs.

namespace detail {

inline double softcap(double x, double cap) {
  const double knee = cap - kMinBand;
  return x <= knee ? x : cap - kMinBand * std::exp(-(x - knee) / kMinBand);
}
inline double softcap_slope(double x, double cap) {
  const double knee = cap - kMinBand;
  return x <= knee ? 1.0 : std::exp(-(x - knee) / kMinBand);
}
inline double softcap_inverse(double y, double cap) {
  const double knee = cap - kMinBand;
  if (y <= knee) return y;
  const double r = std::max((cap - y) / kMinBand, 1e-12);
  return knee - kMinBand * std::log(r);
}
inline double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace detail

/// Cutoffs and their Jacobian with respect to (raw1, raw2).
struct ConstrainedCutoffs {
  Cutoffs cutoffs;
  double df1_draw1 = 0.0;
  double df2_draw1 = 0.0;
  double df2_draw2 = 0.0;
};

inline ConstrainedCutoffs learnable_cutoffs_with_jacobian(double raw1, double raw2) {
  const double cap1 = 0.5 - 2.0 * kMinBand;
  const double u = kMinBand + std::abs(raw1);
  const double f1 = detail::softcap(u, cap1);
  const double df1 = detail::softcap_slope(u, cap1) * detail::sign_of(raw1);
  const double v = f1 + kMinBand + std::abs(raw2);
  const double f2 = detail::softcap(v, 0.5);
  const double s2 = detail::softcap_slope(v, 0.5);
  return {{f1, f2}, df1, s2 * df1, s2 * detail::sign_of(raw2)};
}

inline Cutoffs learnable_cutoffs(double raw1, double raw2) {
  return learnable_cutoffs_with_jacobian(raw1, raw2).cutoffs;
}

/// Non-negative raw pair reproducing c (up to the softcap saturation near Nyquist).
inline std::pair<double, double> raw_from_cutoffs(const Cutoffs& c) {
  const double u = detail::softcap_inverse(c.f1, 0.5 - 2.0 * kMinBand);
  const double raw1 = std::max(0.0, u - kMinBand);
  const double f1 = learnable_cutoffs(raw1, 0.0).f1;
  const double v = detail::softcap_inverse(c.f2, 0.5);
  const double raw2 = std::max(0.0, v - f1 - kMinBand);
  return {raw1, raw2};
}

// ---------------------------------------------------------------------------
// Tape operations

/// raw [n, 2] (real parts used) -> cutoffs [n, 2] (real).
inline Var cutoffs_from_raw(Var raw) {
  Tape& tape = *raw.tape;
  const auto& rv = tape.value(raw);
  if (rv.rank() != 2 || rv.dim(1) != 2) {
    throw DimensionError("cutoffs_from_raw: expected [n, 2], got " + shape_string(rv.shape()));
  }
  const std::size_t n = rv.dim(0);
  ComplexTensor out({n, 2});
  std::vector<ConstrainedCutoffs> jac(n);
  for (std::size_t i = 0; i < n; ++i) {
    jac[i] = learnable_cutoffs_with_jacobian(rv[2 * i].real(), rv[2 * i + 1].real());
    out[2 * i] = jac[i].cutoffs.f1;
    out[2 * i + 1] = jac[i].cutoffs.f2;
  }
  return tape.record(std::move(out), {raw}, [raw, jac = std::move(jac)](Tape& t, std::span<const Complex> g) {
    auto gr = t.grad_slot(raw);
    for (std::size_t i = 0; i < jac.size(); ++i) {
      const double g1 = g[2 * i].real(), g2 = g[2 * i + 1].real();
      gr[2 * i] += g1 * jac[i].df1_draw1 + g2 * jac[i].df2_draw1;
      gr[2 * i + 1] += g2 * jac[i].df2_draw2;
    }
  });
}

/// cutoffs [n, 2] -> kernels [n, 1, taps] of the given family.
inline Var sample_bank(Var cutoffs, FilterFamily family, std::size_t taps, bool windowed = true) {
  require_odd_taps(taps, "sample_bank");
  Tape& tape = *cutoffs.tape;
  const auto& cv = tape.value(cutoffs);
  if (cv.rank() != 2 || cv.dim(1) != 2) {
    throw DimensionError("sample_bank: expected cutoffs [n, 2], got " + shape_string(cv.shape()));
  }
  const std::size_t n = cv.dim(0);
  ComplexTensor out({n, 1, taps});
  std::vector<Complex> d1(n * taps), d2(n * taps);
  for (std::size_t i = 0; i < n; ++i) {
    const Cutoffs c{cv[2 * i].real(), cv[2 * i + 1].real()};
    require_valid(c, "sample_bank");
    auto k = detail::sample_kernel(family, c, taps, windowed);
    std::copy(k.value.begin(), k.value.end(), out.data().begin() + i * taps);
    std::copy(k.d_f1.begin(), k.d_f1.end(), d1.begin() + i * taps);
    std::copy(k.d_f2.begin(), k.d_f2.end(), d2.begin() + i * taps);
  }
  return tape.record(std::move(out), {cutoffs},
                     [cutoffs, taps, d1 = std::move(d1), d2 = std::move(d2)](Tape& t, std::span<const Complex> g) {
                       auto gc = t.grad_slot(cutoffs);
                       const std::size_t n = gc.size() / 2;
                       for (std::size_t i = 0; i < n; ++i) {
                         double a1 = 0.0, a2 = 0.0;
                         for (std::size_t j = 0; j < taps; ++j) {
                           const std::size_t k = i * taps + j;
                           a1 += (std::conj(g[k]) * d1[k]).real();
                           a2 += (std::conj(g[k]) * d2[k]).real();
                         }
                         gc[2 * i] += a1;
                         gc[2 * i + 1] += a2;
                       }
                     });
}

}  // namespace gaborwave
