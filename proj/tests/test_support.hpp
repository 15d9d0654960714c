#pragma once

// Independent oracles shared by the unit and acceptance suites. Nothing here
// calls the library's conv or DFT kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "gaborwave/gaborwave.hpp"

namespace gaborwave::testing {

inline std::vector<double> random_reals(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline ComplexTensor random_tensor(Shape shape, std::mt19937_64& rng, bool real_only = false) {
  ComplexTensor t(std::move(shape));
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto& v : t.data()) v = Complex(d(rng), real_only ? 0.0 : d(rng));
  return t;
}

/// Valid-mode real correlation y[t] = sum_j x[t*stride + j] k[j].
inline std::vector<double> real_correlate(const std::vector<double>& x, const std::vector<double>& k,
                                          std::size_t stride = 1) {
  std::vector<double> y((x.size() - k.size()) / stride + 1, 0.0);
  for (std::size_t t = 0; t < y.size(); ++t)
    for (std::size_t j = 0; j < k.size(); ++j) y[t] += x[t * stride + j] * k[j];
  return y;
}

/// Valid-mode real convolution y[t] = sum_j x[t*stride + K-1 - j] k[j].
inline std::vector<double> real_convolve(const std::vector<double>& x, const std::vector<double>& k,
                                         std::size_t stride = 1) {
  const std::size_t K = k.size();
  std::vector<double> y((x.size() - K) / stride + 1, 0.0);
  for (std::size_t t = 0; t < y.size(); ++t)
    for (std::size_t j = 0; j < K; ++j) y[t] += x[t * stride + K - 1 - j] * k[j];
  return y;
}

/// Scalar triple loop over [batch, channels, time] x [out, channels, taps],
/// written directly on real and imaginary parts.
inline ComplexTensor reference_conv(const ComplexTensor& x, const ComplexTensor& k, std::size_t stride) {
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), O = k.dim(0), K = k.dim(2);
  const std::size_t To = (T - K) / stride + 1;
  ComplexTensor y({B, O, To});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t t = 0; t < To; ++t) {
        double re = 0.0, im = 0.0;
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t j = 0; j < K; ++j) {
            const Complex xv = x[(b * C + c) * T + t * stride + j];
            const Complex kv = k[(o * C + c) * K + j];
            re += xv.real() * kv.real() - xv.imag() * kv.imag();
            im += xv.real() * kv.imag() + xv.imag() * kv.real();
          }
        y[(b * O + o) * To + t] = Complex(re, im);
      }
  return y;
}

/// DTFT of a kernel centred at index (taps-1)/2, at normalized frequency f.
inline Complex dtft(const ComplexTensor& coeffs, double f) {
  const auto c = static_cast<double>((coeffs.size() - 1) / 2);
  Complex acc{};
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double n = static_cast<double>(i) - c;
    acc += coeffs[i] * std::polar(1.0, -2.0 * std::numbers::pi * f * n);
  }
  return acc;
}

/// Frequency of the largest |DFT| bin of a zero-padded N-point DFT, on [-0.5, 0.5).
inline double dft_peak_frequency(const ComplexTensor& coeffs, std::size_t n_points) {
  double best = -1.0, best_f = 0.0;
  for (std::size_t k = 0; k < n_points; ++k) {
    double f = static_cast<double>(k) / static_cast<double>(n_points);
    if (2 * k >= n_points) f -= 1.0;
    const double m = std::abs(dtft(coeffs, f));
    if (m > best) {
      best = m;
      best_f = f;
    }
  }
  return best_f;
}

/// Plain O(N^2) DFT.
inline std::vector<Complex> naive_dft(const std::vector<Complex>& x) {
  const std::size_t n = x.size();
  std::vector<Complex> X(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{};
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n));
    }
    X[k] = acc;
  }
  return X;
}

struct CheckInput {
  ComplexTensor value;
  bool real_only = false;
};

using OpBuilder = std::function<Var(std::vector<Var>&)>;

/// Worst relative error between tape gradients and central finite differences
/// for L = sum Re(conj(c) * op(inputs)) with a random projection c. Every real
/// coordinate of every input is perturbed (imaginary parts skipped for real-only
/// inputs).
inline double op_gradient_error(const std::vector<CheckInput>& inputs, const OpBuilder& op, std::uint64_t seed,
                                double step = 1e-5, double floor = 1e-6) {
  std::mt19937_64 rng(seed);
  ComplexTensor projection;
  auto run = [&](const std::vector<ComplexTensor>& values, GradientMap* grads) {
    Tape tape;
    std::vector<Var> vars;
    for (std::size_t i = 0; i < values.size(); ++i) {
      vars.push_back(tape.parameter("in" + std::to_string(i), values[i], inputs[i].real_only));
    }
    Var y = op(vars);
    if (projection.size() == 0) {
      projection = random_tensor(value_of(y).shape(), rng);
      for (auto& v : projection.data()) v = std::conj(v);
    }
    Var loss = real_part(sum(mul(y, tape.constant(projection))));
    if (grads) *grads = tape.backward(loss);
    return value_of(loss)[0].real();
  };

  std::vector<ComplexTensor> values;
  for (const auto& in : inputs) values.push_back(in.value);
  GradientMap grads;
  run(values, &grads);

  std::vector<double> flat, analytic;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& g = grads.at("in" + std::to_string(i));
    for (std::size_t k = 0; k < values[i].size(); ++k) {
      flat.push_back(values[i][k].real());
      analytic.push_back(g[k].real());
      if (!inputs[i].real_only) {
        flat.push_back(values[i][k].imag());
        analytic.push_back(g[k].imag());
      }
    }
  }
  auto f = [&](std::span<const double> p) {
    std::vector<ComplexTensor> vals = values;
    std::size_t j = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i)
      for (std::size_t k = 0; k < vals[i].size(); ++k) {
        const double re = p[j++];
        const double im = inputs[i].real_only ? 0.0 : p[j++];
        vals[i][k] = Complex(re, im);
      }
    return run(vals, nullptr);
  };
  const auto numeric = finite_difference_grad(f, flat, step);
  double worst = 0.0;
  for (std::size_t j = 0; j < flat.size(); ++j) worst = std::max(worst, relative_error(analytic[j], numeric[j], floor));
  return worst;
}

}  // namespace gaborwave::testing
