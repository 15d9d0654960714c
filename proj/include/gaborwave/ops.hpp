#pragma once

// Differentiable primitives on complex tensors.
//
// Every op comes as a plain value kernel (operating on ComplexTensor) and a
// tape wrapper (operating on Var). Backward rules use the real-pair
// convention: for y = a * b the upstream gradient g flows to a as g * conj(b).
//
// complex_conv1d is a correlation (no kernel flip) with "valid" extent. For a
// complex kernel the flip mirrors the spectrum (f -> -f), so layers that apply
// designed filters reverse the taps first to get a true convolution.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gaborwave/complex_tensor.hpp"
#include "gaborwave/tape.hpp"

namespace gaborwave {

// ---------------------------------------------------------------------------
// Value kernels

inline ComplexTensor complex_elementwise_mul(const ComplexTensor& a, const ComplexTensor& b) {
  require_same_shape(a, b, "complex_elementwise_mul");
  ComplexTensor out(a.shape());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double re = a[k].real() * b[k].real() - a[k].imag() * b[k].imag();
    const double im = a[k].real() * b[k].imag() + a[k].imag() * b[k].real();
    out[k] = Complex(re, im);
  }
  return out;
}

inline std::size_t conv1d_output_length(std::size_t time, std::size_t taps, std::size_t stride) {
  if (stride < 1) throw ParameterError("conv1d: stride must be >= 1");
  if (taps > time) {
    throw DimensionError("conv1d: kernel taps " + std::to_string(taps) + " exceed input length " +
                         std::to_string(time));
  }
  return (time - taps) / stride + 1;
}

/// x [batch, channels, time], k [out, channels, taps] -> [batch, out, time'].
inline ComplexTensor complex_conv1d(const ComplexTensor& x, const ComplexTensor& k, std::size_t stride) {
  if (x.rank() != 3 || k.rank() != 3) {
    throw DimensionError("complex_conv1d: expected rank-3 input and kernel, got " + shape_string(x.shape()) +
                         " and " + shape_string(k.shape()));
  }
  const std::size_t batch = x.dim(0), chans = x.dim(1), time = x.dim(2);
  const std::size_t outs = k.dim(0), taps = k.dim(2);
  if (k.dim(1) != chans) {
    throw DimensionError("complex_conv1d: channel mismatch " + shape_string(x.shape()) + " vs " +
                         shape_string(k.shape()));
  }
  const std::size_t tout = conv1d_output_length(time, taps, stride);
  ComplexTensor y({batch, outs, tout});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < outs; ++o) {
      Complex* yrow = &y[(b * outs + o) * tout];
      for (std::size_t c = 0; c < chans; ++c) {
        const Complex* xrow = &x[(b * chans + c) * time];
        const Complex* krow = &k[(o * chans + c) * taps];
        for (std::size_t t = 0; t < tout; ++t) {
          const Complex* xs = xrow + t * stride;
          double re = 0.0, im = 0.0;
          for (std::size_t j = 0; j < taps; ++j) {
            re += xs[j].real() * krow[j].real() - xs[j].imag() * krow[j].imag();
            im += xs[j].real() * krow[j].imag() + xs[j].imag() * krow[j].real();
          }
          yrow[t] += Complex(re, im);
        }
      }
    }
  }
  return y;
}

// ---------------------------------------------------------------------------
// Tape wrappers

inline Var mul(Var a, Var b) {
  Tape& tape = *a.tape;
  ComplexTensor out = complex_elementwise_mul(tape.value(a), tape.value(b));
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, std::span<const Complex> g) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    if (t.requires_grad(a)) {
      auto ga = t.grad_slot(a);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * std::conj(bv[k]);
    }
    if (t.requires_grad(b)) {
      auto gb = t.grad_slot(b);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * std::conj(av[k]);
    }
  });
}

inline Var add(Var a, Var b) {
  Tape& tape = *a.tape;
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  require_same_shape(av, bv, "add");
  ComplexTensor out(av.shape());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = av[k] + bv[k];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, std::span<const Complex> g) {
    for (Var p : {a, b}) {
      if (!t.requires_grad(p)) continue;
      auto gp = t.grad_slot(p);
      for (std::size_t k = 0; k < g.size(); ++k) gp[k] += g[k];
    }
  });
}

inline Var sub(Var a, Var b) {
  Tape& tape = *a.tape;
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  require_same_shape(av, bv, "sub");
  ComplexTensor out(av.shape());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = av[k] - bv[k];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, std::span<const Complex> g) {
    if (t.requires_grad(a)) {
      auto ga = t.grad_slot(a);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    }
    if (t.requires_grad(b)) {
      auto gb = t.grad_slot(b);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] -= g[k];
    }
  });
}

/// Multiplication by a constant complex factor.
inline Var scale(Var a, Complex factor) {
  Tape& tape = *a.tape;
  const auto& av = tape.value(a);
  ComplexTensor out(av.shape());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = av[k] * factor;
  return tape.record(std::move(out), {a}, [a, factor](Tape& t, std::span<const Complex> g) {
    auto ga = t.grad_slot(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * std::conj(factor);
  });
}

/// Sum of all elements, as a one-element tensor.
inline Var sum(Var a) {
  Tape& tape = *a.tape;
  Complex s{};
  for (const Complex& v : tape.value(a).data()) s += v;
  return tape.record(ComplexTensor::scalar(s), {a}, [a](Tape& t, std::span<const Complex> g) {
    for (auto& ga : t.grad_slot(a)) ga += g[0];
  });
}

/// Elementwise |z|^2, stored in the real part.
inline Var abs2(Var a) {
  Tape& tape = *a.tape;
  const auto& av = tape.value(a);
  ComplexTensor out(av.shape());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(av[k]);
  return tape.record(std::move(out), {a}, [a](Tape& t, std::span<const Complex> g) {
    const auto& z = t.value(a);
    auto ga = t.grad_slot(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += 2.0 * g[k].real() * z[k];
  });
}

/// Elementwise |z|, stored in the real part. The gradient at z = 0 is taken as 0.
inline Var modulus(Var a) {
  Tape& tape = *a.tape;
  const auto& av = tape.value(a);
  ComplexTensor out(av.shape());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::abs(av[k]);
  return tape.record(std::move(out), {a}, [a](Tape& t, std::span<const Complex> g) {
    const auto& z = t.value(a);
    auto ga = t.grad_slot(a);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double m = std::abs(z[k]);
      if (m > 0.0) ga[k] += g[k].real() * z[k] / m;
    }
  });
}

/// Real part as a real-valued tensor (imaginary part zero).
inline Var real_part(Var a) {
  Tape& tape = *a.tape;
  const auto& av = tape.value(a);
  ComplexTensor out(av.shape());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = av[k].real();
  return tape.record(std::move(out), {a}, [a](Tape& t, std::span<const Complex> g) {
    auto ga = t.grad_slot(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k].real();
  });
}

inline Var reshape(Var a, Shape shape) {
  Tape& tape = *a.tape;
  ComplexTensor out = tape.value(a).reshaped(std::move(shape));
  return tape.record(std::move(out), {a}, [a](Tape& t, std::span<const Complex> g) {
    auto ga = t.grad_slot(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
  });
}

/// Reverses the last axis.
inline Var reverse_last(Var a) {
  Tape& tape = *a.tape;
  const auto& av = tape.value(a);
  const std::size_t n = av.dim(av.rank() - 1);
  ComplexTensor out(av.shape());
  for (std::size_t k = 0; k < av.size(); ++k) out[k] = av[k - k % n + (n - 1 - k % n)];
  return tape.record(std::move(out), {a}, [a, n](Tape& t, std::span<const Complex> g) {
    auto ga = t.grad_slot(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k - k % n + (n - 1 - k % n)] += g[k];
  });
}

inline Var conv1d(Var x, Var k, std::size_t stride) {
  Tape& tape = *x.tape;
  ComplexTensor out = complex_conv1d(tape.value(x), tape.value(k), stride);
  return tape.record(std::move(out), {x, k}, [x, k, stride](Tape& t, std::span<const Complex> g) {
    const auto& xv = t.value(x);
    const auto& kv = t.value(k);
    const std::size_t batch = xv.dim(0), chans = xv.dim(1), time = xv.dim(2);
    const std::size_t outs = kv.dim(0), taps = kv.dim(2);
    const std::size_t tout = g.size() / (batch * outs);
    const bool want_x = t.requires_grad(x);
    const bool want_k = t.requires_grad(k);
    std::span<Complex> gx = want_x ? t.grad_slot(x) : std::span<Complex>{};
    std::span<Complex> gk = want_k ? t.grad_slot(k) : std::span<Complex>{};
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t o = 0; o < outs; ++o) {
        const Complex* grow = &g[(b * outs + o) * tout];
        for (std::size_t c = 0; c < chans; ++c) {
          const std::size_t xoff = (b * chans + c) * time;
          const std::size_t koff = (o * chans + c) * taps;
          if (want_k) {
            for (std::size_t j = 0; j < taps; ++j) {
              Complex acc{};
              for (std::size_t tt = 0; tt < tout; ++tt) acc += grow[tt] * std::conj(xv[xoff + tt * stride + j]);
              gk[koff + j] += acc;
            }
          }
          if (want_x) {
            for (std::size_t tt = 0; tt < tout; ++tt) {
              for (std::size_t j = 0; j < taps; ++j) gx[xoff + tt * stride + j] += grow[tt] * std::conj(kv[koff + j]);
            }
          }
        }
      }
    }
  });
}

/// x [batch, in], weight [out, in], bias [out] -> [batch, out].
inline Var linear(Var x, Var weight, Var bias) {
  Tape& tape = *x.tape;
  const auto& xv = tape.value(x);
  const auto& wv = tape.value(weight);
  const auto& bv = tape.value(bias);
  if (xv.rank() != 2 || wv.rank() != 2 || wv.dim(1) != xv.dim(1) || bv.size() != wv.dim(0)) {
    throw DimensionError("linear: incompatible shapes " + shape_string(xv.shape()) + ", weight " +
                         shape_string(wv.shape()) + ", bias " + shape_string(bv.shape()));
  }
  const std::size_t batch = xv.dim(0), in = xv.dim(1), outs = wv.dim(0);
  ComplexTensor y({batch, outs});
  for (std::size_t b = 0; b < batch; ++b) {
    const Complex* xr = &xv[b * in];
    for (std::size_t o = 0; o < outs; ++o) {
      const Complex* wr = &wv[o * in];
      double re = 0.0, im = 0.0;
      for (std::size_t i = 0; i < in; ++i) {
        re += wr[i].real() * xr[i].real() - wr[i].imag() * xr[i].imag();
        im += wr[i].real() * xr[i].imag() + wr[i].imag() * xr[i].real();
      }
      y[b * outs + o] = Complex(re, im) + bv[o];
    }
  }
  return tape.record(std::move(y), {x, weight, bias}, [x, weight, bias](Tape& t, std::span<const Complex> g) {
    const auto& xv = t.value(x);
    const auto& wv = t.value(weight);
    const std::size_t batch = xv.dim(0), in = xv.dim(1), outs = wv.dim(0);
    if (t.requires_grad(x)) {
      auto gx = t.grad_slot(x);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < outs; ++o) {
          const Complex go = g[b * outs + o];
          for (std::size_t i = 0; i < in; ++i) gx[b * in + i] += go * std::conj(wv[o * in + i]);
        }
    }
    if (t.requires_grad(weight)) {
      auto gw = t.grad_slot(weight);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < outs; ++o) {
          const Complex go = g[b * outs + o];
          for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += go * std::conj(xv[b * in + i]);
        }
    }
    if (t.requires_grad(bias)) {
      auto gb = t.grad_slot(bias);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < outs; ++o) gb[o] += g[b * outs + o];
    }
  });
}

}  // namespace gaborwave
