#pragma once

// Complex-valued network layers: the parametric front-end, split ReLU,
// joint-variance layer and batch normalization, modulus max-pooling, dropout
// and the modulus-softmax output head.
//
// Every layer treats a complex value as one unit: masks, selections and
// normalization scales apply to the (re, im) pair together.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gaborwave/complex_tensor.hpp"
#include "gaborwave/filterbank.hpp"
#include "gaborwave/ops.hpp"
#include "gaborwave/tape.hpp"

namespace gaborwave {

enum class Mode { Train, Eval };

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------------------
// Front-end

struct FrontEndLayer {
  std::size_t n_filters = 0;
  std::size_t taps = 0;
  FilterFamily family = FilterFamily::GaborComplex;
  std::size_t stride = 1;
  bool windowed = true;  // Hamming window, sinc family only
};

/// raw [n_filters, 2] unconstrained parameters, x [batch, 1, time] -> [batch, n_filters, time'].
/// Kernels are re-sampled from the cutoffs on every call, so only raw is trainable.
/// Filtering is a true convolution: an impulse at index taps-1 reproduces each
/// kernel, and complex Gabor outputs keep their energy at positive frequencies.
inline Var front_end_forward(const FrontEndLayer& layer, Var raw, Var x) {
  const auto& xv = value_of(x);
  if (xv.rank() != 3 || xv.dim(1) != 1) {
    throw DimensionError("front_end_forward: expected input [batch, 1, time], got " + shape_string(xv.shape()));
  }
  if (xv.dim(2) < layer.taps) {
    throw DimensionError("front_end_forward: input length " + std::to_string(xv.dim(2)) + " shorter than taps " +
                         std::to_string(layer.taps));
  }
  Var kernels = sample_bank(cutoffs_from_raw(raw), layer.family, layer.taps, layer.windowed);
  return conv1d(x, reverse_last(kernels), layer.stride);
}

// ---------------------------------------------------------------------------
// Activations

/// Split ReLU: max(0, re) + i max(0, im).
inline Var crelu(Var z) {
  Tape& tape = *z.tape;
  const auto& zv = tape.value(z);
  ComplexTensor out(zv.shape());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = Complex(std::max(0.0, zv[k].real()), std::max(0.0, zv[k].imag()));
  }
  return tape.record(std::move(out), {z}, [z](Tape& t, std::span<const Complex> g) {
    const auto& zv = t.value(z);
    auto gz = t.grad_slot(z);
    for (std::size_t k = 0; k < g.size(); ++k) {
      gz[k] += Complex(zv[k].real() > 0.0 ? g[k].real() : 0.0, zv[k].imag() > 0.0 ? g[k].imag() : 0.0);
    }
  });
}

// ---------------------------------------------------------------------------
// Normalization

namespace detail {

// Backward of y_j = gain_j * (z_j - mean) / s over one group of M values, with
// s = sqrt(mean |z - mean|^2 + eps). u holds the normalized values.
inline void joint_norm_backward(std::span<const Complex> g, std::span<const Complex> u, std::span<const double> gain,
                                double s, std::span<Complex> gz) {
  const std::size_t m = g.size();
  std::vector<Complex> gu(m);
  double dot = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    gu[j] = g[j] * gain[j];
    dot += (std::conj(gu[j]) * u[j]).real();
  }
  dot /= static_cast<double>(m);
  std::vector<Complex> dd(m);
  Complex mean_dd{};
  for (std::size_t j = 0; j < m; ++j) {
    dd[j] = (gu[j] - u[j] * dot) / s;
    mean_dd += dd[j];
  }
  mean_dd /= static_cast<double>(m);
  for (std::size_t j = 0; j < m; ++j) gz[j] += dd[j] - mean_dd;
}

}  // namespace detail

/// Layer normalization per sample over all non-batch axes. The complex mean is
/// removed and both parts are divided by sqrt(joint variance + eps), where the
/// joint variance is mean(|z - mean|^2). gain has one real entry per feature
/// (axis 1).
inline Var complex_layer_norm(Var z, Var gain, double eps = 1e-5) {
  Tape& tape = *z.tape;
  const auto& zv = tape.value(z);
  const auto& gv = tape.value(gain);
  if (zv.rank() < 2 || gv.size() != zv.dim(1)) {
    throw DimensionError("complex_layer_norm: gain " + shape_string(gv.shape()) + " does not match features of " +
                         shape_string(zv.shape()));
  }
  const std::size_t batch = zv.dim(0), feats = zv.dim(1);
  const std::size_t group = zv.size() / batch;
  const std::size_t inner = group / feats;
  ComplexTensor u(zv.shape()), y(zv.shape());
  std::vector<double> scale(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t off = b * group;
    Complex mean{};
    for (std::size_t j = 0; j < group; ++j) mean += zv[off + j];
    mean /= static_cast<double>(group);
    double var = 0.0;
    for (std::size_t j = 0; j < group; ++j) var += std::norm(zv[off + j] - mean);
    var /= static_cast<double>(group);
    scale[b] = std::sqrt(var + eps);
    for (std::size_t j = 0; j < group; ++j) {
      u[off + j] = (zv[off + j] - mean) / scale[b];
      y[off + j] = u[off + j] * gv[j / inner].real();
    }
  }
  return tape.record(std::move(y), {z, gain},
                     [z, gain, u = std::move(u), scale = std::move(scale), group, inner](Tape& t,
                                                                                       std::span<const Complex> g) {
                       const auto& gv = t.value(gain);
                       const std::size_t batch = scale.size();
                       if (t.requires_grad(z)) {
                         std::vector<double> gain_per(group);
                         for (std::size_t j = 0; j < group; ++j) gain_per[j] = gv[j / inner].real();
                         auto gz = t.grad_slot(z);
                         for (std::size_t b = 0; b < batch; ++b) {
                           const std::size_t off = b * group;
                           detail::joint_norm_backward(g.subspan(off, group), u.data().subspan(off, group), gain_per,
                                                       scale[b], gz.subspan(off, group));
                         }
                       }
                       if (t.requires_grad(gain)) {
                         auto gg = t.grad_slot(gain);
                         for (std::size_t k = 0; k < g.size(); ++k) {
                           gg[(k % group) / inner] += (std::conj(g[k]) * u[k]).real();
                         }
                       }
                     });
}

/// Per-feature statistics for complex batch normalization.
struct NormStats {
  std::vector<Complex> running_mean;
  std::vector<double> running_var;
  double eps = 1e-5;

  explicit NormStats(std::size_t features = 0, double eps_ = 1e-5)
      : running_mean(features), running_var(features, 1.0), eps(eps_) {}
};

/// Batch normalization of z [batch, features] with the joint-variance rule.
/// Train mode normalizes with batch statistics and updates the running copies
/// as running = momentum * running + (1 - momentum) * batch. Eval mode uses the
/// running statistics.
inline Var complex_batch_norm(Var z, Var gain, NormStats& stats, Mode mode, double momentum = 0.9) {
  Tape& tape = *z.tape;
  const auto& zv = tape.value(z);
  const auto& gv = tape.value(gain);
  if (zv.rank() != 2 || gv.size() != zv.dim(1) || stats.running_mean.size() != zv.dim(1)) {
    throw DimensionError("complex_batch_norm: expected [batch, features] matching gain and stats, got " +
                         shape_string(zv.shape()));
  }
  const std::size_t batch = zv.dim(0), feats = zv.dim(1);
  if (mode == Mode::Train && batch < 2) throw ContractError("complex_batch_norm: train mode needs batch size >= 2");
  ComplexTensor u(zv.shape()), y(zv.shape());
  std::vector<double> scale(feats);
  for (std::size_t f = 0; f < feats; ++f) {
    Complex mean;
    double var;
    if (mode == Mode::Train) {
      mean = {};
      for (std::size_t b = 0; b < batch; ++b) mean += zv[b * feats + f];
      mean /= static_cast<double>(batch);
      var = 0.0;
      for (std::size_t b = 0; b < batch; ++b) var += std::norm(zv[b * feats + f] - mean);
      var /= static_cast<double>(batch);
      stats.running_mean[f] = momentum * stats.running_mean[f] + (1.0 - momentum) * mean;
      stats.running_var[f] = momentum * stats.running_var[f] + (1.0 - momentum) * var;
    } else {
      mean = stats.running_mean[f];
      var = stats.running_var[f];
    }
    scale[f] = std::sqrt(var + stats.eps);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t k = b * feats + f;
      u[k] = (zv[k] - mean) / scale[f];
      y[k] = u[k] * gv[f].real();
    }
  }
  const bool batch_stats = mode == Mode::Train;
  return tape.record(
      std::move(y), {z, gain},
      [z, gain, u = std::move(u), scale = std::move(scale), batch_stats](Tape& t, std::span<const Complex> g) {
        const auto& gv = t.value(gain);
        const std::size_t feats = scale.size();
        const std::size_t batch = g.size() / feats;
        if (t.requires_grad(z)) {
          auto gz = t.grad_slot(z);
          std::vector<Complex> gcol(batch), ucol(batch), gzcol(batch);
          for (std::size_t f = 0; f < feats; ++f) {
            if (batch_stats) {
              for (std::size_t b = 0; b < batch; ++b) {
                gcol[b] = g[b * feats + f];
                ucol[b] = u[b * feats + f];
                gzcol[b] = {};
              }
              const std::vector<double> gain_col(batch, gv[f].real());
              detail::joint_norm_backward(gcol, ucol, gain_col, scale[f], gzcol);
              for (std::size_t b = 0; b < batch; ++b) gz[b * feats + f] += gzcol[b];
            } else {
              for (std::size_t b = 0; b < batch; ++b) gz[b * feats + f] += g[b * feats + f] * gv[f].real() / scale[f];
            }
          }
        }
        if (t.requires_grad(gain)) {
          auto gg = t.grad_slot(gain);
          for (std::size_t k = 0; k < g.size(); ++k) gg[k % feats] += (std::conj(g[k]) * u[k]).real();
        }
      });
}

// ---------------------------------------------------------------------------
// Pooling and dropout

/// Max-pooling along the last axis by modulus. Each window of `window`
/// elements yields its largest-|z| element (lowest index on ties); trailing
/// elements that do not fill a window are dropped.
inline Var magnitude_maxpool(Var z, std::size_t window) {
  if (window < 1) throw ParameterError("magnitude_maxpool: window must be >= 1");
  Tape& tape = *z.tape;
  const auto& zv = tape.value(z);
  const std::size_t len = zv.shape().back();
  const std::size_t pooled = len / window;
  if (pooled == 0) {
    throw DimensionError("magnitude_maxpool: window " + std::to_string(window) + " exceeds axis length " +
                         std::to_string(len));
  }
  Shape shape = zv.shape();
  shape.back() = pooled;
  const std::size_t rows = zv.size() / len;
  ComplexTensor out(shape);
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t p = 0; p < pooled; ++p) {
      const std::size_t base = r * len + p * window;
      std::size_t best = base;
      double best_mag = std::norm(zv[base]);
      for (std::size_t j = 1; j < window; ++j) {
        const double m = std::norm(zv[base + j]);
        if (m > best_mag) {
          best_mag = m;
          best = base + j;
        }
      }
      out[r * pooled + p] = zv[best];
      argmax[r * pooled + p] = best;
    }
  }
  return tape.record(std::move(out), {z}, [z, argmax = std::move(argmax)](Tape& t, std::span<const Complex> g) {
    auto gz = t.grad_slot(z);
    for (std::size_t k = 0; k < g.size(); ++k) gz[argmax[k]] += g[k];
  });
}

/// Inverted dropout on complex units. In train mode each unit is zeroed with
/// probability p and survivors are scaled by 1/(1-p); eval mode is the identity.
inline Var dropout(Var z, double p, Mode mode, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ParameterError("dropout: p must lie in [0, 1)");
  if (mode == Mode::Eval || p == 0.0) return z;
  Tape& tape = *z.tape;
  const auto& zv = tape.value(z);
  std::vector<double> mask(zv.size());
  const double keep = 1.0 / (1.0 - p);
  for (auto& m : mask) m = uniform01(rng) < p ? 0.0 : keep;
  ComplexTensor out(zv.shape());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = zv[k] * mask[k];
  return tape.record(std::move(out), {z}, [z, mask = std::move(mask)](Tape& t, std::span<const Complex> g) {
    auto gz = t.grad_slot(z);
    for (std::size_t k = 0; k < g.size(); ++k) gz[k] += g[k] * mask[k];
  });
}

// ---------------------------------------------------------------------------
// Output head

/// Row-wise softmax of a [batch, classes] real matrix.
inline std::vector<double> softmax_rows(std::span<const double> logits, std::size_t classes) {
  std::vector<double> p(logits.size());
  for (std::size_t r = 0; r * classes < logits.size(); ++r) {
    const auto row = logits.subspan(r * classes, classes);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += (p[r * classes + c] = std::exp(row[c] - mx));
    for (std::size_t c = 0; c < classes; ++c) p[r * classes + c] /= z;
  }
  return p;
}

/// Class probabilities from complex logits [batch, classes]: softmax of |logit|.
inline std::vector<double> output_head(const ComplexTensor& logits) {
  if (logits.rank() != 2) throw DimensionError("output_head: expected [batch, classes], got " + shape_string(logits.shape()));
  std::vector<double> mag(logits.size());
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(logits[k]);
  return softmax_rows(mag, logits.dim(1));
}

/// Mean cross-entropy of softmax(real logits [batch, classes]) against labels.
inline Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  Tape& tape = *logits.tape;
  const auto& lv = tape.value(logits);
  if (lv.rank() != 2 || lv.dim(0) != labels.size()) {
    throw DimensionError("softmax_cross_entropy: logits " + shape_string(lv.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t batch = lv.dim(0), classes = lv.dim(1);
  auto probs = softmax_rows(lv.real_part(), classes);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw ParameterError("softmax_cross_entropy: label out of range");
    loss -= std::log(std::max(probs[b * classes + static_cast<std::size_t>(y)], 1e-300));
  }
  loss /= static_cast<double>(batch);
  std::vector<int> ys(labels.begin(), labels.end());
  return tape.record(ComplexTensor::scalar(loss), {logits},
                     [logits, probs = std::move(probs), ys = std::move(ys), classes](Tape& t,
                                                                                   std::span<const Complex> g) {
                       auto gl = t.grad_slot(logits);
                       const double s = g[0].real() / static_cast<double>(ys.size());
                       for (std::size_t b = 0; b < ys.size(); ++b) {
                         for (std::size_t c = 0; c < classes; ++c) {
                           const double target = static_cast<std::size_t>(ys[b]) == c ? 1.0 : 0.0;
                           gl[b * classes + c] += s * (probs[b * classes + c] - target);
                         }
                       }
                     });
}

/// Cross-entropy of the modulus-softmax head.
inline Var head_cross_entropy(Var complex_logits, std::span<const int> labels) {
  return softmax_cross_entropy(modulus(complex_logits), labels);
}

}  // namespace gaborwave
