#pragma once

// Network assembly: a parametric front-end followed by complex convolution
// blocks, a complex MLP and the modulus-softmax head.
//
//   front-end -> pool -> layer norm -> CReLU -> dropout
//   conv block: conv -> pool -> layer norm -> CReLU -> dropout      (repeated)
//   flatten
//   dense block: linear -> batch norm -> CReLU -> dropout           (repeated)
//   output linear -> |.| -> softmax

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "gaborwave/filterbank.hpp"
#include "gaborwave/layers.hpp"
#include "gaborwave/ops.hpp"
#include "gaborwave/tape.hpp"

namespace gaborwave {

struct ConvBlockSpec {
  std::size_t filters = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t pool = 1;
};

/// Ordered description of a network. The front-end family is chosen at build time.
struct LayerGraph {
  std::size_t input_length = 0;  // samples per chunk
  double sample_rate = 16000.0;
  std::size_t front_filters = 0;
  std::size_t front_taps = 0;
  std::size_t front_stride = 1;
  std::size_t front_pool = 1;
  bool sinc_window = true;
  std::vector<ConvBlockSpec> conv_blocks;
  std::vector<std::size_t> dense_widths;
  std::size_t n_classes = 0;
  double dropout = 0.0;
};

/// Small network used by gradient checks and the synthetic task.
inline LayerGraph toy_graph(std::size_t input_length = 512, std::size_t n_classes = 3) {
  LayerGraph g;
  g.input_length = input_length;
  g.front_filters = 4;
  g.front_taps = 65;
  g.front_pool = 4;
  g.n_classes = n_classes;
  return g;
}

/// Full-size layout: four complex conv layers (128/60/60/60 filters, kernels
/// 129/5/5/3) and five 1024-unit complex dense layers on 200 ms at 16 kHz.
inline LayerGraph full_size_graph(std::size_t n_classes = 48) {
  LayerGraph g;
  g.input_length = 3200;
  g.front_filters = 128;
  g.front_taps = 129;
  g.front_pool = 3;
  g.conv_blocks = {{60, 5, 1, 3}, {60, 5, 1, 3}, {60, 3, 1, 3}};
  g.dense_widths = {1024, 1024, 1024, 1024, 1024};
  g.n_classes = n_classes;
  g.dropout = 0.15;
  return g;
}

struct StageShape {
  std::string name;
  Shape shape;  // per example, without the batch axis
};

/// Static shape propagation. Throws DimensionError naming the first layer
/// whose input extent is too small.
inline std::vector<StageShape> shape_check(const LayerGraph& g) {
  auto fail = [](const std::string& layer, const std::string& why) {
    throw DimensionError("layer '" + layer + "': " + why);
  };
  if (g.front_filters == 0) fail("frontend", "needs at least one filter");
  if (g.n_classes < 2) fail("output", "needs at least two classes");
  if (g.front_taps < 3 || g.front_taps % 2 == 0) fail("frontend", "taps must be odd and >= 3");
  std::vector<StageShape> out;
  out.push_back({"input", {1, g.input_length}});
  std::size_t chans = g.front_filters, len = g.input_length;
  auto conv_len = [&](const std::string& name, std::size_t kernel, std::size_t stride, std::size_t pool) {
    if (stride < 1 || pool < 1) fail(name, "stride and pool must be >= 1");
    if (kernel > len) fail(name, "kernel " + std::to_string(kernel) + " exceeds input extent " + std::to_string(len));
    len = (len - kernel) / stride + 1;
    if (len / pool == 0) fail(name, "pool window " + std::to_string(pool) + " exceeds extent " + std::to_string(len));
    len /= pool;
  };
  conv_len("frontend", g.front_taps, g.front_stride, g.front_pool);
  out.push_back({"frontend", {chans, len}});
  for (std::size_t i = 0; i < g.conv_blocks.size(); ++i) {
    const auto& c = g.conv_blocks[i];
    const std::string name = "conv" + std::to_string(i);
    if (c.filters == 0 || c.kernel == 0) fail(name, "filters and kernel must be positive");
    conv_len(name, c.kernel, c.stride, c.pool);
    chans = c.filters;
    out.push_back({name, {chans, len}});
  }
  std::size_t width = chans * len;
  out.push_back({"flatten", {width}});
  for (std::size_t j = 0; j < g.dense_widths.size(); ++j) {
    if (g.dense_widths[j] == 0) fail("dense" + std::to_string(j), "width must be positive");
    width = g.dense_widths[j];
    out.push_back({"dense" + std::to_string(j), {width}});
  }
  out.push_back({"output", {g.n_classes}});
  return out;
}

struct Parameter {
  std::string name;
  ComplexTensor value;
  bool real_only = false;
};

class Model {
 public:
  Model(LayerGraph graph, FilterFamily family) : graph_(std::move(graph)), family_(family) {}

  const LayerGraph& graph() const { return graph_; }
  FilterFamily family() const { return family_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<NormStats>& norm_stats() { return stats_; }
  const std::vector<NormStats>& norm_stats() const { return stats_; }

  Parameter& parameter(const std::string& name) {
    for (auto& p : params_)
      if (p.name == name) return p;
    throw ContractError("model has no parameter '" + name + "'");
  }
  const Parameter& parameter(const std::string& name) const {
    return const_cast<Model*>(this)->parameter(name);
  }

  void set_dropout(double p) {
    if (!(p >= 0.0 && p < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
    graph_.dropout = p;
  }

  void add_parameter(std::string name, ComplexTensor value, bool real_only) {
    params_.push_back({std::move(name), std::move(value), real_only});
  }

  FrontEndLayer front_end() const {
    return {graph_.front_filters, graph_.front_taps, family_, graph_.front_stride, graph_.sinc_window};
  }

  /// Constrained cutoffs of the front-end, normalized frequency.
  std::vector<Cutoffs> cutoffs() const {
    const auto& raw = parameter("frontend.raw").value;
    std::vector<Cutoffs> out(raw.dim(0));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = learnable_cutoffs(raw[2 * i].real(), raw[2 * i + 1].real());
    return out;
  }

  /// Registers all parameters on the tape and returns complex logits [batch, classes].
  /// Dropout draws from rng in Train mode only.
  Var forward(Tape& tape, const ComplexTensor& input, Mode mode, std::mt19937_64& rng) {
    if (input.rank() != 3 || input.dim(1) != 1 || input.dim(2) != graph_.input_length) {
      throw DimensionError("model input must be [batch, 1, " + std::to_string(graph_.input_length) + "], got " +
                           shape_string(input.shape()));
    }
    std::vector<Var> p;
    p.reserve(params_.size());
    for (const auto& prm : params_) p.push_back(tape.parameter(prm.name, prm.value, prm.real_only));
    std::size_t next = 0;
    auto take = [&]() { return p.at(next++); };

    Var h = front_end_forward(front_end(), take(), tape.constant(input));
    h = magnitude_maxpool(h, graph_.front_pool);
    h = complex_layer_norm(h, take());
    h = dropout(crelu(h), graph_.dropout, mode, rng);
    for (const auto& c : graph_.conv_blocks) {
      h = conv1d(h, take(), c.stride);
      h = magnitude_maxpool(h, c.pool);
      h = complex_layer_norm(h, take());
      h = dropout(crelu(h), graph_.dropout, mode, rng);
    }
    const std::size_t batch = input.dim(0);
    h = reshape(h, {batch, value_of(h).size() / batch});
    for (std::size_t j = 0; j < graph_.dense_widths.size(); ++j) {
      Var w = take();
      Var b = take();
      h = linear(h, w, b);
      h = complex_batch_norm(h, take(), stats_.at(j), mode);
      h = dropout(crelu(h), graph_.dropout, mode, rng);
    }
    Var w = take();
    Var b = take();
    return linear(h, w, b);
  }

 private:
  LayerGraph graph_;
  FilterFamily family_;
  std::vector<Parameter> params_;
  std::vector<NormStats> stats_;
};

namespace detail {

/// Complex weights with modulus 1/sqrt(fan_in) and uniform random phase.
inline ComplexTensor init_complex_weight(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  ComplexTensor w(std::move(shape));
  const double mag = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : w.data()) v = std::polar(mag, 2.0 * std::numbers::pi * uniform01(rng));
  return w;
}

inline ComplexTensor ones(std::size_t n) {
  ComplexTensor t({n});
  for (auto& v : t.data()) v = 1.0;
  return t;
}

}  // namespace detail

/// Builds and initializes a model. Cutoffs start from the mel layout (identical
/// across families); everything random is drawn from seed.
inline Model build_model(const LayerGraph& g, FilterFamily family, std::uint64_t seed) {
  const auto shapes = shape_check(g);
  Model m(g, family);
  std::mt19937_64 rng(seed);

  ComplexTensor raw({g.front_filters, 2});
  const auto init = init_cutoffs_mel(g.front_filters, g.sample_rate);
  for (std::size_t i = 0; i < init.size(); ++i) {
    const auto [r1, r2] = raw_from_cutoffs(init[i]);
    raw[2 * i] = r1;
    raw[2 * i + 1] = r2;
  }
  m.add_parameter("frontend.raw", std::move(raw), true);
  m.add_parameter("frontend.ln_gain", detail::ones(g.front_filters), true);

  std::size_t chans = g.front_filters;
  for (std::size_t i = 0; i < g.conv_blocks.size(); ++i) {
    const auto& c = g.conv_blocks[i];
    const std::string name = "conv" + std::to_string(i);
    m.add_parameter(name + ".weight", detail::init_complex_weight({c.filters, chans, c.kernel}, chans * c.kernel, rng),
                    false);
    m.add_parameter(name + ".ln_gain", detail::ones(c.filters), true);
    chans = c.filters;
  }
  std::size_t width = shapes[1 + g.conv_blocks.size() + 1].shape[0];
  for (std::size_t j = 0; j < g.dense_widths.size(); ++j) {
    const std::string name = "dense" + std::to_string(j);
    const std::size_t out = g.dense_widths[j];
    m.add_parameter(name + ".weight", detail::init_complex_weight({out, width}, width, rng), false);
    m.add_parameter(name + ".bias", ComplexTensor({out}), false);
    m.add_parameter(name + ".bn_gain", detail::ones(out), true);
    m.norm_stats().emplace_back(out);
    width = out;
  }
  m.add_parameter("output.weight", detail::init_complex_weight({g.n_classes, width}, width, rng), false);
  m.add_parameter("output.bias", ComplexTensor({g.n_classes}), false);
  return m;
}

}  // namespace gaborwave
