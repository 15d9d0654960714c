#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gaborwave/gradcheck.hpp"
#include "gaborwave/layers.hpp"
#include "gaborwave/model.hpp"
#include "gaborwave/synthetic.hpp"
#include "gaborwave/tape.hpp"

namespace gaborwave {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  double lr = 0.05;
  double momentum = 0.0;           // 0 is plain SGD
  double frontend_lr_scale = 0.01;  // multiplier on lr for the cutoff parameters
  double anneal_factor = 0.5;
  double anneal_threshold = 0.001;  // minimum relative validation-loss improvement
  double dropout_p = 0.0;
  std::uint64_t seed = 1;
  double chunk_ms = 200.0;
  double overlap_ms = 10.0;
};

inline void validate(const TrainConfig& c) {
  auto bad = [](const std::string& what) { throw ParameterError("train config: " + what); };
  if (c.batch_size < 1) bad("batch_size must be positive");
  if (c.epochs < 1) bad("epochs must be positive");
  if (!(c.lr >= 0.0) || !std::isfinite(c.lr)) bad("lr must be finite and non-negative");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) bad("momentum must lie in [0, 1)");
  if (!(c.frontend_lr_scale >= 0.0)) bad("frontend_lr_scale must be non-negative");
  if (!(c.anneal_factor > 0.0 && c.anneal_factor < 1.0)) bad("anneal_factor must lie in (0, 1)");
  if (!(c.anneal_threshold > 0.0)) bad("anneal_threshold must be positive");
  if (!(c.dropout_p >= 0.0 && c.dropout_p < 1.0)) bad("dropout_p must lie in [0, 1)");
  if (!(c.chunk_ms > 0.0) || !(c.overlap_ms > 0.0) || c.overlap_ms >= c.chunk_ms) {
    bad("chunk_ms and overlap_ms must be positive with overlap < chunk");
  }
}

/// Multiplies lr by anneal_factor when the relative validation improvement
/// (prev - next) / prev falls below anneal_threshold.
inline double anneal_lr(double prev_valid_loss, double new_valid_loss, double lr, const TrainConfig& cfg) {
  if (!std::isfinite(prev_valid_loss) || !std::isfinite(new_valid_loss)) {
    throw ContractError("anneal_lr: losses must be finite");
  }
  if (prev_valid_loss <= 0.0) throw ContractError("anneal_lr: previous loss must be positive");
  const double improvement = (prev_valid_loss - new_valid_loss) / prev_valid_loss;
  return improvement < cfg.anneal_threshold ? lr * cfg.anneal_factor : lr;
}

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double valid_acc = 0.0;
  double lr = 0.0;
};

struct RunReport {
  std::vector<EpochRecord> epochs;
  double test_accuracy = 0.0;
  std::vector<std::pair<double, double>> cutoffs_hz;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Eval-mode loss and accuracy over a whole set.
inline Evaluation evaluate(Model& model, const LabeledSet& set, std::size_t batch_size = 128) {
  std::mt19937_64 unused(0);
  double loss = 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    idx.resize(std::min(batch_size, set.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    Tape tape;
    const auto labels = set.batch_labels(idx);
    Var logits = model.forward(tape, set.batch(idx), Mode::Eval, unused);
    loss += value_of(head_cross_entropy(logits, labels))[0].real() * static_cast<double>(idx.size());
    const auto probs = output_head(value_of(logits));
    const std::size_t k = model.graph().n_classes;
    for (std::size_t b = 0; b < idx.size(); ++b) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c)
        if (probs[b * k + c] > probs[b * k + best]) best = c;
      correct += static_cast<int>(best) == labels[b];
    }
  }
  const auto n = static_cast<double>(set.size());
  return {loss / n, static_cast<double>(correct) / n};
}

/// Exported cutoffs in Hz, one pair per front-end filter.
inline std::vector<std::pair<double, double>> export_cutoffs(const Model& model) {
  std::vector<std::pair<double, double>> out;
  for (const auto& c : model.cutoffs()) {
    out.emplace_back(c.f1 * model.graph().sample_rate, c.f2 * model.graph().sample_rate);
  }
  return out;
}

/// SGD (optionally with momentum) over every model parameter.
class SgdOptimizer {
 public:
  explicit SgdOptimizer(const TrainConfig& cfg) : momentum_(cfg.momentum), frontend_scale_(cfg.frontend_lr_scale) {}

  void step(Model& model, const GradientMap& grads, double lr) {
    if (velocity_.empty()) {
      for (const auto& p : model.parameters()) velocity_.emplace_back(p.value.size());
    }
    for (std::size_t i = 0; i < model.parameters().size(); ++i) {
      auto& p = model.parameters()[i];
      const auto& g = grads.at(p.name);
      const double rate = p.name == "frontend.raw" ? lr * frontend_scale_ : lr;
      auto& v = velocity_[i];
      for (std::size_t k = 0; k < p.value.size(); ++k) {
        v[k] = momentum_ * v[k] + g[k];
        p.value[k] -= rate * v[k];
        if (p.real_only) p.value[k] = p.value[k].real();
      }
    }
  }

 private:
  double momentum_;
  double frontend_scale_;
  std::vector<std::vector<Complex>> velocity_;
};

/// FNV-1a over a canonical text rendering of the run configuration.
inline std::uint64_t config_hash(const LayerGraph& g, FilterFamily family, const TrainConfig& c,
                                 const SyntheticTask& task) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(family) << '|' << g.input_length << ',' << g.sample_rate << ',' << g.front_filters << ','
     << g.front_taps << ',' << g.front_stride << ',' << g.front_pool << ',' << g.sinc_window << ',' << g.n_classes
     << ',' << g.dropout;
  for (const auto& b : g.conv_blocks) os << ";c" << b.filters << ',' << b.kernel << ',' << b.stride << ',' << b.pool;
  for (auto w : g.dense_widths) os << ";d" << w;
  os << '|' << c.batch_size << ',' << c.epochs << ',' << c.lr << ',' << c.momentum << ',' << c.frontend_lr_scale
     << ',' << c.anneal_factor << ',' << c.anneal_threshold << ',' << c.dropout_p << ',' << c.seed << ','
     << c.chunk_ms << ',' << c.overlap_ms << '|' << task.snr_db << ',' << task.sample_rate << ',' << task.chunk_length;
  for (const auto& b : task.bands) os << ";b" << b.f1 << ',' << b.f2;
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline double parameter_norm(const Parameter& p) {
  double s = 0.0;
  for (const auto& v : p.value.data()) s += std::norm(v);
  return std::sqrt(s);
}

inline void check_cutoff_constraints(const Model& model) {
  for (const auto& c : model.cutoffs()) {
    if (!c.valid()) throw NumericError("cutoff constraint violated after optimizer step");
  }
}

/// Network used by the end-to-end gradient check: front-end, one pooled conv
/// block, one batch-normalized dense layer.
inline LayerGraph gradcheck_graph() {
  LayerGraph g = toy_graph(64, 3);
  g.front_taps = 17;
  g.conv_blocks = {{3, 3, 1, 2}};
  g.dense_widths = {5};
  return g;
}

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::string worst;  // parameter[index].part
  std::size_t coordinates = 0;
};

/// Central finite differences against the tape gradient for every real
/// coordinate of every parameter, on a random batch of 4 drawn from seed.
inline GradcheckResult network_gradcheck(const LayerGraph& g, FilterFamily family, std::uint64_t seed,
                                         double step = 1e-6) {
  Model m = build_model(g, family, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  ComplexTensor x({4, 1, g.input_length});
  for (auto& v : x.data()) v = 2.0 * uniform01(rng) - 1.0;
  std::vector<int> y(4);
  for (std::size_t b = 0; b < y.size(); ++b) y[b] = static_cast<int>(b % g.n_classes);
  auto loss = [&](GradientMap* grads) {
    Tape tape;
    std::mt19937_64 drop(seed);
    Var l = head_cross_entropy(m.forward(tape, x, Mode::Train, drop), y);
    if (grads) *grads = tape.backward(l);
    return value_of(l)[0].real();
  };
  GradientMap grads;
  loss(&grads);
  GradcheckResult r;
  for (auto& p : m.parameters()) {
    const auto& gp = grads.at(p.name);
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      for (int part = 0; part < (p.real_only ? 1 : 2); ++part) {
        const Complex orig = p.value[k];
        const Complex h = part == 0 ? Complex(step, 0.0) : Complex(0.0, step);
        p.value[k] = orig + h;
        const double up = loss(nullptr);
        p.value[k] = orig - h;
        const double down = loss(nullptr);
        p.value[k] = orig;
        if (!std::isfinite(up) || !std::isfinite(down)) {
          throw NumericError("gradcheck: non-finite loss at " + p.name + "[" + std::to_string(k) + "]");
        }
        const double err = relative_error(part == 0 ? gp[k].real() : gp[k].imag(), (up - down) / (2.0 * step));
        ++r.coordinates;
        if (err > r.max_relative_error) {
          r.max_relative_error = err;
          r.worst = p.name + "[" + std::to_string(k) + "]." + (part == 0 ? "re" : "im");
        }
      }
    }
  }
  return r;
}

/// Minibatch training with cross-entropy, per-epoch validation and
/// validation-driven learning-rate annealing. Deterministic given cfg.seed.
inline RunReport train(Model& model, const SyntheticData& data, const TrainConfig& cfg,
                       const SyntheticTask& task = default_task()) {
  validate(cfg);
  if (data.train.size() == 0 || data.valid.size() == 0) throw ContractError("train: empty dataset");
  RunReport report;
  report.seed = cfg.seed;
  report.config_hash = config_hash(model.graph(), model.family(), cfg, task);

  model.set_dropout(cfg.dropout_p);
  std::mt19937_64 rng(cfg.seed);
  SgdOptimizer opt(cfg);
  const bool needs_pairs = !model.graph().dense_widths.empty();
  double lr = cfg.lr;
  double prev_valid = 0.0;
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      if (needs_pairs && n < 2) break;  // batch norm needs two examples
      std::span<const std::size_t> idx(order.data() + start, n);
      const auto labels = data.train.batch_labels(idx);
      Tape tape;
      Var loss = head_cross_entropy(model.forward(tape, data.train.batch(idx), Mode::Train, rng), labels);
      const double lv = value_of(loss)[0].real();
      if (!std::isfinite(lv)) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << ", batch " << batch_no << "; parameter norms:";
        for (const auto& p : model.parameters()) os << ' ' << p.name << '=' << parameter_norm(p);
        throw NumericError(os.str());
      }
      opt.step(model, tape.backward(loss), lr);
      check_cutoff_constraints(model);
      loss_sum += lv * static_cast<double>(n);
      seen += n;
    }
    const Evaluation v = evaluate(model, data.valid);
    report.epochs.push_back({epoch, seen ? loss_sum / static_cast<double>(seen) : 0.0, v.loss, v.accuracy, lr});
    if (epoch > 0) lr = anneal_lr(prev_valid, v.loss, lr, cfg);
    prev_valid = v.loss;
  }
  report.test_accuracy = evaluate(model, data.test).accuracy;
  report.cutoffs_hz = export_cutoffs(model);
  return report;
}

}  // namespace gaborwave
