#pragma once

// Experiment configuration in INI form:
//
//   [task]
//   bands = 0.04:0.07, 0.14:0.17, 0.28:0.31   ; normalized, one per class
//   snr_db = 10
//   sample_rate = 16000
//   chunk_length = 512
//   n_train = 2000
//   n_valid = 500
//   n_test = 500
//
//   [model]
//   family = gabor-complex
//   front_filters = 4
//   front_taps = 65
//   front_stride = 1
//   front_pool = 4
//   sinc_window = true
//   conv_filters = 60, 60        ; conv_kernels / conv_strides / conv_pools alike
//   dense_widths = 1024, 1024
//
//   [train]
//   batch_size, epochs, lr, momentum, frontend_lr_scale, anneal_factor,
//   anneal_threshold, dropout_p, seed, chunk_ms, overlap_ms
//
// Missing keys keep their defaults; unknown sections or keys are rejected.

#include <cstddef>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gaborwave/filterbank.hpp"
#include "gaborwave/model.hpp"
#include "gaborwave/synthetic.hpp"
#include "gaborwave/train.hpp"

namespace gaborwave {

struct ExperimentConfig {
  SyntheticTask task = default_task();
  std::size_t n_train = 2000;
  std::size_t n_valid = 500;
  std::size_t n_test = 500;
  FilterFamily family = FilterFamily::GaborComplex;
  LayerGraph graph = toy_graph();
  TrainConfig train;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

inline std::vector<std::size_t> size_list(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) out.push_back(std::stoul(item));
  return out;
}

/// Value at path, or fallback when absent. A present but malformed value throws.
template <class T>
T read_key(const boost::property_tree::ptree& tree, const std::string& path, const T& fallback) {
  if (!tree.get_child_optional(path)) return fallback;
  return tree.get<T>(path);
}

}  // namespace detail

inline ExperimentConfig load_experiment_config(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  const std::set<std::string> task_keys{"bands", "snr_db", "sample_rate", "chunk_length", "n_train", "n_valid", "n_test"};
  const std::set<std::string> model_keys{"family",       "front_filters", "front_taps",   "front_stride",
                                         "front_pool",   "sinc_window",   "conv_filters", "conv_kernels",
                                         "conv_strides", "conv_pools",    "dense_widths"};
  const std::set<std::string> train_keys{"batch_size",       "epochs",   "lr",        "momentum",
                                         "frontend_lr_scale", "anneal_factor", "anneal_threshold",
                                         "dropout_p",        "seed",     "chunk_ms",  "overlap_ms"};
  for (const auto& [section, body] : tree) {
    const std::set<std::string>* keys = section == "task"    ? &task_keys
                                        : section == "model" ? &model_keys
                                        : section == "train" ? &train_keys
                                                             : nullptr;
    if (!keys) throw ParameterError("config: unknown section [" + section + "]");
    for (const auto& [key, _] : body) {
      if (!keys->count(key)) throw ParameterError("config: unknown key '" + key + "' in [" + section + "]");
    }
  }

  ExperimentConfig c;
  try {
    if (auto bands = tree.get_optional<std::string>("task.bands")) {
      c.task.bands.clear();
      for (const auto& item : detail::split_list(*bands)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ParameterError("config: band '" + item + "' must be lo:hi");
        c.task.bands.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
      }
    }
    c.task.snr_db = detail::read_key(tree, "task.snr_db", c.task.snr_db);
    c.task.sample_rate = detail::read_key(tree, "task.sample_rate", c.task.sample_rate);
    c.task.chunk_length = detail::read_key(tree, "task.chunk_length", c.task.chunk_length);
    c.n_train = detail::read_key(tree, "task.n_train", c.n_train);
    c.n_valid = detail::read_key(tree, "task.n_valid", c.n_valid);
    c.n_test = detail::read_key(tree, "task.n_test", c.n_test);

    c.family = parse_family(tree.get<std::string>("model.family", std::string(to_string(c.family))));
    auto& g = c.graph;
    g.front_filters = detail::read_key(tree, "model.front_filters", g.front_filters);
    g.front_taps = detail::read_key(tree, "model.front_taps", g.front_taps);
    g.front_stride = detail::read_key(tree, "model.front_stride", g.front_stride);
    g.front_pool = detail::read_key(tree, "model.front_pool", g.front_pool);
    g.sinc_window = detail::read_key(tree, "model.sinc_window", g.sinc_window);
    const auto filters = detail::size_list(detail::read_key(tree, "model.conv_filters", std::string()));
    const auto kernels = detail::size_list(detail::read_key(tree, "model.conv_kernels", std::string()));
    auto strides = detail::size_list(detail::read_key(tree, "model.conv_strides", std::string()));
    auto pools = detail::size_list(detail::read_key(tree, "model.conv_pools", std::string()));
    if (kernels.size() != filters.size()) throw ParameterError("config: conv_filters and conv_kernels differ in length");
    if (strides.empty()) strides.assign(filters.size(), 1);
    if (pools.empty()) pools.assign(filters.size(), 1);
    if (strides.size() != filters.size() || pools.size() != filters.size()) {
      throw ParameterError("config: conv_strides / conv_pools must match conv_filters in length");
    }
    g.conv_blocks.clear();
    for (std::size_t i = 0; i < filters.size(); ++i) g.conv_blocks.push_back({filters[i], kernels[i], strides[i], pools[i]});
    g.dense_widths = detail::size_list(detail::read_key(tree, "model.dense_widths", std::string()));

    auto& t = c.train;
    t.batch_size = detail::read_key(tree, "train.batch_size", t.batch_size);
    t.epochs = detail::read_key(tree, "train.epochs", t.epochs);
    t.lr = detail::read_key(tree, "train.lr", t.lr);
    t.momentum = detail::read_key(tree, "train.momentum", t.momentum);
    t.frontend_lr_scale = detail::read_key(tree, "train.frontend_lr_scale", t.frontend_lr_scale);
    t.anneal_factor = detail::read_key(tree, "train.anneal_factor", t.anneal_factor);
    t.anneal_threshold = detail::read_key(tree, "train.anneal_threshold", t.anneal_threshold);
    t.dropout_p = detail::read_key(tree, "train.dropout_p", t.dropout_p);
    t.seed = detail::read_key(tree, "train.seed", t.seed);
    t.chunk_ms = detail::read_key(tree, "train.chunk_ms", t.chunk_ms);
    t.overlap_ms = detail::read_key(tree, "train.overlap_ms", t.overlap_ms);
  } catch (const boost::property_tree::ptree_bad_data& e) {
    throw ParameterError(std::string("config: ") + e.what());
  } catch (const std::logic_error& e) {
    // std::stoul / std::stod failures
    if (dynamic_cast<const ParameterError*>(&e)) throw;
    throw ParameterError(std::string("config: malformed number (") + e.what() + ")");
  }

  c.graph.input_length = c.task.chunk_length;
  c.graph.sample_rate = c.task.sample_rate;
  c.graph.n_classes = c.task.n_classes();
  c.graph.dropout = c.train.dropout_p;
  validate(c.task);
  validate(c.train);
  if (c.n_train < 1 || c.n_valid < 1 || c.n_test < 1) throw ParameterError("config: split sizes must be positive");
  shape_check(c.graph);
  return c;
}

}  // namespace gaborwave
