#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gaborwave/complex_tensor.hpp"

namespace gaborwave {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
};

/// Gradients of a real scalar loss with respect to every registered parameter,
/// keyed by parameter name.
using GradientMap = std::map<std::string, ComplexTensor>;

/// Append-only record of primitive operations for reverse-mode differentiation.
///
/// Nodes are stored in creation order, so every node's parents precede it and a
/// single reverse sweep is a valid topological traversal. Parameters are leaf
/// nodes registered under a name; constants are leaves that never receive
/// gradients. A Tape has a single writer.
class Tape {
 public:
  /// Receives the upstream gradient of the node being visited.
  using BackwardFn = std::function<void(Tape&, std::span<const Complex>)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(ComplexTensor value) { return push(std::move(value), {}, nullptr, false); }

  /// Registers a named leaf that receives gradients. With real_only set the
  /// imaginary part of its gradient is reported as zero.
  Var parameter(const std::string& name, ComplexTensor value, bool real_only = false) {
    for (const auto& p : params_) {
      if (p.name == name) throw ContractError("parameter '" + name + "' already registered");
    }
    Var v = push(std::move(value), {}, nullptr, true);
    params_.push_back({name, v.id, real_only});
    return v;
  }

  /// Records an operation result. The backward closure is kept only when some
  /// parent requires gradients.
  Var record(ComplexTensor value, std::vector<Var> parents, BackwardFn backward) {
    bool needs = false;
    std::vector<std::size_t> ids;
    ids.reserve(parents.size());
    for (const Var& p : parents) {
      check_owned(p);
      ids.push_back(p.id);
      needs = needs || nodes_[p.id].requires_grad;
    }
    return push(std::move(value), std::move(ids), needs ? std::move(backward) : nullptr, needs);
  }

  const ComplexTensor& value(Var v) const {
    check_owned(v);
    return nodes_[v.id].value;
  }

  bool requires_grad(Var v) const {
    check_owned(v);
    return nodes_[v.id].requires_grad;
  }

  /// Gradient slot of a node, allocated on first use. Backward closures call
  /// this for each parent they accumulate into.
  std::span<Complex> grad_slot(Var v) {
    check_owned(v);
    return nodes_[v.id].value.ensure_grad();
  }

  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a real scalar loss. The loss is the real part of a
  /// one-element node. Each node is visited at most once.
  GradientMap backward(Var loss) {
    check_owned(loss);
    if (nodes_[loss.id].value.size() != 1) {
      throw ContractError("backward: loss must be a scalar node, got shape " +
                          shape_string(nodes_[loss.id].value.shape()));
    }
    for (auto& n : nodes_) n.value.clear_grad();
    if (nodes_[loss.id].requires_grad) {
      nodes_[loss.id].value.ensure_grad()[0] = Complex(1.0, 0.0);
      for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.backward || !n.value.has_grad()) continue;
        // Copy out the upstream gradient: closures may touch other nodes.
        std::vector<Complex> upstream(n.value.grad().begin(), n.value.grad().end());
        n.backward(*this, upstream);
      }
    }
    GradientMap out;
    for (const auto& p : params_) {
      const ComplexTensor& v = nodes_[p.id].value;
      ComplexTensor g(v.shape());
      if (v.has_grad()) {
        auto src = v.grad();
        for (std::size_t k = 0; k < g.size(); ++k) {
          g[k] = p.real_only ? Complex(src[k].real(), 0.0) : src[k];
        }
      }
      out.emplace(p.name, std::move(g));
    }
    return out;
  }

 private:
  struct Node {
    ComplexTensor value;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };
  struct ParamEntry {
    std::string name;
    std::size_t id;
    bool real_only;
  };

  Var push(ComplexTensor value, std::vector<std::size_t> parents, BackwardFn fn, bool requires_grad) {
    nodes_.push_back(Node{std::move(value), std::move(parents), std::move(fn), requires_grad});
    return Var{this, nodes_.size() - 1};
  }

  void check_owned(Var v) const {
    if (v.tape != this || v.id >= nodes_.size()) throw ContractError("variable does not belong to this tape");
  }

  // deque keeps references to node values stable across push_back.
  std::deque<Node> nodes_;
  std::vector<ParamEntry> params_;
};

inline const ComplexTensor& value_of(Var v) { return v.tape->value(v); }

}  // namespace gaborwave
