#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vaelab/graph.hpp"
#include "vaelab/tensor.hpp"

namespace vaelab {

/// Named parameter arrays with a flat-vector view. Order is insertion order
/// and is part of the flat layout contract: flatten/unflatten round-trips.
class ParameterSet {
 public:
  struct Item {
    std::string name;
    Tensor value;
  };

  void add(const std::string& name, Tensor t);
  bool has(const std::string& name) const;
  Tensor& find(const std::string& name);
  const Tensor& find(const std::string& name) const;

  size_t count() const { return items_.size(); }
  Item& item(size_t i) { return items_[i]; }
  const Item& item(size_t i) const { return items_[i]; }

  size_t scalar_count() const;
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

  /// Same names/shapes, all values zero.
  ParameterSet zeros_like() const;

  std::vector<Item>& items() { return items_; }
  const std::vector<Item>& items() const { return items_; }

 private:
  std::vector<Item> items_;
};

/// Graph bindings for every item of a ParameterSet, in the same order.
struct BoundParams {
  std::vector<Value> vals;
  Value operator[](size_t i) const { return vals[i]; }
};

/// Register every parameter as a grad-tracked leaf on g.
BoundParams bind(Graph& g, const ParameterSet& ps);

/// Collect gradients after g.backward() into a ParameterSet shaped like ps.
ParameterSet collect_grads(const Graph& g, const ParameterSet& ps,
                           const BoundParams& bound);

/// A scalar function of parameters with an analytic gradient, as produced by
/// building a graph and running backward.
struct ScalarFn {
  std::function<double(const ParameterSet&)> value;
  std::function<ParameterSet(const ParameterSet&)> gradient;
};

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
/// Throws (naming the coordinate) if any value involved is non-finite.
double check_gradients(const ScalarFn& fn, const ParameterSet& params,
                       double step);

}  // namespace vaelab
