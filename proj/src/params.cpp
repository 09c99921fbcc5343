#include "vaelab/params.hpp"

#include <cmath>
#include <stdexcept>

namespace vaelab {

void ParameterSet::add(const std::string& name, Tensor t) {
  if (has(name))
    throw std::invalid_argument("ParameterSet: duplicate name " + name);
  items_.push_back({name, std::move(t)});
}

bool ParameterSet::has(const std::string& name) const {
  for (const auto& it : items_)
    if (it.name == name) return true;
  return false;
}

Tensor& ParameterSet::find(const std::string& name) {
  for (auto& it : items_)
    if (it.name == name) return it.value;
  throw std::out_of_range("ParameterSet: no parameter named " + name);
}

const Tensor& ParameterSet::find(const std::string& name) const {
  for (const auto& it : items_)
    if (it.name == name) return it.value;
  throw std::out_of_range("ParameterSet: no parameter named " + name);
}

size_t ParameterSet::scalar_count() const {
  size_t n = 0;
  for (const auto& it : items_) n += it.value.size();
  return n;
}

std::vector<double> ParameterSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(scalar_count());
  for (const auto& it : items_)
    flat.insert(flat.end(), it.value.v.begin(), it.value.v.end());
  return flat;
}

void ParameterSet::unflatten(const std::vector<double>& flat) {
  if (flat.size() != scalar_count())
    throw std::invalid_argument("unflatten: size mismatch");
  size_t off = 0;
  for (auto& it : items_) {
    std::copy(flat.begin() + off, flat.begin() + off + it.value.size(),
              it.value.v.begin());
    off += it.value.size();
  }
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet z;
  for (const auto& it : items_)
    z.add(it.name, Tensor(it.value.rows, it.value.cols));
  return z;
}

BoundParams bind(Graph& g, const ParameterSet& ps) {
  BoundParams b;
  b.vals.reserve(ps.count());
  for (const auto& it : ps.items()) b.vals.push_back(g.leaf(it.value, true));
  return b;
}

ParameterSet collect_grads(const Graph& g, const ParameterSet& ps,
                           const BoundParams& bound) {
  ParameterSet grads = ps.zeros_like();
  for (size_t i = 0; i < ps.count(); ++i)
    grads.item(i).value = g.grad(bound.vals[i]);
  return grads;
}

double check_gradients(const ScalarFn& fn, const ParameterSet& params,
                       double step) {
  ParameterSet analytic = fn.gradient(params);
  std::vector<double> a = analytic.flatten();
  std::vector<double> flat = params.flatten();
  ParameterSet work = params;
  double worst = 0.0;
  for (size_t i = 0; i < flat.size(); ++i) {
    const double orig = flat[i];
    flat[i] = orig + step;
    work.unflatten(flat);
    const double fp = fn.value(work);
    flat[i] = orig - step;
    work.unflatten(flat);
    const double fm = fn.value(work);
    flat[i] = orig;
    const double fd = (fp - fm) / (2.0 * step);
    if (!std::isfinite(fd) || !std::isfinite(a[i]))
      throw std::runtime_error("check_gradients: non-finite at coordinate " +
                               std::to_string(i));
    const double err = std::abs(a[i] - fd) / std::max(1.0, std::abs(a[i]));
    worst = std::max(worst, err);
  }
  work.unflatten(flat);
  return worst;
}

}  // namespace vaelab
