#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "vaelab/params.hpp"

namespace vaelab {

/// Adam with bias correction. State tensors mirror the parameter layout.
/// An optional filter restricts the update to matching parameter names;
/// skipped parameters keep their moment state untouched.
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  ParameterSet m, v;
  long t = 0;

  void init(const ParameterSet& params) {
    m = params.zeros_like();
    v = params.zeros_like();
    t = 0;
  }

  void step(ParameterSet& params, const ParameterSet& grads, double lr,
            const std::function<bool(const std::string&)>& include = nullptr) {
    if (m.count() != params.count()) init(params);
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.count(); ++i) {
      auto& p = params.item(i).value;
      const auto& g = grads.item(i).value;
      if (include && !include(params.item(i).name)) continue;
      for (size_t j = 0; j < p.size(); ++j) {
        const double gj = g.v[j];
        if (!std::isfinite(gj))
          throw std::runtime_error("adam_step: non-finite gradient in " +
                                   params.item(i).name);
        double& mj = m.item(i).value.v[j];
        double& vj = v.item(i).value.v[j];
        mj = beta1 * mj + (1.0 - beta1) * gj;
        vj = beta2 * vj + (1.0 - beta2) * gj * gj;
        const double mhat = mj / bc1;
        const double vhat = vj / bc2;
        p.v[j] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
};

}  // namespace vaelab
