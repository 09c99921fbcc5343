#pragma once

#include <string>
#include <vector>

#include "vaelab/graph.hpp"
#include "vaelab/params.hpp"
#include "vaelab/rng.hpp"

namespace vaelab {

/// Fully-connected network descriptor: leaky-rectifier hidden layers,
/// linear output.
struct MlpArch {
  int in = 1;
  int out = 1;
  std::vector<int> hidden;
  double leaky_slope = 0.01;
};

/// Registers parameters "<prefix>.w<i>" / "<prefix>.b<i>" on ps,
/// torch-style uniform init in +-1/sqrt(fan_in).
void mlp_init(ParameterSet& ps, const std::string& prefix, const MlpArch& arch,
              Rng& rng);

/// Tape forward for a batch (rows are data points).
Value mlp_forward(Graph& g, const ParameterSet& ps, const BoundParams& bp,
                  const std::string& prefix, const MlpArch& arch, Value x);

/// Plain forward without a tape (diagnostics, quadrature, sampling).
Tensor mlp_eval(const ParameterSet& ps, const std::string& prefix,
                const MlpArch& arch, const Tensor& x);

/// Index of a named parameter inside ps (for BoundParams addressing).
size_t param_index(const ParameterSet& ps, const std::string& name);

}  // namespace vaelab
