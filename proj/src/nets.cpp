#include "vaelab/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace vaelab {

namespace {
int n_layers(const MlpArch& arch) { return static_cast<int>(arch.hidden.size()) + 1; }

std::pair<int, int> layer_dims(const MlpArch& arch, int l) {
  const int in = l == 0 ? arch.in : arch.hidden[l - 1];
  const int out =
      l == static_cast<int>(arch.hidden.size()) ? arch.out : arch.hidden[l];
  return {in, out};
}
}  // namespace

void mlp_init(ParameterSet& ps, const std::string& prefix, const MlpArch& arch,
              Rng& rng) {
  for (int l = 0; l < n_layers(arch); ++l) {
    auto [in, out] = layer_dims(arch, l);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor w(in, out);
    for (auto& x : w.v) x = rng.uniform(-bound, bound);
    Tensor b(1, out);
    for (auto& x : b.v) x = rng.uniform(-bound, bound);
    ps.add(prefix + ".w" + std::to_string(l), std::move(w));
    ps.add(prefix + ".b" + std::to_string(l), std::move(b));
  }
}

size_t param_index(const ParameterSet& ps, const std::string& name) {
  for (size_t i = 0; i < ps.count(); ++i)
    if (ps.item(i).name == name) return i;
  throw std::out_of_range("param_index: no parameter named " + name);
}

Value mlp_forward(Graph& g, const ParameterSet& ps, const BoundParams& bp,
                  const std::string& prefix, const MlpArch& arch, Value x) {
  Value h = x;
  for (int l = 0; l < n_layers(arch); ++l) {
    Value w = bp[param_index(ps, prefix + ".w" + std::to_string(l))];
    Value b = bp[param_index(ps, prefix + ".b" + std::to_string(l))];
    h = affine(h, w, b);
    if (l + 1 < n_layers(arch)) h = leaky_relu(h, arch.leaky_slope);
  }
  return h;
}

Tensor mlp_eval(const ParameterSet& ps, const std::string& prefix,
                const MlpArch& arch, const Tensor& x) {
  if (x.cols != arch.in)
    throw std::invalid_argument("mlp_eval: input has " + x.shape_str() +
                                ", expected cols=" + std::to_string(arch.in));
  Tensor h = x;
  for (int l = 0; l < n_layers(arch); ++l) {
    const Tensor& w = ps.find(prefix + ".w" + std::to_string(l));
    const Tensor& b = ps.find(prefix + ".b" + std::to_string(l));
    Tensor out(h.rows, w.cols);
    matmul(h, w, out);
    for (int r = 0; r < out.rows; ++r)
      for (int c = 0; c < out.cols; ++c) out.at(r, c) += b.at(0, c);
    if (l + 1 < n_layers(arch))
      for (auto& v : out.v)
        if (v < 0) v *= arch.leaky_slope;
    h = std::move(out);
  }
  return h;
}

}  // namespace vaelab
