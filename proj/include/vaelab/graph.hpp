#pragma once

#include <string>
#include <vector>

#include "vaelab/tensor.hpp"

namespace vaelab {

class Graph;

/// Lightweight handle to a node on a Graph's tape.
struct Value {
  int id = -1;
  Graph* g = nullptr;
  bool valid() const { return g != nullptr && id >= 0; }
};

enum class Op : uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kScale,      // aux = factor
  kAddConst,   // aux = addend
  kMatmul,
  kLeakyRelu,  // aux = negative slope
  kTanh,
  kExp,
  kLog,
  kSquare,
  kSqrt,
  kNeg,
  kClamp,  // aux = lo, aux2 = hi
  kSumAll,
  kMeanAll,
  kRowSum,
  kRowLse,
  kDiagGaussLogPdf,  // inputs: x, mean, logvar
  kConcatCols,
  kRepeatRows,  // aux = repeat count
  kReshape,
  kSliceCols,  // aux = start, aux2 = len
  kDiv,
};

/// Reverse-mode tape over dense tensors. Records every primitive applied to
/// Values created on it; backward() walks the record once in reverse.
/// A Graph is built and consumed by a single thread; distinct Graphs are
/// independent.
class Graph {
 public:
  Graph() { nodes_.reserve(128); }

  Value leaf(Tensor t, bool requires_grad = false);
  Value constant(double x) { return leaf(Tensor::scalar(x), false); }

  const Tensor& val(Value v) const { return nodes_[v.id].val; }
  /// Gradient of the last backward() target with respect to node v.
  /// Zero tensor if the node did not require grad.
  const Tensor& grad(Value v) const;

  /// Reverse pass from a scalar output. Each recorded operation is visited
  /// exactly once. Throws if the output is not 1x1.
  void backward(Value out);

  size_t size() const { return nodes_.size(); }

  // Internal: used by the free-function ops.
  Value emit(Op op, Tensor val, int a, int b, int c, double aux, double aux2);
  const Tensor& node_val(int id) const { return nodes_[id].val; }
  bool node_needs_grad(int id) const { return nodes_[id].needs_grad; }

 private:
  struct Node {
    Tensor val;
    Tensor grad;  // allocated on demand during backward
    Op op = Op::kLeaf;
    int a = -1, b = -1, c = -1;
    double aux = 0.0, aux2 = 0.0;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  Tensor zero_;

  void accumulate(int id, const Tensor& g);
  void backward_node(int id);
};

// Primitive operations. Binary ops broadcast: operand shapes must match in
// each dimension or be 1 there (row vectors, column vectors, scalars).
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value scale(Value a, double c);
Value add_const(Value a, double c);
Value matmul(Value a, Value b);
Value affine(Value x, Value w, Value b);  // x*w + b, b broadcast over rows
Value leaky_relu(Value a, double slope);
Value tanh_(Value a);
Value exp_(Value a);
Value log_(Value a);
Value square(Value a);
Value sqrt_(Value a);
Value neg(Value a);
Value clamp(Value a, double lo, double hi);
Value sum_all(Value a);
Value mean_all(Value a);
Value row_sum(Value a);
Value row_lse(Value a);
/// Per-row sum over d of log N(x_d; mean_d, exp(logvar_d)).
/// x, mean: m x n; logvar: 1 x n, m x n, or 1 x 1. Result m x 1.
Value diag_gauss_logpdf(Value x, Value mean, Value logvar);
Value concat_cols(Value a, Value b);
Value repeat_rows(Value a, int times);
Value reshape(Value a, int rows, int cols);
Value slice_cols(Value a, int start, int len);
Value div(Value a, Value b);
Value softmax_rows(Value a);  // exp(a - rowlse(a)), composed from primitives

}  // namespace vaelab
