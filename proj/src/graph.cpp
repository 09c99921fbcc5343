#include "vaelab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vaelab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              a.shape_str() + " and " + b.shape_str());
}

bool broadcastable(const Tensor& a, const Tensor& b, int& orows, int& ocols) {
  orows = std::max(a.rows, b.rows);
  ocols = std::max(a.cols, b.cols);
  auto ok = [](int x, int o) { return x == o || x == 1; };
  return ok(a.rows, orows) && ok(b.rows, orows) && ok(a.cols, ocols) &&
         ok(b.cols, ocols);
}

inline double bval(const Tensor& t, int r, int c) {
  return t.v[static_cast<size_t>(t.rows == 1 ? 0 : r) * t.cols +
             (t.cols == 1 ? 0 : c)];
}

// Accumulate g (full out shape) into the possibly-broadcast operand grad.
void reduce_into(Tensor& dst, const Tensor& g) {
  if (dst.rows == g.rows && dst.cols == g.cols) {
    for (size_t i = 0; i < g.size(); ++i) dst.v[i] += g.v[i];
    return;
  }
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c)
      dst.v[static_cast<size_t>(dst.rows == 1 ? 0 : r) * dst.cols +
            (dst.cols == 1 ? 0 : c)] += g.at(r, c);
}

}  // namespace

Value Graph::leaf(Tensor t, bool requires_grad) {
  Node n;
  n.val = std::move(t);
  n.op = Op::kLeaf;
  n.needs_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Value{static_cast<int>(nodes_.size()) - 1, this};
}

Value Graph::emit(Op op, Tensor val, int a, int b, int c, double aux,
                  double aux2) {
  Node n;
  n.val = std::move(val);
  n.op = op;
  n.a = a;
  n.b = b;
  n.c = c;
  n.aux = aux;
  n.aux2 = aux2;
  n.needs_grad = (a >= 0 && nodes_[a].needs_grad) ||
                 (b >= 0 && nodes_[b].needs_grad) ||
                 (c >= 0 && nodes_[c].needs_grad);
  nodes_.push_back(std::move(n));
  return Value{static_cast<int>(nodes_.size()) - 1, this};
}

const Tensor& Graph::grad(Value v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.size() == static_cast<size_t>(n.val.rows) * n.val.cols)
    return n.grad;
  const_cast<Graph*>(this)->zero_ = Tensor(n.val.rows, n.val.cols);
  return zero_;
}

void Graph::accumulate(int id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.size() != n.val.size())
    n.grad = Tensor(n.val.rows, n.val.cols);
  reduce_into(n.grad, g);
}

void Graph::backward(Value out) {
  if (out.g != this) throw std::logic_error("backward: value from another graph");
  const Node& o = nodes_[out.id];
  if (!o.val.is_scalar())
    throw std::invalid_argument("backward: output must be scalar, got " +
                                o.val.shape_str());
  for (auto& n : nodes_)
    if (n.grad.size()) std::fill(n.grad.v.begin(), n.grad.v.end(), 0.0);
  {
    Node& on = nodes_[out.id];
    if (on.grad.size() != 1) on.grad = Tensor(1, 1);
    on.grad.v[0] = 1.0;
  }
  for (int id = out.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.op == Op::kLeaf) continue;
    if (n.grad.size() != n.val.size()) continue;  // not on the path to out
    backward_node(id);
  }
}

void Graph::backward_node(int id) {
  Node& n = nodes_[id];
  const Tensor& g = n.grad;
  const Tensor& y = n.val;
  auto in_val = [&](int i) -> const Tensor& { return nodes_[i].val; };
  auto want = [&](int i) { return i >= 0 && nodes_[i].needs_grad; };
  auto ensure = [&](int i) -> Tensor& {
    Node& m = nodes_[i];
    if (m.grad.size() != m.val.size()) m.grad = Tensor(m.val.rows, m.val.cols);
    return m.grad;
  };

  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kAdd: {
      if (want(n.a)) reduce_into(ensure(n.a), g);
      if (want(n.b)) reduce_into(ensure(n.b), g);
      break;
    }
    case Op::kSub: {
      if (want(n.a)) reduce_into(ensure(n.a), g);
      if (want(n.b)) {
        Tensor neg_g = g;
        for (auto& x : neg_g.v) x = -x;
        reduce_into(ensure(n.b), neg_g);
      }
      break;
    }
    case Op::kMul: {
      const Tensor& a = in_val(n.a);
      const Tensor& b = in_val(n.b);
      if (want(n.a)) {
        Tensor t(g.rows, g.cols);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c)
            t.at(r, c) = g.at(r, c) * bval(b, r, c);
        reduce_into(ensure(n.a), t);
      }
      if (want(n.b)) {
        Tensor t(g.rows, g.cols);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c)
            t.at(r, c) = g.at(r, c) * bval(a, r, c);
        reduce_into(ensure(n.b), t);
      }
      break;
    }
    case Op::kScale: {
      if (want(n.a)) {
        Tensor t = g;
        for (auto& x : t.v) x *= n.aux;
        reduce_into(ensure(n.a), t);
      }
      break;
    }
    case Op::kAddConst: {
      if (want(n.a)) reduce_into(ensure(n.a), g);
      break;
    }
    case Op::kMatmul: {
      const Tensor& a = in_val(n.a);
      const Tensor& b = in_val(n.b);
      if (want(n.a)) matmul_a_bt_acc(g, b, ensure(n.a));
      if (want(n.b)) matmul_at_b_acc(a, g, ensure(n.b));
      break;
    }
    case Op::kLeakyRelu: {
      if (want(n.a)) {
        const Tensor& a = in_val(n.a);
        Tensor& da = ensure(n.a);
        for (size_t i = 0; i < a.size(); ++i)
          da.v[i] += g.v[i] * (a.v[i] > 0.0 ? 1.0 : n.aux);
      }
      break;
    }
    case Op::kTanh: {
      if (want(n.a)) {
        Tensor& da = ensure(n.a);
        for (size_t i = 0; i < y.size(); ++i)
          da.v[i] += g.v[i] * (1.0 - y.v[i] * y.v[i]);
      }
      break;
    }
    case Op::kExp: {
      if (want(n.a)) {
        Tensor& da = ensure(n.a);
        for (size_t i = 0; i < y.size(); ++i) da.v[i] += g.v[i] * y.v[i];
      }
      break;
    }
    case Op::kLog: {
      if (want(n.a)) {
        const Tensor& a = in_val(n.a);
        Tensor& da = ensure(n.a);
        for (size_t i = 0; i < a.size(); ++i) da.v[i] += g.v[i] / a.v[i];
      }
      break;
    }
    case Op::kSquare: {
      if (want(n.a)) {
        const Tensor& a = in_val(n.a);
        Tensor& da = ensure(n.a);
        for (size_t i = 0; i < a.size(); ++i)
          da.v[i] += g.v[i] * 2.0 * a.v[i];
      }
      break;
    }
    case Op::kSqrt: {
      if (want(n.a)) {
        Tensor& da = ensure(n.a);
        for (size_t i = 0; i < y.size(); ++i)
          da.v[i] += g.v[i] * 0.5 / y.v[i];
      }
      break;
    }
    case Op::kNeg: {
      if (want(n.a)) {
        Tensor& da = ensure(n.a);
        for (size_t i = 0; i < y.size(); ++i) da.v[i] -= g.v[i];
      }
      break;
    }
    case Op::kClamp: {
      if (want(n.a)) {
        const Tensor& a = in_val(n.a);
        Tensor& da = ensure(n.a);
        for (size_t i = 0; i < a.size(); ++i)
          if (a.v[i] >= n.aux && a.v[i] <= n.aux2) da.v[i] += g.v[i];
      }
      break;
    }
    case Op::kSumAll: {
      if (want(n.a)) {
        Tensor& da = ensure(n.a);
        const double gs = g.v[0];
        for (auto& x : da.v) x += gs;
      }
      break;
    }
    case Op::kMeanAll: {
      if (want(n.a)) {
        Tensor& da = ensure(n.a);
        const double gs = g.v[0] / static_cast<double>(da.size());
        for (auto& x : da.v) x += gs;
      }
      break;
    }
    case Op::kRowSum: {
      if (want(n.a)) {
        Tensor& da = ensure(n.a);
        for (int r = 0; r < da.rows; ++r)
          for (int c = 0; c < da.cols; ++c) da.at(r, c) += g.at(r, 0);
      }
      break;
    }
    case Op::kRowLse: {
      if (want(n.a)) {
        const Tensor& a = in_val(n.a);
        Tensor& da = ensure(n.a);
        for (int r = 0; r < a.rows; ++r) {
          const double lse = y.at(r, 0), gr = g.at(r, 0);
          for (int c = 0; c < a.cols; ++c)
            da.at(r, c) += gr * std::exp(a.at(r, c) - lse);
        }
      }
      break;
    }
    case Op::kDiagGaussLogPdf: {
      const Tensor& x = in_val(n.a);
      const Tensor& mu = in_val(n.b);
      const Tensor& lv = in_val(n.c);
      Tensor dx_full(x.rows, x.cols), dlv_full(x.rows, x.cols);
      const bool wx = want(n.a), wm = want(n.b), wl = want(n.c);
      for (int r = 0; r < x.rows; ++r) {
        const double gr = g.at(r, 0);
        for (int c = 0; c < x.cols; ++c) {
          const double l = bval(lv, r, c);
          const double inv_var = std::exp(-l);
          const double diff = x.at(r, c) - bval(mu, r, c);
          if (wx || wm) dx_full.at(r, c) = -gr * diff * inv_var;
          if (wl)
            dlv_full.at(r, c) = gr * 0.5 * (diff * diff * inv_var - 1.0);
        }
      }
      if (wx) reduce_into(ensure(n.a), dx_full);
      if (wm) {
        for (auto& t : dx_full.v) t = -t;
        reduce_into(ensure(n.b), dx_full);
      }
      if (wl) reduce_into(ensure(n.c), dlv_full);
      break;
    }
    case Op::kConcatCols: {
      const Tensor& a = in_val(n.a);
      if (want(n.a)) {
        Tensor& da = ensure(n.a);
        for (int r = 0; r < da.rows; ++r)
          for (int c = 0; c < da.cols; ++c) da.at(r, c) += g.at(r, c);
      }
      if (want(n.b)) {
        Tensor& db = ensure(n.b);
        for (int r = 0; r < db.rows; ++r)
          for (int c = 0; c < db.cols; ++c)
            db.at(r, c) += g.at(r, c + a.cols);
      }
      break;
    }
    case Op::kRepeatRows: {
      if (want(n.a)) {
        Tensor& da = ensure(n.a);
        const int times = static_cast<int>(n.aux);
        for (int r = 0; r < da.rows; ++r)
          for (int t = 0; t < times; ++t)
            for (int c = 0; c < da.cols; ++c)
              da.at(r, c) += g.at(r * times + t, c);
      }
      break;
    }
    case Op::kReshape: {
      if (want(n.a)) {
        Tensor& da = ensure(n.a);
        for (size_t i = 0; i < da.size(); ++i) da.v[i] += g.v[i];
      }
      break;
    }
    case Op::kSliceCols: {
      if (want(n.a)) {
        Tensor& da = ensure(n.a);
        const int start = static_cast<int>(n.aux);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) da.at(r, start + c) += g.at(r, c);
      }
      break;
    }
    case Op::kDiv: {
      const Tensor& a = in_val(n.a);
      const Tensor& b = in_val(n.b);
      if (want(n.a)) {
        Tensor t(g.rows, g.cols);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c)
            t.at(r, c) = g.at(r, c) / bval(b, r, c);
        reduce_into(ensure(n.a), t);
      }
      if (want(n.b)) {
        Tensor t(g.rows, g.cols);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) {
            const double bb = bval(b, r, c);
            t.at(r, c) = -g.at(r, c) * bval(a, r, c) / (bb * bb);
          }
        reduce_into(ensure(n.b), t);
      }
      break;
    }
  }
}

namespace {

Graph* same_graph(Value a, Value b) {
  if (a.g != b.g) throw std::logic_error("op: values from different graphs");
  return a.g;
}

Value binary(Op op, const char* name, Value a, Value b) {
  Graph* g = same_graph(a, b);
  const Tensor& ta = g->node_val(a.id);
  const Tensor& tb = g->node_val(b.id);
  int orows, ocols;
  if (!broadcastable(ta, tb, orows, ocols)) shape_error(name, ta, tb);
  Tensor out(orows, ocols);
  for (int r = 0; r < orows; ++r)
    for (int c = 0; c < ocols; ++c) {
      const double x = bval(ta, r, c), y = bval(tb, r, c);
      out.at(r, c) = op == Op::kAdd ? x + y : op == Op::kSub ? x - y : x * y;
    }
  return g->emit(op, std::move(out), a.id, b.id, -1, 0, 0);
}

Value unary(Op op, Value a, double aux = 0, double aux2 = 0) {
  Graph* g = a.g;
  Tensor out = g->node_val(a.id);
  switch (op) {
    case Op::kScale:
      for (auto& x : out.v) x *= aux;
      break;
    case Op::kAddConst:
      for (auto& x : out.v) x += aux;
      break;
    case Op::kLeakyRelu:
      for (auto& x : out.v) x = x > 0 ? x : aux * x;
      break;
    case Op::kTanh:
      for (auto& x : out.v) x = std::tanh(x);
      break;
    case Op::kExp:
      for (auto& x : out.v) x = std::exp(x);
      break;
    case Op::kLog:
      for (auto& x : out.v) x = std::log(x);
      break;
    case Op::kSquare:
      for (auto& x : out.v) x = x * x;
      break;
    case Op::kSqrt:
      for (auto& x : out.v) x = std::sqrt(x);
      break;
    case Op::kNeg:
      for (auto& x : out.v) x = -x;
      break;
    case Op::kClamp:
      for (auto& x : out.v) x = std::min(std::max(x, aux), aux2);
      break;
    default:
      throw std::logic_error("unary: bad op");
  }
  return g->emit(op, std::move(out), a.id, -1, -1, aux, aux2);
}

}  // namespace

Value add(Value a, Value b) { return binary(Op::kAdd, "add", a, b); }
Value sub(Value a, Value b) { return binary(Op::kSub, "sub", a, b); }
Value mul(Value a, Value b) { return binary(Op::kMul, "mul", a, b); }
Value scale(Value a, double c) { return unary(Op::kScale, a, c); }
Value add_const(Value a, double c) { return unary(Op::kAddConst, a, c); }
Value leaky_relu(Value a, double slope) { return unary(Op::kLeakyRelu, a, slope); }
Value tanh_(Value a) { return unary(Op::kTanh, a); }
Value exp_(Value a) { return unary(Op::kExp, a); }
Value log_(Value a) { return unary(Op::kLog, a); }
Value square(Value a) { return unary(Op::kSquare, a); }
Value sqrt_(Value a) { return unary(Op::kSqrt, a); }
Value neg(Value a) { return unary(Op::kNeg, a); }
Value clamp(Value a, double lo, double hi) { return unary(Op::kClamp, a, lo, hi); }

Value matmul(Value a, Value b) {
  Graph* g = same_graph(a, b);
  const Tensor& ta = g->node_val(a.id);
  const Tensor& tb = g->node_val(b.id);
  if (ta.cols != tb.rows) shape_error("matmul", ta, tb);
  Tensor out(ta.rows, tb.cols);
  matmul(ta, tb, out);
  return g->emit(Op::kMatmul, std::move(out), a.id, b.id, -1, 0, 0);
}

Value affine(Value x, Value w, Value b) { return add(matmul(x, w), b); }

Value sum_all(Value a) {
  double s = 0;
  for (double x : a.g->node_val(a.id).v) s += x;
  return a.g->emit(Op::kSumAll, Tensor::scalar(s), a.id, -1, -1, 0, 0);
}

Value mean_all(Value a) {
  const Tensor& t = a.g->node_val(a.id);
  double s = 0;
  for (double x : t.v) s += x;
  return a.g->emit(Op::kMeanAll, Tensor::scalar(s / t.size()), a.id, -1, -1, 0, 0);
}

Value row_sum(Value a) {
  const Tensor& t = a.g->node_val(a.id);
  Tensor out(t.rows, 1);
  for (int r = 0; r < t.rows; ++r) {
    double s = 0;
    for (int c = 0; c < t.cols; ++c) s += t.at(r, c);
    out.at(r, 0) = s;
  }
  return a.g->emit(Op::kRowSum, std::move(out), a.id, -1, -1, 0, 0);
}

Value row_lse(Value a) {
  const Tensor& t = a.g->node_val(a.id);
  Tensor out(t.rows, 1);
  for (int r = 0; r < t.rows; ++r) {
    double m = t.at(r, 0);
    for (int c = 1; c < t.cols; ++c) m = std::max(m, t.at(r, c));
    double s = 0;
    for (int c = 0; c < t.cols; ++c) s += std::exp(t.at(r, c) - m);
    out.at(r, 0) = m + std::log(s);
  }
  return a.g->emit(Op::kRowLse, std::move(out), a.id, -1, -1, 0, 0);
}

Value diag_gauss_logpdf(Value x, Value mean, Value logvar) {
  Graph* g = same_graph(x, mean);
  same_graph(x, logvar);
  const Tensor& tx = g->node_val(x.id);
  const Tensor& tm = g->node_val(mean.id);
  const Tensor& tl = g->node_val(logvar.id);
  if (!tx.same_shape(tm)) shape_error("diag_gauss_logpdf(x,mean)", tx, tm);
  const bool lv_ok = (tl.rows == 1 || tl.rows == tx.rows) &&
                     (tl.cols == 1 || tl.cols == tx.cols);
  if (!lv_ok) shape_error("diag_gauss_logpdf(x,logvar)", tx, tl);
  Tensor out(tx.rows, 1);
  for (int r = 0; r < tx.rows; ++r) {
    double s = 0;
    for (int c = 0; c < tx.cols; ++c) {
      const double l = bval(tl, r, c);
      const double diff = tx.at(r, c) - tm.at(r, c);
      s += -0.5 * (kLog2Pi + l + diff * diff * std::exp(-l));
    }
    out.at(r, 0) = s;
  }
  return g->emit(Op::kDiagGaussLogPdf, std::move(out), x.id, mean.id, logvar.id,
                 0, 0);
}

Value concat_cols(Value a, Value b) {
  Graph* g = same_graph(a, b);
  const Tensor& ta = g->node_val(a.id);
  const Tensor& tb = g->node_val(b.id);
  if (ta.rows != tb.rows) shape_error("concat_cols", ta, tb);
  Tensor out(ta.rows, ta.cols + tb.cols);
  for (int r = 0; r < ta.rows; ++r) {
    for (int c = 0; c < ta.cols; ++c) out.at(r, c) = ta.at(r, c);
    for (int c = 0; c < tb.cols; ++c) out.at(r, ta.cols + c) = tb.at(r, c);
  }
  return g->emit(Op::kConcatCols, std::move(out), a.id, b.id, -1, 0, 0);
}

Value repeat_rows(Value a, int times) {
  const Tensor& t = a.g->node_val(a.id);
  Tensor out(t.rows * times, t.cols);
  for (int r = 0; r < t.rows; ++r)
    for (int k = 0; k < times; ++k)
      for (int c = 0; c < t.cols; ++c)
        out.at(r * times + k, c) = t.at(r, c);
  return a.g->emit(Op::kRepeatRows, std::move(out), a.id, -1, -1, times, 0);
}

Value reshape(Value a, int rows, int cols) {
  const Tensor& t = a.g->node_val(a.id);
  if (static_cast<size_t>(rows) * cols != t.size())
    throw std::invalid_argument("reshape: size mismatch from " + t.shape_str() +
                                " to " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  Tensor out(rows, cols);
  out.v = t.v;
  return a.g->emit(Op::kReshape, std::move(out), a.id, -1, -1, 0, 0);
}

Value slice_cols(Value a, int start, int len) {
  const Tensor& t = a.g->node_val(a.id);
  if (start < 0 || len < 0 || start + len > t.cols)
    throw std::invalid_argument("slice_cols: range [" + std::to_string(start) +
                                "," + std::to_string(start + len) +
                                ") outside " + t.shape_str());
  Tensor out(t.rows, len);
  for (int r = 0; r < t.rows; ++r)
    for (int c = 0; c < len; ++c) out.at(r, c) = t.at(r, start + c);
  return a.g->emit(Op::kSliceCols, std::move(out), a.id, -1, -1, start, len);
}

Value div(Value a, Value b) {
  Graph* g = same_graph(a, b);
  const Tensor& ta = g->node_val(a.id);
  const Tensor& tb = g->node_val(b.id);
  int orows, ocols;
  if (!broadcastable(ta, tb, orows, ocols)) shape_error("div", ta, tb);
  Tensor out(orows, ocols);
  for (int r = 0; r < orows; ++r)
    for (int c = 0; c < ocols; ++c)
      out.at(r, c) = bval(ta, r, c) / bval(tb, r, c);
  return g->emit(Op::kDiv, std::move(out), a.id, b.id, -1, 0, 0);
}

Value softmax_rows(Value a) { return exp_(sub(a, row_lse(a))); }

}  // namespace vaelab
