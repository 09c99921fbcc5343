#include <cmath>

#include "doctest.h"
#include "vaelab/graph.hpp"
#include "vaelab/params.hpp"
#include "vaelab/rng.hpp"

using namespace vaelab;

namespace {

// Builds a 3x50x50x2 leaky-rectifier network loss for gradient checking.
ParameterSet random_net_params(Rng& rng, int in, int hidden, int layers, int out) {
  ParameterSet ps;
  int prev = in;
  for (int l = 0; l < layers; ++l) {
    Tensor w(prev, hidden);
    for (auto& x : w.v) x = rng.normal() / std::sqrt(prev);
    ps.add("w" + std::to_string(l), w);
    ps.add("b" + std::to_string(l), rng.normal_tensor(1, hidden));
    prev = hidden;
  }
  Tensor w(prev, out);
  for (auto& x : w.v) x = rng.normal() / std::sqrt(prev);
  ps.add("w_out", w);
  ps.add("b_out", rng.normal_tensor(1, out));
  return ps;
}

Value net_forward(Graph& g, const BoundParams& bp, const ParameterSet& ps,
                  Value x, int layers) {
  Value h = x;
  for (int l = 0; l < layers; ++l) {
    size_t wi = 2 * l, bi = 2 * l + 1;
    (void)ps;
    h = leaky_relu(affine(h, bp[wi], bp[bi]), 0.01);
  }
  return affine(h, bp[2 * layers], bp[2 * layers + 1]);
}

ScalarFn net_loss_fn(const Tensor& x, int layers) {
  auto build = [x, layers](Graph& g, const ParameterSet& ps) {
    BoundParams bp = bind(g, ps);
    Value xin = g.leaf(x);
    Value out = net_forward(g, bp, ps, xin, layers);
    return std::pair{mean_all(square(out)), bp};
  };
  ScalarFn fn;
  fn.value = [build](const ParameterSet& ps) {
    Graph g;
    auto [loss, bp] = build(g, ps);
    return g.val(loss).item();
  };
  fn.gradient = [build](const ParameterSet& ps) {
    Graph g;
    auto [loss, bp] = build(g, ps);
    g.backward(loss);
    return collect_grads(g, ps, bp);
  };
  return fn;
}

}  // namespace

TEST_CASE("affine identity maps input through") {
  Graph g;
  Value x = g.leaf(Tensor{{3.0, -2.0}});
  Value w = g.leaf(Tensor{{1.0, 0.0}, {0.0, 1.0}});
  Value b = g.leaf(Tensor{{0.0, 0.0}});
  Value y = affine(x, w, b);
  CHECK(g.val(y).at(0, 0) == doctest::Approx(3.0));
  CHECK(g.val(y).at(0, 1) == doctest::Approx(-2.0));
}

TEST_CASE("leaky rectifier at -1 with slope 0.01") {
  Graph g;
  Value y = leaky_relu(g.leaf(Tensor::scalar(-1.0)), 0.01);
  CHECK(g.val(y).item() == doctest::Approx(-0.01));
}

TEST_CASE("log-sum-exp of (1000, 1000) stays finite") {
  Graph g;
  Value y = row_lse(g.leaf(Tensor{{1000.0, 1000.0}}));
  CHECK(g.val(y).item() == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("log-sum-exp translation stability") {
  Rng rng(7);
  for (double c : {1e-3, 1.0, 1e3, 1e6, -1e6}) {
    Tensor v = rng.normal_tensor(1, 8);
    Graph g;
    Value a = row_lse(g.leaf(v));
    Tensor vc = v;
    for (auto& x : vc.v) x += c;
    Value b = row_lse(g.leaf(vc));
    CHECK(std::abs(g.val(b).item() - g.val(a).item() - c) <= 1e-12 * std::max(1.0, std::abs(c)));
  }
}

TEST_CASE("f(x)=x^2 has gradient 6 at x=3") {
  Graph g;
  Value x = g.leaf(Tensor::scalar(3.0), true);
  Value y = square(x);
  g.backward(y);
  CHECK(g.grad(x).item() == doctest::Approx(6.0));
}

TEST_CASE("gradient of log-sum-exp is softmax and sums to 1") {
  Rng rng(3);
  Graph g;
  Value x = g.leaf(rng.normal_tensor(1, 6), true);
  Value y = row_lse(x);
  g.backward(y);
  const Tensor& gr = g.grad(x);
  double s = 0;
  for (int c = 0; c < 6; ++c) {
    double soft = std::exp(g.val(x).at(0, c) - g.val(y).item());
    CHECK(gr.at(0, c) == doctest::Approx(soft).epsilon(1e-12));
    s += gr.at(0, c);
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("non-scalar backward target is rejected") {
  Graph g;
  Value x = g.leaf(Tensor{{1.0, 2.0}}, true);
  CHECK_THROWS_AS(g.backward(square(x)), std::invalid_argument);
}

TEST_CASE("shape mismatch names the operation and shapes") {
  Graph g;
  Value a = g.leaf(Tensor(2, 3));
  Value b = g.leaf(Tensor(4, 5));
  try {
    matmul(a, b);
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x5") != std::string::npos);
  }
}

TEST_CASE("random 3x50x50x2 network gradient matches finite differences") {
  Rng rng(11);
  ParameterSet ps = random_net_params(rng, 2, 50, 3, 2);
  Tensor x = rng.normal_tensor(4, 2);
  double err = check_gradients(net_loss_fn(x, 3), ps, 1e-5);
  CHECK(err <= 1e-5);
}

TEST_CASE("quadratic form gradient check is near-exact") {
  Rng rng(5);
  ParameterSet ps;
  ps.add("x", rng.normal_tensor(1, 4));
  ScalarFn fn;
  auto build = [](Graph& g, const ParameterSet& p) {
    BoundParams bp = bind(g, p);
    return std::pair{sum_all(square(bp[0])), bp};
  };
  fn.value = [build](const ParameterSet& p) {
    Graph g;
    return g.val(build(g, p).first).item();
  };
  fn.gradient = [build](const ParameterSet& p) {
    Graph g;
    auto [y, bp] = build(g, p);
    g.backward(y);
    return collect_grads(g, p, bp);
  };
  CHECK(check_gradients(fn, ps, 1e-5) <= 1e-8);
}

TEST_CASE("every primitive matches central differences at random points") {
  Rng rng(23);
  struct Case {
    const char* name;
    std::function<Value(Graph&, Value, Value)> f;
    bool positive_a = false;
  };
  std::vector<Case> cases = {
      {"add", [](Graph&, Value a, Value b) { return add(a, reshape(b, 2, 6)); }},
      {"sub", [](Graph&, Value a, Value b) { return sub(a, reshape(b, 2, 6)); }},
      {"mul", [](Graph&, Value a, Value b) { return mul(a, reshape(b, 2, 6)); }},
      {"matmul", [](Graph&, Value a, Value b) { return matmul(a, reshape(b, 3, 4)); }},
      {"leaky_relu", [](Graph&, Value a, Value) { return leaky_relu(a, 0.01); }},
      {"tanh", [](Graph&, Value a, Value) { return tanh_(a); }},
      {"exp", [](Graph&, Value a, Value) { return exp_(a); }},
      {"log", [](Graph&, Value a, Value) { return log_(a); }, true},
      {"square", [](Graph&, Value a, Value) { return square(a); }},
      {"sqrt", [](Graph&, Value a, Value) { return sqrt_(a); }, true},
      {"lse", [](Graph&, Value a, Value) { return row_lse(a); }},
      {"scale", [](Graph&, Value a, Value) { return scale(a, -1.7); }},
      {"gauss",
       [](Graph& g, Value a, Value b) {
         Value lv = clamp(reshape(b, 4, 3), -6.0, 6.0);
         return diag_gauss_logpdf(a, scale(a, 0.5), lv);
       }},
      {"concat", [](Graph&, Value a, Value b) {
         return concat_cols(a, reshape(b, 2, 6));
       }},
      {"repeat", [](Graph&, Value a, Value) { return repeat_rows(a, 3); }},
  };
  for (const auto& c : cases) {
    for (int trial = 0; trial < 100 / static_cast<int>(cases.size()) + 3; ++trial) {
      ParameterSet ps;
      Tensor a = rng.normal_tensor(2, 6);
      if (c.positive_a)
        for (auto& x : a.v) x = std::abs(x) + 0.5;
      ps.add("a", a);
      ps.add("b", rng.normal_tensor(1, 12));
      auto build = [&c](Graph& g, const ParameterSet& p) {
        BoundParams bp = bind(g, p);
        Value a4 = c.f(g, (std::string(c.name) == "matmul" || std::string(c.name) == "gauss")
                              ? reshape(bp[0], 4, 3)
                              : bp[0],
                        bp[1]);
        return std::pair{mean_all(a4), bp};
      };
      ScalarFn fn;
      fn.value = [&](const ParameterSet& p) {
        Graph g;
        return g.val(build(g, p).first).item();
      };
      fn.gradient = [&](const ParameterSet& p) {
        Graph g;
        auto [y, bp] = build(g, p);
        g.backward(y);
        return collect_grads(g, p, bp);
      };
      double err = check_gradients(fn, ps, 1e-5);
      INFO(c.name);
      CHECK(err <= 1e-5);
    }
  }
}

TEST_CASE("forward evaluation is deterministic") {
  Rng rng(99);
  ParameterSet ps = random_net_params(rng, 2, 20, 2, 2);
  Tensor x = rng.normal_tensor(8, 2);
  auto run = [&] {
    Graph g;
    BoundParams bp = bind(g, ps);
    return g.val(net_forward(g, bp, ps, g.leaf(x), 2)).v;
  };
  auto a = run();
  auto b = run();
  CHECK(a == b);
}

TEST_CASE("flatten/unflatten round-trip is the identity") {
  Rng rng(12);
  ParameterSet ps = random_net_params(rng, 3, 10, 2, 2);
  auto flat = ps.flatten();
  ParameterSet copy = ps.zeros_like();
  copy.unflatten(flat);
  for (size_t i = 0; i < ps.count(); ++i)
    CHECK(copy.item(i).value.v == ps.item(i).value.v);
  auto flat2 = copy.flatten();
  CHECK(flat == flat2);
}

TEST_CASE("broadcast add of row and column vectors") {
  Graph g;
  Value m = g.leaf(Tensor{{1, 2}, {3, 4}}, true);
  Value r = g.leaf(Tensor{{10, 20}}, true);
  Value c = g.leaf(Tensor{{100}, {200}}, true);
  Value y = add(add(m, r), c);
  CHECK(g.val(y).at(0, 0) == doctest::Approx(111));
  CHECK(g.val(y).at(1, 1) == doctest::Approx(224));
  g.backward(sum_all(y));
  CHECK(g.grad(r).at(0, 0) == doctest::Approx(2));
  CHECK(g.grad(c).at(1, 0) == doctest::Approx(2));
}
