#include "vaelab/tensor.hpp"

#include <cmath>

namespace vaelab {

bool Tensor::all_finite() const {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void axpy(double a, const Tensor& x, Tensor& y) {
  assert(x.size() == y.size());
  const double* __restrict xs = x.v.data();
  double* __restrict ys = y.v.data();
  const size_t n = x.size();
  for (size_t i = 0; i < n; ++i) ys[i] += a * xs[i];
}

void matmul(const Tensor& a, const Tensor& b, Tensor& out) {
  assert(a.cols == b.rows && out.rows == a.rows && out.cols == b.cols);
  const int m = a.rows, k = a.cols, n = b.cols;
  const double* __restrict pa = a.v.data();
  const double* __restrict pb = b.v.data();
  double* __restrict po = out.v.data();
  std::fill(out.v.begin(), out.v.end(), 0.0);
  for (int i = 0; i < m; ++i) {
    const double* ai = pa + static_cast<size_t>(i) * k;
    double* oi = po + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = pb + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) oi[j] += aip * bp[j];
    }
  }
}

void matmul_at_b_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  // out (a.cols x b.cols) += a^T b, with a: m x k, b: m x n
  assert(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
  const int m = a.rows, k = a.cols, n = b.cols;
  const double* __restrict pa = a.v.data();
  const double* __restrict pb = b.v.data();
  double* __restrict po = out.v.data();
  for (int i = 0; i < m; ++i) {
    const double* ai = pa + static_cast<size_t>(i) * k;
    const double* bi = pb + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      double* op = po + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) op[j] += aip * bi[j];
    }
  }
}

void matmul_a_bt_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  // out (a.rows x b.rows) += a b^T, with a: m x k, b: n x k
  assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
  const int m = a.rows, k = a.cols, n = b.rows;
  const double* __restrict pa = a.v.data();
  const double* __restrict pb = b.v.data();
  double* __restrict po = out.v.data();
  for (int i = 0; i < m; ++i) {
    const double* ai = pa + static_cast<size_t>(i) * k;
    double* oi = po + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = pb + static_cast<size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      oi[j] += acc;
    }
  }
}

}  // namespace vaelab
