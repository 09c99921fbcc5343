#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace vaelab {

/// Dense row-major matrix of doubles. Scalars are 1x1, row vectors 1xN.
/// Shape is fixed at construction; operations never resize in place.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {
    assert(r >= 0 && c >= 0);
  }
  Tensor(int r, int c, double fill)
      : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}
  Tensor(std::initializer_list<std::initializer_list<double>> m) {
    rows = static_cast<int>(m.size());
    cols = rows ? static_cast<int>(m.begin()->size()) : 0;
    v.reserve(static_cast<size_t>(rows) * cols);
    for (const auto& row : m) {
      assert(static_cast<int>(row.size()) == cols);
      for (double x : row) v.push_back(x);
    }
  }

  static Tensor scalar(double x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }
  static Tensor row(const std::vector<double>& xs) {
    Tensor t(1, static_cast<int>(xs.size()));
    t.v = xs;
    return t;
  }
  static Tensor col(const std::vector<double>& xs) {
    Tensor t(static_cast<int>(xs.size()), 1);
    t.v = xs;
    return t;
  }

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  double item() const {
    if (!is_scalar()) throw std::logic_error("Tensor::item: not a scalar");
    return v[0];
  }
  std::string shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
  }

  bool all_finite() const;
};

/// y += a * x, elementwise over the raw buffers.
void axpy(double a, const Tensor& x, Tensor& y);

/// out = a * b (matrix product). Shapes must agree; out must be preallocated.
void matmul(const Tensor& a, const Tensor& b, Tensor& out);
/// out += a^T * b
void matmul_at_b_acc(const Tensor& a, const Tensor& b, Tensor& out);
/// out += a * b^T
void matmul_a_bt_acc(const Tensor& a, const Tensor& b, Tensor& out);

}  // namespace vaelab
