#include "vaelab/smallmat.hpp"

#include <cmath>
#include <stdexcept>

namespace vaelab {

Tensor mat_transpose(const Tensor& a) {
  Tensor t(a.cols, a.rows);
  for (int r = 0; r < a.rows; ++r)
    for (int c = 0; c < a.cols; ++c) t.at(c, r) = a.at(r, c);
  return t;
}

Tensor mat_mul(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows, b.cols);
  matmul(a, b, out);
  return out;
}

Tensor mat_inverse(const Tensor& a) {
  if (a.rows != a.cols) throw std::invalid_argument("mat_inverse: not square");
  const int n = a.rows;
  Tensor w = a;
  Tensor inv(n, n);
  for (int i = 0; i < n; ++i) inv.at(i, i) = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(w.at(r, col)) > std::abs(w.at(piv, col))) piv = r;
    if (std::abs(w.at(piv, col)) < 1e-300)
      throw std::runtime_error("mat_inverse: singular matrix");
    if (piv != col)
      for (int c = 0; c < n; ++c) {
        std::swap(w.at(piv, c), w.at(col, c));
        std::swap(inv.at(piv, c), inv.at(col, c));
      }
    const double d = w.at(col, col);
    for (int c = 0; c < n; ++c) {
      w.at(col, c) /= d;
      inv.at(col, c) /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = w.at(r, col);
      if (f == 0.0) continue;
      for (int c = 0; c < n; ++c) {
        w.at(r, c) -= f * w.at(col, c);
        inv.at(r, c) -= f * inv.at(col, c);
      }
    }
  }
  return inv;
}

double mat_det(const Tensor& a) {
  if (a.rows != a.cols) throw std::invalid_argument("mat_det: not square");
  const int n = a.rows;
  Tensor w = a;
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(w.at(r, col)) > std::abs(w.at(piv, col))) piv = r;
    if (std::abs(w.at(piv, col)) < 1e-300) return 0.0;
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(w.at(piv, c), w.at(col, c));
      det = -det;
    }
    det *= w.at(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = w.at(r, col) / w.at(col, col);
      for (int c = col; c < n; ++c) w.at(r, c) -= f * w.at(col, c);
    }
  }
  return det;
}

Tensor mat_cholesky(const Tensor& a) {
  if (a.rows != a.cols) throw std::invalid_argument("mat_cholesky: not square");
  const int n = a.rows;
  Tensor l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a.at(i, j);
      for (int k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
      if (i == j) {
        if (s <= 0.0)
          throw std::runtime_error("mat_cholesky: not positive definite");
        l.at(i, i) = std::sqrt(s);
      } else {
        l.at(i, j) = s / l.at(j, j);
      }
    }
  }
  return l;
}

void mat_svd(const Tensor& a, Tensor& u, std::vector<double>& s, Tensor& vt) {
  // One-sided Jacobi on the columns of a working copy of a.
  const int m = a.rows, n = a.cols;
  Tensor w = a;
  Tensor v(n, n);
  for (int i = 0; i < n; ++i) v.at(i, i) = 1.0;
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double app = 0, aqq = 0, apq = 0;
        for (int r = 0; r < m; ++r) {
          app += w.at(r, p) * w.at(r, p);
          aqq += w.at(r, q) * w.at(r, q);
          apq += w.at(r, p) * w.at(r, q);
        }
        off = std::max(off, std::abs(apq) / std::sqrt(app * aqq + 1e-300));
        if (std::abs(apq) < 1e-15 * std::sqrt(app * aqq) + 1e-300) continue;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t), sn = c * t;
        for (int r = 0; r < m; ++r) {
          const double wp = w.at(r, p), wq = w.at(r, q);
          w.at(r, p) = c * wp - sn * wq;
          w.at(r, q) = sn * wp + c * wq;
        }
        for (int r = 0; r < n; ++r) {
          const double vp = v.at(r, p), vq = v.at(r, q);
          v.at(r, p) = c * vp - sn * vq;
          v.at(r, q) = sn * vp + c * vq;
        }
      }
    }
    if (off < 1e-14) break;
  }
  s.assign(n, 0.0);
  u = Tensor(m, n);
  for (int c = 0; c < n; ++c) {
    double norm = 0;
    for (int r = 0; r < m; ++r) norm += w.at(r, c) * w.at(r, c);
    norm = std::sqrt(norm);
    s[c] = norm;
    for (int r = 0; r < m; ++r)
      u.at(r, c) = norm > 1e-300 ? w.at(r, c) / norm : (r == c ? 1.0 : 0.0);
  }
  // Sort singular values descending, permuting u and v columns in step.
  for (int i = 0; i < n; ++i) {
    int best = i;
    for (int j = i + 1; j < n; ++j)
      if (s[j] > s[best]) best = j;
    if (best != i) {
      std::swap(s[i], s[best]);
      for (int r = 0; r < m; ++r) std::swap(u.at(r, i), u.at(r, best));
      for (int r = 0; r < n; ++r) std::swap(v.at(r, i), v.at(r, best));
    }
  }
  vt = mat_transpose(v);
}

}  // namespace vaelab
