#pragma once

#include "vaelab/tensor.hpp"

namespace vaelab {

// Dense helpers for the tiny matrices in this artifact (n <= 8).

Tensor mat_transpose(const Tensor& a);
Tensor mat_mul(const Tensor& a, const Tensor& b);
/// Gauss-Jordan inverse with partial pivoting. Throws on singular input.
Tensor mat_inverse(const Tensor& a);
double mat_det(const Tensor& a);
/// Lower-triangular Cholesky factor. Throws if not positive definite.
Tensor mat_cholesky(const Tensor& a);
/// One-sided Jacobi SVD a = U diag(s) V^T for m >= n. Singular values
/// descending.
void mat_svd(const Tensor& a, Tensor& u, std::vector<double>& s, Tensor& vt);

}  // namespace vaelab
