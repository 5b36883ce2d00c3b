#pragma once

#include "spca/core.hpp"

#include <algorithm>
#include <cmath>

namespace spca::linalg {

/// Largest squared singular value of `a`, from the smaller of the two Gram matrices.
inline double sigma_max_squared(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Matrix gram = a.rows() < a.cols() ? Matrix(a * a.transpose()) : Matrix(a.transpose() * a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolveFailure("eigenvalue iteration did not converge");
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

/// Flips `v` so that its largest-magnitude entry (lowest index on ties) is positive.
inline void fix_sign(Eigen::Ref<Vector> v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  if (v.size() > 0 && v(best) < 0) v = -v;
}

/// Extends the span of `basis` (p x k, any vectors) with `count` orthonormal
/// vectors orthogonal to it, by Gram-Schmidt over e_1, e_2, ... in order.
/// Columns of `basis` need not be orthonormal.
inline Matrix orthonormal_completion(const Matrix& basis, Index count) {
  const Index p = basis.rows();
  Matrix q(p, 0);
  auto append_orthogonal = [&](Vector v, double min_norm) {
    const double initial = v.norm();
    if (initial == 0.0) return false;
    for (int pass = 0; pass < 2; ++pass)
      for (Index j = 0; j < q.cols(); ++j) v -= q.col(j).dot(v) * q.col(j);
    const double n = v.norm();
    if (n <= min_norm * initial) return false;
    q.conservativeResize(Eigen::NoChange, q.cols() + 1);
    q.col(q.cols() - 1) = v / n;
    return true;
  };
  for (Index j = 0; j < basis.cols(); ++j) append_orthogonal(basis.col(j), 1e-10);
  const Index existing = q.cols();

  Matrix out(p, count);
  Index produced = 0;
  for (Index e = 0; e < p && produced < count; ++e) {
    if (append_orthogonal(Vector::Unit(p, e), 1e-6)) out.col(produced++) = q.col(q.cols() - 1);
  }
  if (produced < count)
    throw InvalidArgument("cannot complete " + std::to_string(existing) + " directions with " +
                          std::to_string(count) + " more in dimension " + std::to_string(p));
  return out;
}

}  // namespace spca::linalg
