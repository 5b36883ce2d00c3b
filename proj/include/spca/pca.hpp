#pragma once

// Classical PCA baseline via thin SVD of the centered data.

#include "spca/admm.hpp"
#include "spca/core.hpp"
#include "spca/linalg.hpp"

#include <string>

namespace spca {

struct PcaModel {
  Vector mu;
  Matrix components;          // p x d, orthonormal columns
  Vector explained_variance;  // length d, non-increasing

  Index features() const { return mu.size(); }
  Index dim() const { return components.cols(); }
};

/// Directions whose singular value is at most this fraction of the largest
/// are treated as beyond the data rank and replaced by the completion.
inline constexpr double kPcaRankTolerance = 1e-10;

inline PcaModel pca_fit(const Matrix& d, Index dims) {
  if (d.rows() < 1) throw ShapeMismatch("pca_fit needs at least one row");
  if (dims < 1 || dims > d.cols())
    throw ShapeMismatch("pca dims must lie in [1, " + std::to_string(d.cols()) + "], got " +
                        std::to_string(dims));
  require_finite(d, "data");
  const Index bound = std::min(d.rows() - 1, d.cols());
  if (dims > bound)
    warn("PCA dims " + std::to_string(dims) + " exceeds data rank bound " + std::to_string(bound) +
         "; padding with an orthonormal completion");

  CenteredData centered = center(d);
  PcaModel model;
  model.mu = centered.mu;
  model.components = Matrix::Zero(d.cols(), dims);
  model.explained_variance = Vector::Zero(dims);

  Eigen::BDCSVD<Matrix> svd(centered.dtilde, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  Index rank = 0;
  const double cutoff = sv.size() > 0 ? kPcaRankTolerance * sv(0) : 0.0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  const Index taken = std::min(rank, dims);
  const double denom = d.rows() > 1 ? static_cast<double>(d.rows() - 1) : 1.0;
  for (Index j = 0; j < taken; ++j) {
    Vector v = svd.matrixV().col(j);
    linalg::fix_sign(v);
    model.components.col(j) = v;
    model.explained_variance(j) = sv(j) * sv(j) / denom;
  }
  if (taken < dims) {
    Matrix pad = linalg::orthonormal_completion(model.components.leftCols(taken), dims - taken);
    for (Index j = 0; j < pad.cols(); ++j) {
      Vector v = pad.col(j);
      linalg::fix_sign(v);
      model.components.col(taken + j) = v;
    }
  }
  return model;
}

inline Matrix pca_transform(const PcaModel& model, const Matrix& d_new) {
  if (d_new.cols() != model.features())
    throw ShapeMismatch("pca_transform: data has " + std::to_string(d_new.cols()) +
                        " features, model expects " + std::to_string(model.features()));
  return (d_new.rowwise() - model.mu.transpose()) * model.components;
}

}  // namespace spca
