#pragma once

// 1-nearest-neighbor and one-vs-all kernel ridge regression with an RBF kernel.

#include "spca/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace spca {

struct LabeledFeatures {
  Matrix features;          // n x q
  std::vector<int> labels;  // length n, ids in [0, n_classes)
  int n_classes = 0;

  void validate() const {
    if (features.rows() < 1) throw ShapeMismatch("labeled features need at least one row");
    if (static_cast<Index>(labels.size()) != features.rows())
      throw ShapeMismatch("labels length " + std::to_string(labels.size()) + " != rows " +
                          std::to_string(features.rows()));
    for (int l : labels)
      if (l < 0 || l >= n_classes)
        throw InvalidArgument("label " + std::to_string(l) + " outside [0, " +
                              std::to_string(n_classes) + ")");
  }
};

inline int nn_classify(const LabeledFeatures& train, const Eigen::Ref<const Vector>& query) {
  if (query.size() != train.features.cols())
    throw ShapeMismatch("query has " + std::to_string(query.size()) + " features, expected " +
                        std::to_string(train.features.cols()));
  Index best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < train.features.rows(); ++i) {
    const double dist = (train.features.row(i).transpose() - query).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return train.labels[static_cast<std::size_t>(best)];
}

inline Matrix squared_distances(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ShapeMismatch("kernel inputs have " + std::to_string(a.cols()) + " and " +
                        std::to_string(b.cols()) + " columns");
  Matrix d(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return d;
}

inline Matrix rbf_kernel(const Matrix& a, const Matrix& b, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("rbf sigma must be > 0");
  return (-squared_distances(a, b).array() / (2.0 * sigma * sigma)).exp().matrix();
}

struct KrrParams {
  std::optional<double> sigma;  // unset: median heuristic
  double c = 1e-3;

  void validate() const {
    if (sigma && !(*sigma > 0.0)) throw InvalidArgument("krr sigma must be > 0");
    if (!(c > 0.0)) throw InvalidArgument("krr c must be > 0");
  }
};

struct KrrModel {
  Matrix train_features;
  double sigma = 1.0;
  Matrix dual_weights;  // n x C
};

/// sigma^2 = median of pairwise squared distances between distinct training
/// rows (mean of the two middle values for an even count); 1 when that is 0.
inline double median_sigma(const Matrix& x) {
  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(x.rows() * (x.rows() - 1) / 2));
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = i + 1; j < x.rows(); ++j) d2.push_back((x.row(i) - x.row(j)).squaredNorm());
  if (d2.empty()) return 1.0;
  const auto mid = d2.size() / 2;
  std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
  double median = d2[mid];
  if (d2.size() % 2 == 0)
    median = 0.5 * (median + *std::max_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid)));
  return median > 0.0 ? std::sqrt(median) : 1.0;
}

inline Matrix one_hot(const std::vector<int>& labels, int n_classes) {
  Matrix y = Matrix::Zero(static_cast<Index>(labels.size()), n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Index>(i), labels[i]) = 1.0;
  return y;
}

inline KrrModel krr_fit(const LabeledFeatures& train, const KrrParams& params) {
  train.validate();
  params.validate();
  KrrModel model;
  model.train_features = train.features;
  model.sigma = params.sigma ? *params.sigma : median_sigma(train.features);
  Matrix system = rbf_kernel(train.features, train.features, model.sigma);
  system.diagonal().array() += params.c;
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success) throw SolveFailure("kernel system K + cI is not positive definite");
  model.dual_weights = llt.solve(one_hot(train.labels, train.n_classes));
  if (!model.dual_weights.allFinite()) throw SolveFailure("kernel ridge solve produced non-finite weights");
  return model;
}

/// Class scores k(query, train)^T A for every row of `queries`.
inline Matrix krr_scores(const KrrModel& model, const Matrix& queries) {
  if (queries.cols() != model.train_features.cols())
    throw ShapeMismatch("query has " + std::to_string(queries.cols()) + " features, expected " +
                        std::to_string(model.train_features.cols()));
  return rbf_kernel(queries, model.train_features, model.sigma) * model.dual_weights;
}

namespace detail {
inline int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& scores) {
  int best = 0;
  for (Index c = 1; c < scores.size(); ++c)
    if (scores(c) > scores(best)) best = static_cast<int>(c);
  return best;
}
}  // namespace detail

inline int krr_predict(const KrrModel& model, const Eigen::Ref<const Vector>& query) {
  return detail::argmax_lowest(krr_scores(model, query.transpose()).row(0));
}

inline std::vector<int> krr_predict_all(const KrrModel& model, const Matrix& queries) {
  const Matrix scores = krr_scores(model, queries);
  std::vector<int> out(static_cast<std::size_t>(queries.rows()));
  for (Index i = 0; i < queries.rows(); ++i) out[static_cast<std::size_t>(i)] = detail::argmax_lowest(scores.row(i));
  return out;
}

inline std::vector<int> nn_classify_all(const LabeledFeatures& train, const Matrix& queries) {
  std::vector<int> out(static_cast<std::size_t>(queries.rows()));
  for (Index i = 0; i < queries.rows(); ++i)
    out[static_cast<std::size_t>(i)] = nn_classify(train, queries.row(i).transpose());
  return out;
}

}  // namespace spca
