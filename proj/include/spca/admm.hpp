#pragma once

// Sparse PCA by ADMM on
//
//   minimize  -||D x||^2 + lambda ||z||_1   s.t.  x = z,  ||z|| <= 1
//
// with D the column-centered data. One loading vector is found by iterating
//
//   x <- (rho I - 2 D^T D)^{-1} (rho z - y)
//   z <- P_ball( S_{lambda/rho}(x + y/rho) )
//   y <- y + rho (x - z)
//
// where S is soft-thresholding and P_ball the projection onto the unit ball
// (together the exact proximal map of lambda||.||_1 restricted to the ball).
// Further components come from deflating D <- D (I - x x^T).

#include "spca/core.hpp"
#include "spca/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace spca {

struct AdmmParams {
  /// Penalty parameter; unset means auto_rho() of the matrix being solved.
  std::optional<double> rho;
  /// Absolute l1 weight; unset means lambda_ratio * rho.
  std::optional<double> lambda;
  double lambda_ratio = 0.01;
  double tol = 1e-10;
  int max_iter = 10000;
  std::uint64_t seed = 0;

  void validate() const {
    if (rho && !(*rho > 0.0)) throw InvalidArgument("rho must be > 0");
    if (lambda && !(*lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
    if (!(lambda_ratio >= 0.0)) throw InvalidArgument("lambda_ratio must be >= 0");
    if (!(tol > 0.0)) throw InvalidArgument("tol must be > 0");
    if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  }

  double lambda_for(double resolved_rho) const { return lambda ? *lambda : lambda_ratio * resolved_rho; }
};

struct CenteredData {
  Matrix dtilde;
  Vector mu;
};

struct SparsePcaModel {
  Vector mu;
  Matrix loadings;  // p x dim, unit-norm columns

  Index features() const { return mu.size(); }
  Index dim() const { return loadings.cols(); }
};

inline CenteredData center(const Matrix& d) {
  if (d.rows() < 1) throw ShapeMismatch("center needs at least one row");
  CenteredData out;
  out.mu = d.colwise().mean().transpose();
  out.dtilde = d.rowwise() - out.mu.transpose();
  return out;
}

/// The projected iteration is locally stable only for rho > 4 sigma_max^2;
/// 5 leaves a margin.
inline constexpr double kAutoRhoFactor = 5.0;

inline double rho_from_sigma2(double sigma2) { return sigma2 > 0.0 ? kAutoRhoFactor * sigma2 : 1.0; }

/// kAutoRhoFactor * sigma_max(dtilde)^2, or 1 for a zero matrix.
inline double auto_rho(const Matrix& dtilde) { return rho_from_sigma2(linalg::sigma_max_squared(dtilde)); }

/// Cached solver for (rho I - 2 D^T D) x = b. Factors the p x p system
/// directly, or the n x n system (rho/2 I - D D^T) through the Woodbury
/// identity when n < p.
class XUpdateSolver {
 public:
  XUpdateSolver(const Matrix& dtilde, double rho) : dtilde_(dtilde), rho_(rho) {
    if (!(rho > 0.0)) throw InvalidArgument("rho must be > 0");
    woodbury_ = dtilde.rows() < dtilde.cols();
    Matrix system;
    if (woodbury_) {
      system = -dtilde * dtilde.transpose();
      system.diagonal().array() += rho / 2.0;
    } else {
      system = -2.0 * dtilde.transpose() * dtilde;
      system.diagonal().array() += rho;
    }
    llt_.compute(system);
    if (llt_.info() != Eigen::Success)
      throw NotPositiveDefinite("rho = " + std::to_string(rho) +
                                " does not make rho I - 2 D^T D positive definite");
  }

  Vector solve(const Vector& rhs) const {
    if (rhs.size() != dtilde_.cols()) throw ShapeMismatch("x-update right-hand side has wrong length");
    if (!woodbury_) return llt_.solve(rhs);
    const Vector t = llt_.solve(dtilde_ * rhs);
    return (rhs + dtilde_.transpose() * t) / rho_;
  }

  double rho() const { return rho_; }

 private:
  const Matrix& dtilde_;
  double rho_;
  bool woodbury_ = false;
  Eigen::LLT<Matrix> llt_;
};

inline Vector x_update(const Matrix& dtilde, const Vector& z, const Vector& y, double rho) {
  if (z.size() != dtilde.cols() || y.size() != dtilde.cols())
    throw ShapeMismatch("x_update: z and y must have length p");
  return XUpdateSolver(dtilde, rho).solve(rho * z - y);
}

inline Vector soft_threshold(const Vector& v, double kappa) {
  if (!(kappa >= 0.0)) throw InvalidArgument("soft_threshold: kappa must be >= 0");
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i)) - kappa;
    out(i) = mag > 0.0 ? std::copysign(mag, v(i)) : 0.0;
  }
  return out;
}

inline Vector z_update(const Vector& x, const Vector& y, double rho, double lambda) {
  if (!(rho > 0.0)) throw InvalidArgument("z_update: rho must be > 0");
  if (x.size() != y.size()) throw ShapeMismatch("z_update: x and y lengths differ");
  return soft_threshold(x + y / rho, lambda / rho);
}

inline Vector project_unit_ball(Vector v) {
  const double n = v.norm();
  if (n > 1.0) v /= n;
  return v;
}

inline Vector y_update(const Vector& y, const Vector& x, const Vector& z, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("y_update: rho must be > 0");
  if (x.size() != y.size() || z.size() != y.size()) throw ShapeMismatch("y_update: length mismatch");
  return y + rho * (x - z);
}

/// Diagnostics for one extracted loading vector.
struct ComponentTrace {
  Vector loading;
  Index iterations = 0;
  double rho = 0.0;
  double lambda = 0.0;
  double last_step = 0.0;        // ||x^{k+1} - x^k|| at exit
  double primal_residual = 0.0;  // ||x - z|| at exit
  double x_norm = 0.0;
  bool null_space_completion = false;
};

inline Vector initial_direction(Index p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Vector v(p);
  double n = 0.0;
  while (n == 0.0) {
    for (Index i = 0; i < p; ++i) v(i) = normal(gen);
    n = v.norm();
  }
  return v / n;
}

/// Runs the ADMM iteration for one sparse loading vector and returns it with
/// diagnostics. The returned loading is the normalized z iterate, which
/// carries the exact zeros of the soft-threshold, signed so that its
/// largest-magnitude entry is positive.
inline ComponentTrace solve_component(const Matrix& dtilde, const AdmmParams& params) {
  params.validate();
  const Index p = dtilde.cols();
  if (p < 1) throw ShapeMismatch("data has no features");

  ComponentTrace trace;
  trace.rho = params.rho ? *params.rho : auto_rho(dtilde);
  trace.lambda = params.lambda_for(trace.rho);
  const double rho = trace.rho;
  const XUpdateSolver solver(dtilde, rho);

  Vector z = initial_direction(p, params.seed);
  Vector x = z;
  Vector y = Vector::Zero(p);
  bool converged = false;
  for (int k = 1; k <= params.max_iter; ++k) {
    Vector x_next = solver.solve(rho * z - y);
    z = project_unit_ball(soft_threshold(x_next + y / rho, trace.lambda / rho));
    y += rho * (x_next - z);
    trace.last_step = (x_next - x).norm();
    x = std::move(x_next);
    trace.iterations = k;
    if (!std::isfinite(trace.last_step) || !y.allFinite())
      throw MaxIterExceeded("ADMM iterates diverged at iteration " + std::to_string(k) +
                            " (rho = " + std::to_string(rho) + ")");
    if (trace.last_step <= params.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw MaxIterExceeded("no convergence after " + std::to_string(params.max_iter) +
                          " iterations (last step " + std::to_string(trace.last_step) + ")");

  trace.primal_residual = (x - z).norm();
  trace.x_norm = x.norm();
  const double zn = z.norm();
  if (trace.x_norm <= 1e-12 || zn <= 1e-12)
    throw DegenerateComponent("loading collapsed to zero (lambda = " + std::to_string(trace.lambda) +
                              " is too large for this data)");
  trace.loading = z / zn;
  linalg::fix_sign(trace.loading);
  return trace;
}

inline Vector extract_component(const Matrix& dtilde, const AdmmParams& params) {
  return solve_component(dtilde, params).loading;
}

inline Matrix deflate(const Matrix& dtilde, const Vector& x) {
  if (x.size() != dtilde.cols()) throw ShapeMismatch("deflate: direction has wrong length");
  if (std::abs(x.norm() - 1.0) > 1e-9) throw InvalidArgument("deflate: direction must have unit norm");
  return dtilde - (dtilde * x) * x.transpose();
}

/// Per-component seed: component i of a fit with `seed` always starts from
/// the same point, so fitting more components extends a smaller fit.
inline std::uint64_t component_seed(std::uint64_t seed, Index component) {
  std::uint64_t s = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(component) + 1);
  s = (s ^ (s >> 30)) * 0xBF58476D1CE4E5B9ULL;
  s = (s ^ (s >> 27)) * 0x94D049BB133111EBULL;
  return s ^ (s >> 31);
}

struct FitTrace {
  std::vector<ComponentTrace> components;
  /// ||deflate(D, x) x|| / ||D|| for each component (0 when D is zero).
  std::vector<double> deflation_residuals;
};

/// Relative size below which a deflated matrix is treated as carrying no variance.
inline constexpr double kNullVarianceRatio = 1e-12;

inline SparsePcaModel fit(const Matrix& d, Index dim, const AdmmParams& params,
                          FitTrace* trace = nullptr) {
  params.validate();
  if (dim < 1 || dim > d.cols())
    throw InvalidArgument("dim must lie in [1, " + std::to_string(d.cols()) + "], got " +
                          std::to_string(dim));
  require_finite(d, "data");
  if (dim > std::min(d.rows() - 1, d.cols()))
    warn("sparse PCA dim " + std::to_string(dim) + " exceeds data rank bound " +
         std::to_string(std::min(d.rows() - 1, d.cols())) + "; trailing components carry no variance");

  CenteredData centered = center(d);
  SparsePcaModel model{centered.mu, Matrix::Zero(d.cols(), dim)};
  Matrix current = std::move(centered.dtilde);
  const double initial_sigma2 = linalg::sigma_max_squared(current);

  for (Index i = 0; i < dim; ++i) {
    ComponentTrace comp;
    const double sigma2 = linalg::sigma_max_squared(current);
    if (sigma2 <= kNullVarianceRatio * kNullVarianceRatio * initial_sigma2 || sigma2 == 0.0) {
      comp.loading = linalg::orthonormal_completion(model.loadings.leftCols(i), 1).col(0);
      comp.null_space_completion = true;
    } else {
      AdmmParams p = params;
      p.seed = component_seed(params.seed, i);
      if (!p.rho) p.rho = rho_from_sigma2(sigma2);
      try {
        comp = solve_component(current, p);
      } catch (const Error& e) {
        rethrow_with_context(e, "component " + std::to_string(i));
      }
    }
    model.loadings.col(i) = comp.loading;
    const double norm_before = current.norm();
    current = deflate(current, comp.loading);
    if (trace) {
      trace->deflation_residuals.push_back(
          norm_before > 0.0 ? (current * comp.loading).norm() / norm_before : 0.0);
      trace->components.push_back(std::move(comp));
    }
  }
  return model;
}

inline Matrix transform(const SparsePcaModel& model, const Matrix& d_new) {
  if (d_new.cols() != model.features())
    throw ShapeMismatch("transform: data has " + std::to_string(d_new.cols()) +
                        " features, model expects " + std::to_string(model.features()));
  return (d_new.rowwise() - model.mu.transpose()) * model.loadings;
}

}  // namespace spca
