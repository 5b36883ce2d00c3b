#include "spca/admm.hpp"
#include "spca/pca.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace spca;

namespace {

// Data with a clear spectral gap: gaussian columns scaled by decreasing weights.
Matrix gapped_data(Index n, Index p, std::mt19937_64& gen) {
  Matrix d = oracle::random_matrix(n, p, gen);
  for (Index j = 0; j < p; ++j) d.col(j) *= 3.0 / (1.0 + static_cast<double>(j));
  return d;
}

Index nnz(const Vector& v) { return (v.array() != 0.0).count(); }

AdmmParams lambda_zero() {
  AdmmParams p;
  p.lambda = 0.0;
  return p;
}

}  // namespace

TEST(Center, EqualRows) {
  Matrix d(3, 2);
  d << 1, 2, 1, 2, 1, 2;
  const CenteredData c = center(d);
  EXPECT_TRUE(c.dtilde.isZero(0.0));
  EXPECT_EQ(c.mu, Vector::LinSpaced(2, 1, 2));
}

TEST(Center, SmallExample) {
  Matrix d(2, 2);
  d << 1, 3, 3, 5;
  const CenteredData c = center(d);
  EXPECT_EQ(c.mu, (Vector(2) << 2, 4).finished());
  EXPECT_EQ(c.dtilde, (Matrix(2, 2) << -1, -1, 1, 1).finished());
}

TEST(Center, ColumnsSumToZero) {
  std::mt19937_64 gen(1);
  const CenteredData c = center(oracle::random_matrix(5, 3, gen));
  for (Index j = 0; j < 3; ++j) EXPECT_LE(std::abs(c.dtilde.col(j).sum()), 1e-12);
}

TEST(Center, NeedsRows) { EXPECT_THROW(center(Matrix(0, 3)), ShapeMismatch); }

TEST(AutoRho, ZeroMatrixFloor) { EXPECT_EQ(auto_rho(Matrix::Zero(3, 2)), 1.0); }

TEST(AutoRho, Identity) { EXPECT_NEAR(auto_rho(Matrix::Identity(2, 2)), 5.0, 1e-12); }

TEST(AutoRho, Diagonal) {
  Matrix d(2, 2);
  d << 3, 0, 0, 0;
  EXPECT_NEAR(auto_rho(d), 45.0, 1e-12);
}

TEST(AutoRho, MatchesOracleSpectrum) {
  std::mt19937_64 gen(2);
  for (auto [n, p] : {std::pair<Index, Index>{7, 4}, {3, 9}}) {
    const Matrix d = oracle::random_matrix(n, p, gen);
    const double top = oracle::right_singular(d).values(0);
    EXPECT_NEAR(auto_rho(d), kAutoRhoFactor * top, 1e-10 * top);
  }
}

TEST(XUpdate, ZeroData) {
  const Vector z = (Vector(3) << 1, -2, 0.5).finished();
  const Vector y = (Vector(3) << 0.3, 0.1, -1).finished();
  const Vector x = x_update(Matrix::Zero(4, 3), z, y, 2.0);
  EXPECT_TRUE(x.isApprox(z - y / 2.0, 1e-15));
}

TEST(XUpdate, ZeroRightHandSide) {
  std::mt19937_64 gen(3);
  const Matrix d = oracle::random_matrix(6, 4, gen);
  const double rho = auto_rho(d);
  const Vector z = oracle::random_vector(4, gen);
  EXPECT_LE(x_update(d, z, rho * z, rho).norm(), 1e-14);
}

TEST(XUpdate, ResidualAgainstDenseSolve) {
  std::mt19937_64 gen(4);
  // both the direct (n >= p) and the Woodbury (n < p) paths
  for (auto [n, p] : {std::pair<Index, Index>{6, 4}, {3, 8}}) {
    const Matrix d = oracle::random_matrix(n, p, gen);
    const double rho = auto_rho(d);
    const Vector z = oracle::random_vector(p, gen), y = oracle::random_vector(p, gen);
    const Matrix m = rho * Matrix::Identity(p, p) - 2.0 * d.transpose() * d;
    const Vector rhs = rho * z - y;
    const Vector x = x_update(d, z, y, rho);
    EXPECT_LE((m * x - rhs).norm(), 1e-8 * (1.0 + rhs.norm()));
    EXPECT_LE((x - oracle::gauss_solve(m, rhs).col(0)).norm(), 1e-9 * (1.0 + x.norm()));
  }
}

TEST(XUpdate, NotPositiveDefinite) {
  Matrix d(2, 2);
  d << 3, 0, 0, 0;
  EXPECT_THROW(x_update(d, Vector::Zero(2), Vector::Zero(2), 10.0), NotPositiveDefinite);
  Matrix wide = Matrix::Zero(1, 3);
  wide(0, 1) = 3.0;
  EXPECT_THROW(x_update(wide, Vector::Zero(3), Vector::Zero(3), 10.0), NotPositiveDefinite);
}

TEST(XUpdate, ShapeMismatch) {
  EXPECT_THROW(x_update(Matrix::Zero(2, 3), Vector::Zero(2), Vector::Zero(3), 1.0), ShapeMismatch);
}

TEST(SoftThreshold, Examples) {
  const Vector v = (Vector(3) << 0.5, -0.5, 0.1).finished();
  const Vector s = soft_threshold(v, 0.2);
  EXPECT_NEAR(s(0), 0.3, 1e-15);
  EXPECT_NEAR(s(1), -0.3, 1e-15);
  EXPECT_EQ(s(2), 0.0);
  EXPECT_THROW(soft_threshold(v, -1.0), InvalidArgument);
}

TEST(ZUpdate, ZeroLambdaIsShift) {
  std::mt19937_64 gen(5);
  const Vector x = oracle::random_vector(5, gen), y = oracle::random_vector(5, gen);
  EXPECT_EQ(z_update(x, y, 3.0, 0.0), Vector(x + y / 3.0));
}

TEST(ZUpdate, ZeroInputs) { EXPECT_TRUE(z_update(Vector::Zero(4), Vector::Zero(4), 2.0, 0.7).isZero(0.0)); }

TEST(ZUpdate, DeadZoneIsExact) {
  std::mt19937_64 gen(6);
  const double rho = 2.0, lambda = 1.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = oracle::random_vector(8, gen), y = oracle::random_vector(8, gen);
    const Vector z = z_update(x, y, rho, lambda);
    for (Index i = 0; i < 8; ++i)
      EXPECT_EQ(z(i) == 0.0, std::abs(x(i) + y(i) / rho) <= lambda / rho);
  }
}

TEST(ZUpdate, OptimalityCasesAgainstGrid) {
  std::mt19937_64 gen(7);
  // |x + y / rho| <= 2 keeps the minimizer inside the grid
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(1.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double x = u(gen), y = u(gen), rho = pos(gen), lambda = pos(gen) * 0.5;
    const double z = z_update(Vector::Constant(1, x), Vector::Constant(1, y), rho, lambda)(0);
    const double grid = oracle::grid_argmin(
        [&](double t) { return lambda * std::abs(t) - y * t + 0.5 * rho * (x - t) * (x - t); }, -2.0, 2.0, 1e-3);
    EXPECT_NEAR(z, grid, 1e-3);
    if (z > 0) {
      EXPECT_GT(x + y / rho, lambda / rho);
    }
    if (z < 0) {
      EXPECT_LT(x + y / rho, -lambda / rho);
    }
  }
}

TEST(YUpdate, Examples) {
  const Vector y = (Vector(2) << 0.5, -1).finished();
  const Vector x = (Vector(2) << 1, 2).finished();
  EXPECT_EQ(y_update(y, x, x, 3.0), y);
  EXPECT_EQ(y_update(Vector::Zero(2), (Vector(2) << 1, 0).finished(), (Vector(2) << 0, 1).finished(), 2.0),
            (Vector(2) << 2, -2).finished());
}

TEST(YUpdate, ElementwiseOracle) {
  std::mt19937_64 gen(8);
  const Vector y = oracle::random_vector(6, gen), x = oracle::random_vector(6, gen), z = oracle::random_vector(6, gen);
  const Vector out = y_update(y, x, z, 1.7);
  for (Index i = 0; i < 6; ++i) EXPECT_EQ(out(i), y(i) + 1.7 * (x(i) - z(i)));
}

TEST(ExtractComponent, LambdaZeroFindsTopEigenvector) {
  std::mt19937_64 gen(9);
  const Matrix d = center(gapped_data(20, 8, gen)).dtilde;
  const auto eig = oracle::right_singular(d);
  ASSERT_GE(eig.values(0) / eig.values(1), 1.5);
  const Vector x = extract_component(d, lambda_zero());
  EXPECT_NEAR(x.norm(), 1.0, 1e-12);
  EXPECT_GE(std::abs(x.dot(eig.vectors.col(0))), 0.999);
}

TEST(ExtractComponent, SingleColumnGivesUnitVector) {
  std::mt19937_64 gen(10);
  Matrix d = Matrix::Zero(12, 5);
  d.col(2) = oracle::random_vector(12, gen);
  d = center(d).dtilde;
  const auto eig = oracle::right_singular(d);
  const Vector x = extract_component(d, AdmmParams{});
  EXPECT_EQ(x, Vector::Unit(5, 2));
  EXPECT_NEAR(std::abs(eig.vectors(2, 0)), 1.0, 1e-12);
}

TEST(ExtractComponent, HugeLambdaIsDegenerate) {
  std::mt19937_64 gen(11);
  const Matrix d = center(oracle::random_matrix(10, 4, gen)).dtilde;
  AdmmParams p;
  p.lambda = 1e6 * auto_rho(d);
  EXPECT_THROW(extract_component(d, p), DegenerateComponent);
}

TEST(ExtractComponent, IterationCap) {
  std::mt19937_64 gen(12);
  const Matrix d = center(oracle::random_matrix(10, 4, gen)).dtilde;
  AdmmParams p;
  p.max_iter = 2;
  EXPECT_THROW(extract_component(d, p), MaxIterExceeded);
}

TEST(ExtractComponent, PrimalFeasibilityAtConvergence) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix d = center(oracle::random_matrix(15, 6, gen)).dtilde;
    AdmmParams p;
    p.seed = static_cast<std::uint64_t>(trial);
    const ComponentTrace t = solve_component(d, p);
    EXPECT_LE(t.primal_residual, 10.0 * p.tol * (1.0 + t.x_norm)) << "trial " << trial;
  }
}

TEST(ExtractComponent, SparsityIsMonotoneInLambda) {
  std::mt19937_64 gen(14);
  const Matrix d = center(oracle::random_matrix(30, 10, gen)).dtilde;
  const double lambda0 = 0.01 * auto_rho(d);
  AdmmParams p;
  p.lambda = lambda0;
  const Index base = nnz(extract_component(d, p));
  p.lambda = 5.0 * lambda0;
  EXPECT_LE(nnz(extract_component(d, p)), base);
}

TEST(ExtractComponent, ExplicitRhoBelowStabilityThreshold) {
  std::mt19937_64 gen(15);
  const Matrix d = center(oracle::random_matrix(10, 4, gen)).dtilde;
  AdmmParams p;
  p.rho = 1.0 * linalg::sigma_max_squared(d);  // below 2 sigma^2: not positive definite
  EXPECT_THROW(extract_component(d, p), NotPositiveDefinite);
}

TEST(AdmmParams, Validation) {
  AdmmParams p;
  p.tol = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.max_iter = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.lambda = -1.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.rho = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  EXPECT_DOUBLE_EQ(p.lambda_for(4.0), 0.04);
}

TEST(Deflate, UnitVectorZeroesColumn) {
  std::mt19937_64 gen(16);
  const Matrix d = oracle::random_matrix(4, 3, gen);
  const Matrix out = deflate(d, Vector::Unit(3, 0));
  EXPECT_TRUE(out.col(0).isZero(0.0));
  EXPECT_EQ(out.rightCols(2), d.rightCols(2));
}

TEST(Deflate, RankOneAnnihilation) {
  const Vector x = (Vector(3) << 1, 2, 2).finished() / 3.0;
  const Matrix d = Vector::Ones(4) * x.transpose();
  EXPECT_LE(deflate(d, x).norm(), 1e-15);
}

TEST(Deflate, AnnihilatesDirection) {
  std::mt19937_64 gen(17);
  const Matrix d = oracle::random_matrix(10, 6, gen);
  const Vector x = oracle::random_vector(6, gen).normalized();
  EXPECT_LE((deflate(d, x) * x).norm(), 1e-10);
}

TEST(Deflate, RequiresUnitNorm) {
  EXPECT_THROW(deflate(Matrix::Zero(2, 2), Vector::Ones(2)), InvalidArgument);
  EXPECT_THROW(deflate(Matrix::Zero(2, 2), Vector::Unit(3, 0)), ShapeMismatch);
}

TEST(Fit, SingleComponentIsExtractComponent) {
  std::mt19937_64 gen(18);
  const Matrix d = oracle::random_matrix(12, 5, gen);
  AdmmParams p;
  p.seed = 42;
  const SparsePcaModel model = fit(d, 1, p);
  AdmmParams q = p;
  q.seed = component_seed(42, 0);
  EXPECT_EQ(model.loadings.col(0), extract_component(center(d).dtilde, q));
  EXPECT_EQ(model.mu, center(d).mu);
}

TEST(Fit, LambdaZeroSpansTopEigenvectors) {
  std::mt19937_64 gen(19);
  const Matrix d = gapped_data(30, 5, gen);
  const SparsePcaModel model = fit(d, 3, lambda_zero());
  const auto eig = oracle::right_singular(oracle::centered(d));
  const Vector cosines = oracle::principal_cosines(model.loadings, eig.vectors.leftCols(3));
  for (Index i = 0; i < 3; ++i) EXPECT_GE(cosines(i), std::cos(1e-2));
}

TEST(Fit, UnitLoadingsAndAnnihilatingDeflation) {
  std::mt19937_64 gen(20);
  const Matrix d = oracle::random_matrix(25, 7, gen);
  FitTrace trace;
  const SparsePcaModel model = fit(d, 4, AdmmParams{}, &trace);
  ASSERT_EQ(trace.deflation_residuals.size(), 4u);
  for (Index j = 0; j < 4; ++j) {
    EXPECT_NEAR(model.loadings.col(j).norm(), 1.0, 1e-9);
    EXPECT_LE(trace.deflation_residuals[static_cast<std::size_t>(j)], 1e-8);
  }
}

TEST(Fit, Deterministic) {
  std::mt19937_64 gen(21);
  const Matrix d = oracle::random_matrix(20, 6, gen);
  AdmmParams p;
  p.seed = 9;
  const SparsePcaModel a = fit(d, 3, p), b = fit(d, 3, p);
  EXPECT_EQ(a.loadings, b.loadings);
  EXPECT_EQ(a.mu, b.mu);
}

TEST(Fit, LeadingColumnsMatchSmallerFit) {
  std::mt19937_64 gen(22);
  const Matrix d = oracle::random_matrix(20, 6, gen);
  EXPECT_EQ(fit(d, 4, AdmmParams{}).loadings.leftCols(2), fit(d, 2, AdmmParams{}).loadings);
}

TEST(Fit, BeyondRankWarns) {
  std::mt19937_64 gen(23);
  const Matrix d = oracle::random_matrix(4, 10, gen);
  testutil::WarningCapture warnings;
  const SparsePcaModel model = fit(d, 6, AdmmParams{});
  EXPECT_EQ(warnings.messages.size(), 1u);
  for (Index j = 0; j < 6; ++j) EXPECT_NEAR(model.loadings.col(j).norm(), 1.0, 1e-9);
}

TEST(Fit, NoVarianceGivesOrthonormalCompletion) {
  Matrix d(3, 4);
  d << 1, 2, 3, 4, 1, 2, 3, 4, 1, 2, 3, 4;
  testutil::WarningCapture warnings;
  FitTrace trace;
  const SparsePcaModel model = fit(d, 3, AdmmParams{}, &trace);
  EXPECT_EQ(model.loadings, Matrix::Identity(4, 3));
  for (const auto& c : trace.components) EXPECT_TRUE(c.null_space_completion);
}

TEST(Fit, ArgumentErrors) {
  const Matrix d = Matrix::Ones(3, 2);
  EXPECT_THROW(fit(d, 0, AdmmParams{}), InvalidArgument);
  EXPECT_THROW(fit(d, 3, AdmmParams{}), InvalidArgument);
  Matrix bad = d;
  bad(0, 0) = std::nan("");
  EXPECT_THROW(fit(bad, 1, AdmmParams{}), InvalidArgument);
}

TEST(Fit, ErrorsNameTheComponent) {
  std::mt19937_64 gen(24);
  const Matrix d = oracle::random_matrix(10, 4, gen);
  AdmmParams p;
  p.max_iter = 1;
  try {
    fit(d, 2, p);
    FAIL() << "expected MaxIterExceeded";
  } catch (const MaxIterExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("component 0"), std::string::npos) << e.what();
  }
}

TEST(Transform, MeanRowMapsToZero) {
  std::mt19937_64 gen(25);
  const Matrix d = oracle::random_matrix(10, 4, gen);
  const SparsePcaModel model = fit(d, 2, AdmmParams{});
  EXPECT_LE(transform(model, model.mu.transpose()).norm(), 1e-14);
}

TEST(Transform, LambdaZeroMatchesPca) {
  std::mt19937_64 gen(26);
  const Matrix d = gapped_data(30, 6, gen);
  const Matrix s = transform(fit(d, 3, lambda_zero()), d);
  const Matrix q = pca_transform(pca_fit(d, 3), d);
  for (Index j = 0; j < 3; ++j) {
    const double sign = s.col(j).dot(q.col(j)) < 0 ? -1.0 : 1.0;
    EXPECT_LE((sign * s.col(j) - q.col(j)).norm(), 1e-6 * q.col(j).norm()) << "column " << j;
  }
}

TEST(Transform, Shape) {
  const SparsePcaModel model{Vector::Zero(1024), Matrix::Identity(1024, 300)};
  EXPECT_EQ(transform(model, Matrix::Zero(45, 1024)).rows(), 45);
  EXPECT_EQ(transform(model, Matrix::Zero(45, 1024)).cols(), 300);
  EXPECT_THROW(transform(model, Matrix::Zero(2, 1023)), ShapeMismatch);
}
