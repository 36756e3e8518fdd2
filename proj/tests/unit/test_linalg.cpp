#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pfenergy/error.hpp"
#include "pfenergy/linalg.hpp"

using namespace pfenergy;
using namespace pfenergy::linalg;

namespace {

SymMatrix random_symmetric(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m.set(i, j, u(rng));
  return m;
}

SymMatrix random_spd(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a(i, k) * a(j, k);
      m.set(i, j, s + (i == j ? 0.5 : 0.0));
    }
  return m;
}

}  // namespace

TEST(CholeskyPsd, Identity) {
  const auto v = cholesky_psd(SymMatrix::identity(3), 0.0);
  EXPECT_TRUE(v.psd);
  EXPECT_DOUBLE_EQ(v.min_pivot, 1.0);
}

TEST(CholeskyPsd, IndefiniteTwoByTwo) {
  EXPECT_FALSE(cholesky_psd(SymMatrix::from_rows({{1, 2}, {2, 1}}), 1e-12).psd);
}

TEST(CholeskyPsd, DefiniteTwoByTwo) {
  const auto m = SymMatrix::from_rows({{2, -1}, {-1, 2}});
  EXPECT_TRUE(cholesky_psd(m).psd);
  EXPECT_NEAR(min_eigenvalue(m), 1.0, 1e-14);
}

TEST(CholeskyPsd, SemidefiniteRankOne) {
  EXPECT_TRUE(cholesky_psd(SymMatrix::from_rows({{1, 1}, {1, 1}})).psd);
  EXPECT_FALSE(cholesky_psd(SymMatrix::from_rows({{0, 1}, {1, 0}})).psd);
}

TEST(CholeskyPsd, RejectsNonFinite) {
  SymMatrix m(2);
  m.set(0, 1, std::numeric_limits<double>::quiet_NaN());
  try {
    cholesky_psd(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidMatrix);
  }
}

TEST(CholeskyPsd, AgreesWithEigenvalueSign) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const SymMatrix m = random_symmetric(rng, 4);
    const double lmin = oracle::min_eigenvalue(oracle::dense(m));
    if (std::abs(lmin) < 1e-6) continue;
    EXPECT_EQ(cholesky_psd(m).psd, lmin > 0.0);
  }
}

TEST(SymEigen, Diagonal) {
  const Vector d{3, 1, 2};
  const auto e = sym_eigen(SymMatrix::diagonal(d));
  ASSERT_EQ(e.values.size(), 3u);
  EXPECT_DOUBLE_EQ(e.values[0], 1);
  EXPECT_DOUBLE_EQ(e.values[1], 2);
  EXPECT_DOUBLE_EQ(e.values[2], 3);
}

TEST(SymEigen, Swap) {
  const auto v = sym_eigenvalues(SymMatrix::from_rows({{0, 1}, {1, 0}}));
  EXPECT_NEAR(v[0], -1.0, 1e-15);
  EXPECT_NEAR(v[1], 1.0, 1e-15);
}

TEST(SymEigen, MatchesCharacteristicPolynomialRoots) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 5; ++t) {
    const SymMatrix m = random_symmetric(rng, 5);
    const auto roots = oracle::characteristic_roots(oracle::dense(m));
    const auto values = sym_eigenvalues(m);
    ASSERT_EQ(roots.size(), 5u);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(values[k], roots[k], 1e-9);
  }
}

TEST(SymEigen, MatchesInertiaBisection) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const SymMatrix m = random_symmetric(rng, 8);
    const auto ref = oracle::eigenvalues(oracle::dense(m));
    const auto values = sym_eigenvalues(m);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(values[k], ref[k], 1e-10);
  }
}

TEST(SymEigen, EigenpairsSatisfyDefinition) {
  std::mt19937_64 rng(13);
  const SymMatrix m = random_symmetric(rng, 7);
  const auto e = sym_eigen(m);
  for (std::size_t k = 0; k < 7; ++k) {
    Vector v(7);
    for (std::size_t i = 0; i < 7; ++i) v[i] = e.vectors(i, k);
    const Vector mv = multiply(m, v);
    EXPECT_NEAR(norm2(v), 1.0, 1e-12);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(mv[i], e.values[k] * v[i], 1e-11);
  }
}

TEST(SolveSpd, SmallCases) {
  const Vector a = solve_spd(SymMatrix::identity(2), Vector{1, 2});
  EXPECT_DOUBLE_EQ(a[0], 1);
  EXPECT_DOUBLE_EQ(a[1], 2);
  const Vector b = solve_spd(SymMatrix::from_rows({{2, 0}, {0, 4}}), Vector{2, 4});
  EXPECT_DOUBLE_EQ(b[0], 1);
  EXPECT_DOUBLE_EQ(b[1], 1);
}

TEST(SolveSpd, MatchesExplicitInverse) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 10; ++t) {
    const SymMatrix m = random_spd(rng, 6);
    const Vector rhs{1, -2, 0.5, 3, -1, 2};
    const auto inv = oracle::inverse(oracle::dense(m));
    const Vector x = solve_spd(m, rhs);
    for (std::size_t i = 0; i < 6; ++i) {
      double ref = 0.0;
      for (std::size_t j = 0; j < 6; ++j) ref += inv[i][j] * rhs[j];
      EXPECT_NEAR(x[i], ref, 1e-9 * (1.0 + std::abs(ref)));
    }
  }
}

TEST(SolveSpd, SingularThrows) {
  try {
    solve_spd(SymMatrix::from_rows({{1, 1}, {1, 1}}), Vector{1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
}

TEST(Cholesky, LogDetAndInverse) {
  std::mt19937_64 rng(22);
  const SymMatrix m = random_spd(rng, 5);
  const auto c = Cholesky::factor(m);
  ASSERT_TRUE(c);
  double ref = 0.0;
  for (double l : oracle::eigenvalues(oracle::dense(m))) ref += std::log(l);
  EXPECT_NEAR(c->log_det(), ref, 1e-9);
  const auto inv = oracle::inverse(oracle::dense(m));
  const SymMatrix mi = c->inverse();
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(mi(i, j), inv[i][j], 1e-9 * (1.0 + std::abs(inv[i][j])));
  EXPECT_FALSE(Cholesky::factor(SymMatrix::from_rows({{1, 2}, {2, 1}})));
}

TEST(SolveLu, MatchesGaussOracle) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(6, 6);
  oracle::Dense d(6, oracle::Vec(6));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) d[i][j] = a(i, j) = u(rng);
  const Vector rhs{1, 2, 3, 4, 5, 6};
  const auto x = solve_lu(a, rhs);
  ASSERT_TRUE(x);
  const auto ref = oracle::gauss_solve(d, rhs);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR((*x)[i], ref[i], 1e-10 * (1.0 + std::abs(ref[i])));
}

TEST(SolveLu, SingularGivesNullopt) {
  Matrix a(2, 2);
  a(0, 0) = 1;
  a(0, 1) = 2;
  a(1, 0) = 2;
  a(1, 1) = 4;
  EXPECT_FALSE(solve_lu(a, Vector{1, 1}));
}

TEST(Norms, NanPropagates) {
  EXPECT_DOUBLE_EQ(norm_inf(Vector{1, -3, 2}), 3);
  EXPECT_TRUE(std::isnan(norm_inf(Vector{1, std::numeric_limits<double>::quiet_NaN(), 2})));
}
