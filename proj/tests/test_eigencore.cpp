#include <catch2/catch.hpp>

#include <cmath>

#include "linucb/eigencore.hpp"

using linucb::EigenPairs;
using linucb::Matrix;
using linucb::Rng;
using linucb::Vector;

namespace {

Matrix random_spd(Eigen::Index d, Rng& rng, double shift = 0.5) {
  Matrix b(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) b(i, j) = rng.gaussian();
  }
  return b * b.transpose() + shift * Matrix::Identity(d, d);
}

void check_pairs_valid(const EigenPairs& pairs, const Matrix& source,
                       double reconstruct_tol = 1e-8) {
  const Eigen::Index d = pairs.dim();
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    REQUIRE(pairs.values[i] >= pairs.values[i + 1]);
  }
  REQUIRE(pairs.values[d - 1] > 0.0);
  const Matrix gram = pairs.vectors.transpose() * pairs.vectors;
  REQUIRE((gram - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE((pairs.reconstruct() - source).cwiseAbs().maxCoeff() < reconstruct_tol);
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::Index k = 0;
    pairs.vectors.col(j).cwiseAbs().maxCoeff(&k);
    REQUIRE(pairs.vectors(k, j) >= 0.0);
  }
}

}  // namespace

TEST_CASE("eig_sym identity") {
  const Matrix m = Matrix::Identity(3, 3);
  const EigenPairs pairs = linucb::eig_sym(m);
  for (int i = 0; i < 3; ++i) REQUIRE(pairs.values[i] == Approx(1.0).margin(1e-14));
  check_pairs_valid(pairs, m);
}

TEST_CASE("eig_sym diagonal") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3.0;
  m(1, 1) = 1.0;
  const EigenPairs pairs = linucb::eig_sym(m);
  REQUIRE(pairs.values[0] == Approx(3.0).margin(1e-13));
  REQUIRE(pairs.values[1] == Approx(1.0).margin(1e-13));
  REQUIRE(std::abs(pairs.vectors(0, 0)) == Approx(1.0).margin(1e-13));
  REQUIRE(std::abs(pairs.vectors(1, 1)) == Approx(1.0).margin(1e-13));
  check_pairs_valid(pairs, m);
}

TEST_CASE("eig_sym random reconstruction") {
  Rng rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix m = random_spd(5, rng);
    check_pairs_valid(linucb::eig_sym(m), m);
  }
}

TEST_CASE("eig_sym rejects bad input") {
  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.2, 1.0;
  REQUIRE_THROWS_AS(linucb::eig_sym(asym), std::invalid_argument);

  Matrix indefinite(2, 2);
  indefinite << 1.0, 0.0, 0.0, -2.0;
  REQUIRE_THROWS_AS(linucb::eig_sym(indefinite), std::runtime_error);
}

TEST_CASE("rank_one_update along an eigendirection") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3.0;
  m(1, 1) = 1.0;
  const EigenPairs pairs = linucb::eig_sym(m);
  Vector u(2);
  u << 0.0, 1.0;
  const EigenPairs updated = linucb::rank_one_update(pairs, u);
  REQUIRE(updated.values[0] == Approx(3.0).margin(1e-12));
  REQUIRE(updated.values[1] == Approx(2.0).margin(1e-12));
}

TEST_CASE("rank_one_update matches the quadratic formula") {
  // diag(2,1) + uu^T with u = (1/sqrt2, 1/sqrt2) has characteristic
  // polynomial x^2 - 4x + 3.5, so the eigenvalues are 2 +- sqrt(2)/2.
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 2.0;
  m(1, 1) = 1.0;
  const EigenPairs pairs = linucb::eig_sym(m);
  Vector u = Vector::Constant(2, 1.0 / std::sqrt(2.0));
  const EigenPairs updated = linucb::rank_one_update(pairs, u);
  REQUIRE(updated.values[0] == Approx(2.0 + std::sqrt(2.0) / 2.0).epsilon(1e-13));
  REQUIRE(updated.values[1] == Approx(2.0 - std::sqrt(2.0) / 2.0).epsilon(1e-13));

  const Matrix explicit_sum = m + u * u.transpose();
  const EigenPairs direct = linucb::eig_sym(explicit_sum);
  REQUIRE((updated.values - direct.values).cwiseAbs().maxCoeff() < 1e-12);
  check_pairs_valid(updated, explicit_sum, 1e-12);
}

TEST_CASE("rank_one_update with zero vector is a no-op") {
  Rng rng(7);
  const Matrix m = random_spd(4, rng);
  const EigenPairs pairs = linucb::eig_sym(m);
  const EigenPairs updated = linucb::rank_one_update(pairs, Vector::Zero(4));
  REQUIRE((updated.values - pairs.values).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((updated.vectors - pairs.vectors).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rank_one_update trace additivity and interlacing") {
  Rng rng(1234);
  for (int rep = 0; rep < 25; ++rep) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.next_u64() % 5);
    const Matrix m = random_spd(d, rng);
    const EigenPairs pairs = linucb::eig_sym(m);
    const Vector u = 2.0 * rng.unit_vector(d);
    const EigenPairs updated = linucb::rank_one_update(pairs, u);

    const double trace_gap =
        std::abs(updated.values.sum() - pairs.values.sum() - u.squaredNorm());
    REQUIRE(trace_gap <= 1e-9 * (pairs.values.sum() + u.squaredNorm()));

    const double slack = 1e-10 * (1.0 + pairs.values[0]);
    REQUIRE(updated.values[0] >= pairs.values[0] - slack);
    for (Eigen::Index i = 0; i < d; ++i) {
      REQUIRE(updated.values[i] >= pairs.values[i] - slack);
      if (i > 0) REQUIRE(updated.values[i] <= pairs.values[i - 1] + slack);
    }
    check_pairs_valid(updated, m + u * u.transpose(), 1e-10);
  }
}

TEST_CASE("rank_one_update survives deflation cases") {
  // Repeated eigenvalues and zero components both route through deflation.
  Matrix m = Matrix::Identity(4, 4) * 2.0;
  m(3, 3) = 5.0;
  EigenPairs pairs = linucb::eig_sym(m);
  Vector u(4);
  u << 0.3, -0.4, 0.0, 1.2;
  const EigenPairs updated = linucb::rank_one_update(pairs, u);
  check_pairs_valid(updated, m + u * u.transpose(), 1e-10);
}

TEST_CASE("rank_one_update composed 1000 times tracks a fresh factorization") {
  const Eigen::Index d = 5;
  Rng rng(90210);
  Matrix accumulated = Matrix::Identity(d, d);
  EigenPairs pairs = linucb::eig_sym(accumulated);
  for (int k = 0; k < 1000; ++k) {
    const Vector u = rng.unit_vector(d);
    accumulated += u * u.transpose();
    pairs = linucb::rank_one_update(pairs, u);
  }
  const EigenPairs fresh = linucb::eig_sym(accumulated);
  for (Eigen::Index i = 0; i < d; ++i) {
    REQUIRE(std::abs(pairs.values[i] - fresh.values[i]) <= 1e-9 * fresh.values[i]);
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    const double gap_above = i == 0 ? 1.0 : fresh.values[i - 1] - fresh.values[i];
    const double gap_below = i == d - 1 ? 1.0 : fresh.values[i] - fresh.values[i + 1];
    if (std::min(gap_above, gap_below) > 1e-6) {
      const double align = std::abs(pairs.vectors.col(i).dot(fresh.vectors.col(i)));
      REQUIRE(align >= 1.0 - 1e-6);
    }
  }
}

TEST_CASE("project_sphere basics") {
  Rng rng(5);
  Vector x(2);
  x << 3.0, 4.0;
  const Vector p = linucb::project_sphere(x, rng);
  REQUIRE(p[0] == Approx(0.6).margin(1e-15));
  REQUIRE(p[1] == Approx(0.8).margin(1e-15));

  const Vector already_unit = rng.unit_vector(4);
  Rng rng2(6);
  const Vector same = linucb::project_sphere(already_unit, rng2);
  REQUIRE((same - already_unit).norm() < 1e-12);
}

TEST_CASE("project_sphere degenerate input is seeded and reproducible") {
  Rng a(77), b(77);
  const Vector pa = linucb::project_sphere(Vector::Zero(3), a);
  const Vector pb = linucb::project_sphere(Vector::Zero(3), b);
  REQUIRE(std::abs(pa.norm() - 1.0) < 1e-12);
  REQUIRE((pa - pb).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("project_sphere is scale invariant") {
  Rng rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const Vector x = 3.0 * rng.unit_vector(5) + Vector::Constant(5, 0.1);
    for (double c : {1e-6, 0.5, 7.0, 1e8}) {
      Rng r1(0), r2(0);
      const Vector p1 = linucb::project_sphere(x, r1);
      const Vector p2 = linucb::project_sphere(c * x, r2);
      REQUIRE((p1 - p2).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("orthonormal_complement axis case") {
  Vector e1 = Vector::Zero(3);
  e1[0] = 1.0;
  const Matrix u = linucb::orthonormal_complement(e1);
  REQUIRE(u.rows() == 3);
  REQUIRE(u.cols() == 2);
  REQUIRE((u.transpose() * e1).cwiseAbs().maxCoeff() < 1e-14);
  REQUIRE(std::abs(u(1, 0)) + std::abs(u(2, 1)) == Approx(2.0).margin(1e-14));
}

TEST_CASE("orthonormal_complement identities on random input") {
  Rng rng(2024);
  const Vector v = rng.unit_vector(4);
  const Matrix u = linucb::orthonormal_complement(v);
  REQUIRE((u.transpose() * u - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE((u.transpose() * v).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("orthonormal_complement of v and -v spans the same subspace") {
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    const Vector v = rng.unit_vector(5);
    const Matrix up = linucb::orthonormal_complement(v);
    const Matrix um = linucb::orthonormal_complement(-v);
    const Matrix proj_p = up * up.transpose();
    const Matrix proj_m = um * um.transpose();
    REQUIRE((proj_p - proj_m).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("orthonormal_complement rejects non-unit input") {
  REQUIRE_THROWS_AS(linucb::orthonormal_complement(Vector::Constant(3, 1.0)),
                    std::invalid_argument);
}
