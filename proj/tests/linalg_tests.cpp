#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>

#include "ges/errors.hpp"
#include "ges/linalg.hpp"
#include "ges/rng.hpp"

using ges::NumericError;
using ges::rng::Xoshiro256pp;
namespace linalg = ges::linalg;

namespace {

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("cosine of hand-checked pairs") {
  Eigen::VectorXd a(2), b(2);
  a << 1, 2;
  b << 2, 1;
  CHECK(linalg::cosine<double>(a, b) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(linalg::cosine<double>(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(linalg::cosine<double>(a, Eigen::VectorXd(-a)) ==
        doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("cosine with a zero vector is zero") {
  Eigen::VectorXd a = vec3(1, 2, 3);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
  CHECK(linalg::cosine<double>(a, z) == 0.0);
  CHECK(linalg::cosine<double>(z, z) == 0.0);
}

TEST_CASE("gram_schmidt on a hand-checked pair") {
  Eigen::MatrixXd cols(3, 2);
  cols.col(0) = vec3(1, 1, 0);
  cols.col(1) = vec3(1, 0, 0);
  const Eigen::MatrixXd q = linalg::gram_schmidt<double>(cols);
  REQUIRE(q.cols() == 2);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(q.col(0).isApprox(vec3(s, s, 0), 1e-14));
  CHECK(q.col(1).isApprox(vec3(s, -s, 0), 1e-14));
}

TEST_CASE("gram_schmidt drops dependent and zero columns") {
  Eigen::MatrixXd cols(3, 3);
  cols.col(0) = vec3(2, 0, 0);
  cols.col(1) = vec3(-1, 0, 0);       // dependent on col 0
  cols.col(2) = Eigen::VectorXd::Zero(3);
  const Eigen::MatrixXd q = linalg::gram_schmidt<double>(cols);
  REQUIRE(q.cols() == 1);
  CHECK(q.col(0).isApprox(vec3(1, 0, 0), 1e-14));
}

TEST_CASE("gram_schmidt output is orthonormal for random inputs") {
  Xoshiro256pp gen(101);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(gen.below(63));
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(gen.below(
        static_cast<std::uint64_t>(n)));
    Eigen::MatrixXd cols(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) cols(i, j) = gen.gaussian();
    }
    const Eigen::MatrixXd q = linalg::gram_schmidt<double>(cols);
    REQUIRE(q.cols() == m);  // random Gaussians are independent a.s.
    const Eigen::MatrixXd gram = q.transpose() * q;
    CHECK((gram - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() <
          1e-12);
    // Same span: every input column is reproduced by its projection.
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::VectorXd back =
          linalg::project_onto_span<double>(q, cols.col(j));
      CHECK((back - cols.col(j)).norm() < 1e-10 * cols.col(j).norm());
    }
  }
}

TEST_CASE("projection onto a span is idempotent and orthogonal") {
  Xoshiro256pp gen(7);
  const Eigen::MatrixXd q =
      linalg::sample_orthonormal<double>(12, 4, gen).columns();
  Eigen::VectorXd v(12);
  for (Eigen::Index i = 0; i < 12; ++i) v[i] = gen.gaussian();
  const Eigen::VectorXd p = linalg::project_onto_span<double>(q, v);
  const Eigen::VectorXd pp = linalg::project_onto_span<double>(q, p);
  CHECK((pp - p).norm() < 1e-12);
  CHECK((q.transpose() * (v - p)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("projection onto an empty span is zero") {
  Eigen::MatrixXd empty(5, 0);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(5);
  CHECK(linalg::project_onto_span<double>(empty, v).norm() == 0.0);
}

TEST_CASE("ortho set validation rejects bad direction sets") {
  Eigen::MatrixXd not_unit(2, 1);
  not_unit << 2, 0;
  CHECK_THROWS_AS(linalg::OrthoSet<double>{not_unit}, NumericError);

  Eigen::MatrixXd not_ortho(2, 2);
  not_ortho << 1, 1, 0, 0;
  CHECK_THROWS_AS(linalg::OrthoSet<double>{not_ortho}, NumericError);
}

TEST_CASE("sample_orthonormal returns a valid set of the requested size") {
  Xoshiro256pp gen(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(gen.below(63));
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(gen.below(
        static_cast<std::uint64_t>(n)));
    const auto set = linalg::sample_orthonormal<double>(n, p, gen);
    CHECK(set.dim() == n);
    CHECK(set.count() == p);  // construction already validated orthonormality
  }
}

TEST_CASE("sample_orthonormal rejects impossible requests") {
  Xoshiro256pp gen(1);
  CHECK_THROWS_AS(linalg::sample_orthonormal<double>(3, 4, gen), NumericError);
  CHECK_THROWS_AS(linalg::sample_orthonormal<double>(0, 1, gen), NumericError);
}

TEST_CASE("complement sampling is orthogonal to the fixed basis") {
  Xoshiro256pp gen(17);
  const Eigen::MatrixXd basis =
      linalg::sample_orthonormal<double>(20, 3, gen).columns();
  const auto complement =
      linalg::sample_orthogonal_complement<double>(basis, 5, gen);
  CHECK((basis.transpose() * complement.columns()).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK_THROWS_AS(
      linalg::sample_orthogonal_complement<double>(basis, 18, gen),
      NumericError);
}

TEST_CASE("sampling is deterministic in the generator seed") {
  Xoshiro256pp a(99), b(99);
  const Eigen::MatrixXd qa = linalg::sample_orthonormal<double>(8, 3, a).columns();
  const Eigen::MatrixXd qb = linalg::sample_orthonormal<double>(8, 3, b).columns();
  CHECK(qa == qb);
}

}  // TEST_SUITE
