#include "topicsimplex/core.hpp"
#include "topicsimplex/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace topics;

namespace {

Matrix random_column_stochastic(Index rows, Index cols, Rng& rng) {
  Matrix M(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    double sum = 0.0;
    for (Index i = 0; i < rows; ++i) {
      M(i, j) = rng.uniform();
      sum += M(i, j);
    }
    M.col(j) /= sum;
  }
  return M;
}

}  // namespace

TEST_CASE("validate_column_stochastic accepts the 2x2 identity") {
  REQUIRE(validate_column_stochastic(Matrix::Identity(2, 2), 1e-9));
}

TEST_CASE("validate_column_stochastic accepts a doubly stochastic matrix") {
  Matrix M(2, 2);
  M << 0.5, 0.5, 0.5, 0.5;
  REQUIRE(validate_column_stochastic(M, 1e-9));
}

TEST_CASE("validate_column_stochastic rejects a column summing to 1.2") {
  Matrix M(2, 1);
  M << 0.6, 0.6;
  REQUIRE_FALSE(validate_column_stochastic(M, 1e-9));
}

TEST_CASE("validate_column_stochastic rejects negatives beyond tolerance") {
  Matrix M(2, 1);
  M << -0.1, 1.1;
  REQUIRE_FALSE(validate_column_stochastic(M, 1e-9));
  M << -1e-12, 1.0 + 1e-12;
  REQUIRE(validate_column_stochastic(M, 1e-9));
}

TEST_CASE("validate_column_stochastic sparse overload agrees with dense") {
  Rng rng(4);
  Matrix M = random_column_stochastic(8, 5, rng);
  SparseMatrix S = M.sparseView();
  REQUIRE(validate_column_stochastic(S, 1e-9));
  S.coeffRef(0, 0) += 0.5;
  REQUIRE_FALSE(validate_column_stochastic(S, 1e-9));
}

TEST_CASE("TermDocMatrix accepts a valid frequency matrix") {
  Rng rng(1);
  TermDocMatrix D = TermDocMatrix::from_dense(random_column_stochastic(6, 4, rng));
  REQUIRE(D.p() == 6);
  REQUIRE(D.n() == 4);
}

TEST_CASE("TermDocMatrix rejects bad columns") {
  Matrix M(2, 2);
  M << 0.5, 0.7, 0.5, 0.7;
  try {
    TermDocMatrix::from_dense(M);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Validation);
  }

  Matrix N(2, 1);
  N << 1.5, -0.5;
  REQUIRE_THROWS_AS(TermDocMatrix::from_dense(N), Error);
}

TEST_CASE("TopicMatrix and DocWeightMatrix enforce column stochasticity") {
  Rng rng(2);
  REQUIRE_NOTHROW(TopicMatrix(random_column_stochastic(10, 3, rng)));
  REQUIRE_NOTHROW(DocWeightMatrix(random_column_stochastic(3, 7, rng)));

  Matrix bad = Matrix::Zero(3, 2);
  bad(0, 0) = 1.0;  // second column sums to 0
  REQUIRE_THROWS_AS(TopicMatrix(bad), Error);
  REQUIRE_THROWS_AS(DocWeightMatrix(bad), Error);
}

TEST_CASE("product of stochastic matrices is column stochastic") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    TopicMatrix A(random_column_stochastic(20, 4, rng));
    DocWeightMatrix W(random_column_stochastic(4, 15, rng));
    REQUIRE(validate_column_stochastic(Matrix(A.matrix() * W.matrix()), 1e-8));
  }
}

TEST_CASE("SingularBasis accepts an orthonormal sign-fixed basis") {
  Matrix U(4, 2);
  const double h = 0.5;
  U << h, h, h, -h, h, h, h, -h;
  Vector s(2);
  s << 1.0, 0.5;
  SingularBasis basis(U, s);
  REQUIRE(basis.p() == 4);
  REQUIRE(basis.K() == 2);
}

TEST_CASE("SingularBasis allows exactly tied values") {
  Matrix U = Matrix::Identity(3, 3);
  Vector s = Vector::Ones(3);
  REQUIRE_NOTHROW(SingularBasis(U, s));
}

TEST_CASE("SingularBasis rejects non-orthonormal columns") {
  Matrix U(3, 2);
  U << 1, 1, 0, 0, 0, 0;  // identical columns
  Vector s(2);
  s << 1.0, 0.5;
  try {
    SingularBasis basis(U, s);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Validation);
  }
}

TEST_CASE("SingularBasis rejects non-positive or increasing values") {
  Matrix U = Matrix::Identity(3, 2);
  Vector zero(2), increasing(2);
  zero << 1.0, 0.0;
  increasing << 0.5, 1.0;
  REQUIRE_THROWS_AS(SingularBasis(U, zero), Error);
  REQUIRE_THROWS_AS(SingularBasis(U, increasing), Error);
}

TEST_CASE("SingularBasis rejects a first vector with negative entry sum") {
  Matrix U = -Matrix::Identity(3, 2);
  Vector s(2);
  s << 1.0, 0.5;
  REQUIRE_THROWS_AS(SingularBasis(U, s), Error);
}

TEST_CASE("error kinds carry distinct human-readable names") {
  REQUIRE(std::string(to_string(ErrorKind::Parse)) == "parse");
  REQUIRE(std::string(to_string(ErrorKind::DegenerateCorpus)) ==
          "degenerate-corpus");
  REQUIRE(std::string(to_string(ErrorKind::InfeasibleClustering)) ==
          "infeasible-clustering");
  Error e(ErrorKind::Io, "boom");
  REQUIRE(e.kind() == ErrorKind::Io);
  REQUIRE(std::string(e.what()) == "boom");
}
