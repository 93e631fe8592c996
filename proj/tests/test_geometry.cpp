#include "topicsimplex/geometry.hpp"
#include "topicsimplex/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace topics;

namespace {

// Scalene on purpose: a right or isosceles triangle puts the farthest-pair
// midpoint equidistant from the remaining vertices, which turns the greedy
// running-mean rule into a coin flip between duplicates.
Matrix planted_triangle_points(Index perVertex, double noise, Rng& rng,
                               Matrix* vertsOut = nullptr) {
  Matrix V(3, 2);
  V << 0.0, 0.0, 10.0, 0.0, 2.0, 8.0;
  if (vertsOut) *vertsOut = V;
  Matrix P(3 * perVertex, 2);
  for (Index v = 0; v < 3; ++v) {
    for (Index i = 0; i < perVertex; ++i) {
      P.row(v * perVertex + i) =
          V.row(v) + noise * Eigen::RowVector2d(rng.gaussian(), rng.gaussian());
    }
  }
  return P;
}

double wcss(const Matrix& points, const Matrix& centers) {
  double obj = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centers.rows(); ++c) {
      best = std::min(best, (points.row(i) - centers.row(c)).squaredNorm());
    }
    obj += best;
  }
  return obj;
}

bool rows_match_as_sets(const Matrix& A, const Matrix& B, double tol) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) return false;
  std::vector<char> used(static_cast<size_t>(B.rows()), 0);
  for (Index i = 0; i < A.rows(); ++i) {
    bool hit = false;
    for (Index j = 0; j < B.rows(); ++j) {
      if (!used[static_cast<size_t>(j)] &&
          (A.row(i) - B.row(j)).cwiseAbs().maxCoeff() <= tol) {
        used[static_cast<size_t>(j)] = 1;
        hit = true;
        break;
      }
    }
    if (!hit) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("truncate clamps by magnitude and preserves sign") {
  REQUIRE(truncate(5.0, 2.0) == 2.0);
  REQUIRE(truncate(-5.0, 2.0) == -2.0);
  REQUIRE(truncate(0.5, 2.0) == 0.5);
  REQUIRE(truncate(0.0, 2.0) == 0.0);
  REQUIRE_THROWS_AS(truncate(1.0, 0.0), Error);
}

TEST_CASE("truncate is idempotent") {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-20.0, 20.0);
    const double a = rng.uniform(0.01, 5.0);
    REQUIRE(truncate(truncate(x, a), a) == truncate(x, a));
  }
}

TEST_CASE("ratio_matrix divides by the leading vector entrywise") {
  Matrix U(4, 2);
  U << 0.5, 0.5, 0.5, -0.5, 0.5, 0.5, 0.5, -0.5;
  Vector s(2);
  s << 1.0, 0.5;
  SingularBasis basis(U, s);
  RatioMatrix R = ratio_matrix(basis, 4);
  REQUIRE(R.dim() == 1);
  REQUIRE(R.threshold() == std::log(4.0));
  Vector expected(4);
  expected << 1.0, -1.0, 1.0, -1.0;
  REQUIRE((R.matrix().col(0) - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ratio_matrix clamps huge ratios at log(max(n, p))") {
  const double eps = 1e-9;
  const double big = std::sqrt(1.0 - eps * eps);
  Matrix U(2, 2);
  U << eps, big, big, -eps;
  Vector s(2);
  s << 1.0, 0.5;
  SingularBasis basis(U, s);
  RatioMatrix R = ratio_matrix(basis, 100);
  REQUIRE(R.matrix()(0, 0) == std::log(100.0));
  REQUIRE(std::abs(R.matrix()(1, 0)) < 1e-8);
}

TEST_CASE("rows with a numerically zero leading entry become zero rows") {
  Matrix U(3, 2);
  const double r = 1.0 / std::sqrt(2.0);
  U << 0.0, 0.0, r, r, r, -r;
  Vector s(2);
  s << 1.0, 0.5;
  SingularBasis basis(U, s);
  RatioMatrix R = ratio_matrix(basis, 3);
  REQUIRE(R.matrix()(0, 0) == 0.0);
  REQUIRE(std::abs(R.matrix()(1, 0) - 1.0) < 1e-12);
  REQUIRE(std::abs(R.matrix()(2, 0) + 1.0) < 1e-12);
}

TEST_CASE("ratio_matrix entries never exceed the threshold") {
  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const Index p = 12, K = 3;
    Matrix G(p, K);
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < K; ++j) G(i, j) = rng.gaussian();
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix U = qr.householderQ() * Matrix::Identity(p, K);
    for (Index j = 0; j < K; ++j) {
      if (U.col(j).sum() < 0) U.col(j) = -U.col(j);
    }
    Vector s(K);
    s << 3.0, 2.0, 1.0;
    SingularBasis basis(U, s);
    RatioMatrix R = ratio_matrix(basis, 40);
    REQUIRE(R.threshold() == std::log(40.0));
    REQUIRE(R.matrix().cwiseAbs().maxCoeff() <= R.threshold());
  }
}

TEST_CASE("an explicit threshold override disables truncation") {
  const double eps = 1e-9;
  const double big = std::sqrt(1.0 - eps * eps);
  Matrix U(2, 2);
  U << eps, big, big, -eps;
  Vector s(2);
  s << 1.0, 0.5;
  SingularBasis basis(U, s);
  RatioMatrix R = ratio_matrix(basis, 100, 1e308);
  REQUIRE(R.matrix()(0, 0) > 1e8);  // unclamped ratio ~1e9
}

TEST_CASE("RatioMatrix validates its own bound") {
  Matrix R(1, 1);
  R << 3.0;
  REQUIRE_THROWS_AS(RatioMatrix(R, 2.0), Error);
  REQUIRE_NOTHROW(RatioMatrix(R, 3.0));
}

TEST_CASE("Simplex accepts affinely independent vertices and rejects flat ones") {
  Matrix V(3, 2);
  V << 0, 0, 1, 0, 0, 1;
  REQUIRE_NOTHROW(Simplex(V));
  Matrix flat(3, 2);
  flat << 0, 0, 1, 1, 2, 2;  // collinear
  REQUIRE_THROWS_AS(Simplex(flat), Error);
}

TEST_CASE("the fallback simplex is the reference simplex") {
  Simplex fb = Simplex::fallback(3);
  Matrix expected(3, 2);
  expected << 0, 0, 1, 0, 0, 1;
  REQUIRE((fb.vertices() - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("distance is zero at the barycenter and at convex combinations") {
  Matrix V(3, 2);
  V << 0, 0, 1, 0, 0, 1;
  Simplex S(V);
  Vector bary = (V.row(0) + V.row(1) + V.row(2)).transpose() / 3.0;
  REQUIRE(distance_to_simplex(bary, S) == 0.0);

  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    Vector w(3);
    double sum = 0.0;
    for (Index k = 0; k < 3; ++k) {
      w(k) = rng.uniform();
      sum += w(k);
    }
    w /= sum;
    Vector v = V.transpose() * w;
    REQUIRE(distance_to_simplex(v, S) == 0.0);
  }
}

TEST_CASE("distance to a segment from beyond an endpoint is the endpoint gap") {
  Matrix V(2, 1);
  V << 0.0, 1.0;
  Simplex S(V);
  Vector v(1);
  v << 2.0;
  REQUIRE(std::abs(distance_to_simplex(v, S) - 1.0) < 1e-9);
}

TEST_CASE("distance from (1,1) to the unit triangle is sqrt(2)/2") {
  Matrix V(3, 2);
  V << 0, 0, 1, 0, 0, 1;
  Simplex S(V);
  Vector v(2);
  v << 1.0, 1.0;
  REQUIRE(std::abs(distance_to_simplex(v, S) - std::sqrt(0.5)) < 1e-9);
}

TEST_CASE("distance beyond all faces equals distance to the nearest vertex") {
  Matrix V(3, 2);
  V << 0, 0, 1, 0, 0, 1;
  Simplex S(V);
  Vector v(2);
  v << -3.0, -4.0;
  REQUIRE(std::abs(distance_to_simplex(v, S) - 5.0) < 1e-9);
}

TEST_CASE("kmeans with one cluster returns the mean") {
  Rng rng(9);
  Matrix P(20, 2);
  for (Index i = 0; i < 20; ++i)
    P.row(i) = Eigen::RowVector2d(rng.uniform(), rng.uniform());
  LocalCenters out = kmeans(P, 1, 0);
  REQUIRE((out.centers().row(0) - P.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(out.sizes()(0) == 20);
}

TEST_CASE("kmeans recovers duplicated locations exactly") {
  Rng rng(10);
  Matrix locs(4, 2);
  locs << 0, 0, 5, 0, 0, 5, 5, 5;
  Matrix P(40, 2);
  for (Index i = 0; i < 40; ++i) P.row(i) = locs.row(i % 4);
  LocalCenters out = kmeans(P, 4, 3);
  REQUIRE(rows_match_as_sets(out.centers(), locs, 1e-12));
  for (Index c = 0; c < 4; ++c) REQUIRE(out.sizes()(c) == 10);
  REQUIRE(wcss(P, out.centers()) == 0.0);
}

TEST_CASE("kmeans recovers well-separated planted centers") {
  Rng rng(11);
  Matrix verts;
  Matrix P = planted_triangle_points(100, 0.1, rng, &verts);
  LocalCenters out = kmeans(P, 3, 1);
  REQUIRE(rows_match_as_sets(out.centers(), verts, 0.1));
}

TEST_CASE("kmeans rejects m above the number of distinct points") {
  Matrix P(5, 1);
  P << 1, 1, 2, 2, 3;
  try {
    kmeans(P, 4, 0);
    FAIL("expected an infeasible-clustering error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::InfeasibleClustering);
  }
  REQUIRE_NOTHROW(kmeans(P, 3, 0));
}

TEST_CASE("kmeans is deterministic given the seed") {
  Rng rng(12);
  Matrix P = planted_triangle_points(30, 1.0, rng);
  LocalCenters a = kmeans(P, 5, 42);
  LocalCenters b = kmeans(P, 5, 42);
  REQUIRE((a.centers() - b.centers()).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((a.sizes() - b.sizes()).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("more Lloyd iterations never worsen the clustering objective") {
  Rng rng(13);
  Matrix P = planted_triangle_points(40, 2.0, rng);
  LocalCenters one = kmeans(P, 4, 7, 1, 1);
  LocalCenters many = kmeans(P, 4, 7, 1, 100);
  REQUIRE(wcss(P, many.centers()) <= wcss(P, one.centers()) + 1e-12);
}

TEST_CASE("LocalCenters validates its bookkeeping") {
  Matrix C(2, 1);
  C << 0.0, 1.0;
  Eigen::VectorXi sizes(2);
  sizes << 3, 4;
  REQUIRE_NOTHROW(LocalCenters(C, sizes, 7));
  REQUIRE_THROWS_AS(LocalCenters(C, sizes, 8), Error);
}

TEST_CASE("exhaustive hunting on exactly K points returns them with objective 0") {
  Matrix C(3, 2);
  C << 0, 0, 2, 0, 0, 2;
  Eigen::VectorXi sizes(3);
  sizes << 1, 1, 1;
  LocalCenters centers(C, sizes, 3);
  double obj = -1.0;
  Simplex S = vertex_hunt_exhaustive(centers, 3, &obj);
  REQUIRE(rows_match_as_sets(S.vertices(), C, 0.0));
  REQUIRE(obj == 0.0);
}

TEST_CASE("interior centers never displace the true vertices") {
  Matrix C(8, 2);
  C << 0, 0, 6, 0, 0, 6,  // vertices
      1, 1, 2, 2, 1, 2, 2, 1, 1.5, 1.5;
  Eigen::VectorXi sizes = Eigen::VectorXi::Ones(8);
  LocalCenters centers(C, sizes, 8);
  double obj = -1.0;
  Simplex S = vertex_hunt_exhaustive(centers, 3, &obj);
  REQUIRE(rows_match_as_sets(S.vertices(), C.topRows(3), 0.0));
  REQUIRE(obj <= 1e-12);
}

TEST_CASE("exhaustive hunting agrees with an independent subset enumeration") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix C(6, 2);
    for (Index i = 0; i < 6; ++i)
      C.row(i) = Eigen::RowVector2d(rng.uniform(-1, 1), rng.uniform(-1, 1));
    Eigen::VectorXi sizes = Eigen::VectorXi::Ones(6);
    LocalCenters centers(C, sizes, 6);
    double obj = -1.0;
    Simplex S = vertex_hunt_exhaustive(centers, 3, &obj);

    // oracle: direct loop over all C(6,3) = 20 subsets
    double bestObj = std::numeric_limits<double>::infinity();
    Matrix bestV;
    for (Index a = 0; a < 6; ++a)
      for (Index b = a + 1; b < 6; ++b)
        for (Index c = b + 1; c < 6; ++c) {
          Matrix V(3, 2);
          V.row(0) = C.row(a);
          V.row(1) = C.row(b);
          V.row(2) = C.row(c);
          if (!affinely_independent(V)) continue;
          Simplex cand(V);
          double o = 0.0;
          for (Index i = 0; i < 6; ++i)
            o = std::max(o, distance_to_simplex(C.row(i).transpose(), cand));
          if (o < bestObj) {
            bestObj = o;
            bestV = V;
          }
        }
    REQUIRE(std::abs(obj - bestObj) <= 1e-12);
    REQUIRE(rows_match_as_sets(S.vertices(), bestV, 0.0));
  }
}

TEST_CASE("collinear centers trigger the declared fallback") {
  Matrix C(4, 2);
  C << 0, 0, 1, 1, 2, 2, 3, 3;
  Eigen::VectorXi sizes = Eigen::VectorXi::Ones(4);
  LocalCenters centers(C, sizes, 4);
  double obj = -1.0;
  Simplex S = vertex_hunt_exhaustive(centers, 3, &obj);
  REQUIRE((S.vertices() - Simplex::fallback(3).vertices()).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(obj > 0.0);  // honestly reported, not zeroed
}

TEST_CASE("greedy with K0 = m matches the exhaustive search") {
  Rng rng(19);
  Matrix C(7, 2);
  for (Index i = 0; i < 7; ++i)
    C.row(i) = Eigen::RowVector2d(rng.uniform(-2, 2), rng.uniform(-2, 2));
  Eigen::VectorXi sizes = Eigen::VectorXi::Ones(7);
  LocalCenters centers(C, sizes, 7);
  double og = -1.0, oe = -1.0;
  Simplex G = vertex_hunt_greedy(centers, 3, 7, &og);
  Simplex E = vertex_hunt_exhaustive(centers, 3, &oe);
  REQUIRE((G.vertices() - E.vertices()).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(og == oe);
}

TEST_CASE("greedy keeps far vertices over a near-barycenter cloud") {
  Rng rng(23);
  Matrix C(23, 2);
  C.row(0) = Eigen::RowVector2d(0, 0);
  C.row(1) = Eigen::RowVector2d(9, 0);
  C.row(2) = Eigen::RowVector2d(0, 9);
  for (Index i = 3; i < 23; ++i)
    C.row(i) = Eigen::RowVector2d(3.0 + 0.1 * rng.gaussian(),
                                  3.0 + 0.1 * rng.gaussian());
  Eigen::VectorXi sizes = Eigen::VectorXi::Ones(23);
  LocalCenters centers(C, sizes, 23);
  Simplex S = vertex_hunt_greedy(centers, 3, 3);
  REQUIRE(rows_match_as_sets(S.vertices(), C.topRows(3), 0.0));
}

TEST_CASE("greedy is never better than exhaustive and is close on planted data") {
  Rng rng(29);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix P = planted_triangle_points(10, 0.2, rng);
    LocalCenters centers = kmeans(P, 8, 5);
    double og = -1.0, oe = -1.0;
    (void)vertex_hunt_greedy(centers, 3, 4, &og);
    (void)vertex_hunt_exhaustive(centers, 3, &oe);
    REQUIRE(og >= oe - 1e-12);
    REQUIRE(og <= 2.0 * oe + 1e-9);
  }
}

TEST_CASE("vertex hunting validates its inputs") {
  Matrix C(3, 2);
  C << 0, 0, 1, 0, 0, 1;
  Eigen::VectorXi sizes = Eigen::VectorXi::Ones(3);
  LocalCenters centers(C, sizes, 3);
  REQUIRE_THROWS_AS(vertex_hunt_exhaustive(centers, 4), Error);
  REQUIRE_THROWS_AS(vertex_hunt_greedy(centers, 3, 5), Error);
  REQUIRE_THROWS_AS(vertex_hunt_greedy(centers, 3, 2), Error);
}
