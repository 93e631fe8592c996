#pragma once

#include "topicsimplex/core.hpp"
#include "topicsimplex/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace topics {

inline double truncate(double x, double a) {
  require(a > 0.0, ErrorKind::Validation, "truncate: threshold must be positive");
  double m = std::min(std::abs(x), a);
  return x < 0.0 ? -m : m;
}

// Entrywise ratios of singular vectors 2..K over the leading one, clamped at
// the threshold. Rows whose leading entry is numerically zero become zero
// rows: such a word is effectively absent from the corpus.
class RatioMatrix {
 public:
  RatioMatrix(Matrix R, double threshold) : R_(std::move(R)), threshold_(threshold) {
    require(threshold_ > 0.0, ErrorKind::Validation,
            "RatioMatrix: threshold must be positive");
    require(R_.size() == 0 || R_.cwiseAbs().maxCoeff() <= threshold_,
            ErrorKind::Validation, "RatioMatrix: entries exceed the threshold");
  }

  Index p() const { return R_.rows(); }
  Index dim() const { return R_.cols(); }  // K - 1
  double threshold() const { return threshold_; }
  const Matrix& matrix() const { return R_; }

 private:
  Matrix R_;
  double threshold_;
};

inline RatioMatrix ratio_matrix(const SingularBasis& basis, Index n,
                                std::optional<double> thresholdOverride = {}) {
  require(basis.K() >= 2, ErrorKind::Validation, "ratio_matrix: need K >= 2");
  require(n >= 1, ErrorKind::Validation, "ratio_matrix: need n >= 1");
  const Index p = basis.p();
  const Index K = basis.K();
  const double a = thresholdOverride
                       ? *thresholdOverride
                       : std::log(static_cast<double>(std::max(n, p)));
  const Matrix& U = basis.vectors();
  Matrix R(p, K - 1);
  for (Index j = 0; j < p; ++j) {
    const double xi1 = U(j, 0);
    if (std::abs(xi1) < 1e-300) {
      R.row(j).setZero();
      continue;
    }
    for (Index k = 1; k < K; ++k) R(j, k - 1) = truncate(U(j, k) / xi1, a);
  }
  return RatioMatrix(std::move(R), a);
}

namespace detail {

// Affine independence: |det [V | 1]| > 1e-12 after scaling each row of the
// augmented matrix to unit norm.
inline double scaled_affine_det(const Matrix& V) {
  const Index K = V.rows();
  Matrix M(K, K);
  M.leftCols(K - 1) = V;
  M.col(K - 1).setOnes();
  for (Index i = 0; i < K; ++i) M.row(i) /= M.row(i).norm();
  return std::abs(M.determinant());
}

inline double affine_volume_key(const Matrix& V) {
  const Index K = V.rows();
  Matrix M(K, K);
  M.leftCols(K - 1) = V;
  M.col(K - 1).setOnes();
  return std::abs(M.determinant());
}

}  // namespace detail

inline bool affinely_independent(const Matrix& vertices) {
  return detail::scaled_affine_det(vertices) > 1e-12;
}

// K affinely independent vertices in R^(K-1), one per row.
class Simplex {
 public:
  explicit Simplex(Matrix vertices) : V_(std::move(vertices)) {
    require(V_.rows() >= 2, ErrorKind::Validation, "Simplex: need K >= 2 vertices");
    require(V_.cols() == V_.rows() - 1, ErrorKind::Validation,
            "Simplex: K vertices must live in R^(K-1)");
    require(affinely_independent(V_), ErrorKind::Validation,
            "Simplex: vertices are affinely dependent");
  }

  Index K() const { return V_.rows(); }
  Index dim() const { return V_.cols(); }
  const Matrix& vertices() const { return V_; }

  // Fallback used when no affinely independent vertex subset exists:
  // the reference simplex {0, e_1, ..., e_{K-1}}.
  static Simplex fallback(Index K) {
    Matrix V = Matrix::Zero(K, K - 1);
    for (Index k = 1; k < K; ++k) V(k, k - 1) = 1.0;
    return Simplex(std::move(V));
  }

 private:
  Matrix V_;
};

// k-means cluster centers with their cluster cardinalities.
class LocalCenters {
 public:
  LocalCenters(Matrix centers, Eigen::VectorXi sizes, Index pointCount)
      : C_(std::move(centers)), sizes_(std::move(sizes)) {
    require(C_.rows() >= 1, ErrorKind::Validation, "LocalCenters: need m >= 1");
    require(C_.rows() == sizes_.size(), ErrorKind::Validation,
            "LocalCenters: center/size count mismatch");
    require(sizes_.sum() == pointCount, ErrorKind::Validation,
            "LocalCenters: cluster sizes must sum to the point count");
  }

  Index m() const { return C_.rows(); }
  Index dim() const { return C_.cols(); }
  const Matrix& centers() const { return C_; }
  const Eigen::VectorXi& sizes() const { return sizes_; }

 private:
  Matrix C_;
  Eigen::VectorXi sizes_;
};

// Euclidean distance from v to the simplex, via an active-set QP on the
// barycentric weights: min ||S^T w - v|| s.t. w >= 0, sum w = 1.
inline double distance_to_simplex(const Vector& v, const Simplex& S, double tol = 1e-9) {
  require(tol > 0.0, ErrorKind::Validation, "distance_to_simplex: tol must be positive");
  require(v.size() == S.dim(), ErrorKind::Validation,
          "distance_to_simplex: dimension mismatch");
  const Matrix& V = S.vertices();
  const Index K = V.rows();
  const Matrix G = V * V.transpose();
  const Vector c = V * v;

  Vector w = Vector::Constant(K, 1.0 / K);
  std::vector<char> active(static_cast<size_t>(K), 0);
  const int cap = 100 * static_cast<int>(K);

  for (int iter = 0; iter < cap; ++iter) {
    std::vector<Index> F;
    for (Index i = 0; i < K; ++i) {
      if (!active[static_cast<size_t>(i)]) F.push_back(i);
    }
    const Index f = static_cast<Index>(F.size());
    Matrix A = Matrix::Zero(f + 1, f + 1);
    Vector b(f + 1);
    for (Index r = 0; r < f; ++r) {
      for (Index s = 0; s < f; ++s) A(r, s) = G(F[r], F[s]);
      A(r, f) = 1.0;
      A(f, r) = 1.0;
      b(r) = c(F[r]);
    }
    b(f) = 1.0;
    const Vector sol = A.fullPivLu().solve(b);
    const Vector wF = sol.head(f);
    const double lambda = sol(f);

    if (wF.minCoeff() >= -1e-12) {
      w.setZero();
      for (Index r = 0; r < f; ++r) w(F[r]) = std::max(wF(r), 0.0);
      // Dual feasibility of the bound constraints decides optimality.
      const Vector g = G * w - c;
      double worst = -tol;
      Index worstI = -1;
      for (Index i = 0; i < K; ++i) {
        if (active[static_cast<size_t>(i)]) {
          const double mu = g(i) + lambda;
          if (mu < worst) {
            worst = mu;
            worstI = i;
          }
        }
      }
      if (worstI < 0) break;
      active[static_cast<size_t>(worstI)] = 0;
    } else {
      double alpha = 1.0;
      Index blockI = -1;
      for (Index r = 0; r < f; ++r) {
        if (wF(r) < 0.0) {
          const double step = w(F[r]) / (w(F[r]) - wF(r));
          if (step < alpha) {
            alpha = step;
            blockI = F[r];
          }
        }
      }
      for (Index r = 0; r < f; ++r) w(F[r]) += alpha * (wF(r) - w(F[r]));
      if (blockI >= 0) {
        w(blockI) = 0.0;
        active[static_cast<size_t>(blockI)] = 1;
      }
    }
  }

  // Direct residual: the expanded quadratic form cancels catastrophically
  // for points on the simplex, inflating tiny distances to ~sqrt(epsilon).
  const double d = (V.transpose() * w - v).norm();
  return d <= tol ? 0.0 : d;
}

namespace detail {

inline Index count_distinct_rows(const Matrix& P) {
  const Index n = P.rows();
  std::vector<Index> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&](Index a, Index b) {
    for (Index j = 0; j < P.cols(); ++j) {
      if (P(a, j) != P(b, j)) return P(a, j) < P(b, j);
    }
    return false;
  };
  std::sort(idx.begin(), idx.end(), less);
  Index distinct = n == 0 ? 0 : 1;
  for (Index i = 1; i < n; ++i) {
    if (less(idx[i - 1], idx[i])) ++distinct;
  }
  return distinct;
}

inline void kmeanspp_seed(const Matrix& P, Index m, Rng& rng, Matrix& centers) {
  const Index n = P.rows();
  centers.resize(m, P.cols());
  centers.row(0) = P.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
  Vector d2 = (P.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (Index j = 1; j < m; ++j) {
    const double total = d2.sum();
    Index pick = -1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cum = 0.0;
      for (Index i = 0; i < n; ++i) {
        cum += d2(i);
        if (cum > u) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {  // fp slack at u ~ total: last point with positive mass
        for (Index i = n - 1; i >= 0; --i) {
          if (d2(i) > 0.0) {
            pick = i;
            break;
          }
        }
      }
    }
    if (pick < 0) pick = 0;  // unreachable under the distinctness precondition
    centers.row(j) = P.row(pick);
    d2 = d2.cwiseMin((P.rowwise() - centers.row(j)).rowwise().squaredNorm());
  }
}

}  // namespace detail

// Classical k-means: Lloyd iterations with k-means++ seeding, best of
// `restarts` runs by within-cluster sum of squares. Deterministic given seed.
inline LocalCenters kmeans(const Matrix& points, Index m, std::uint64_t seed,
                           int restarts = 10, int maxIters = 100) {
  const Index n = points.rows();
  require(n >= 1, ErrorKind::Validation, "kmeans: need at least one point");
  require(m >= 1, ErrorKind::Validation, "kmeans: need m >= 1");
  require(restarts >= 1 && maxIters >= 1, ErrorKind::Validation,
          "kmeans: restarts and maxIters must be >= 1");
  require(m <= detail::count_distinct_rows(points), ErrorKind::InfeasibleClustering,
          "kmeans: m exceeds the number of distinct points");

  Rng root(seed);
  Matrix bestCenters;
  std::vector<Index> bestAssign;
  double bestObj = std::numeric_limits<double>::infinity();

  Matrix centers;
  std::vector<Index> assign(static_cast<size_t>(n)), prev;
  std::vector<Index> counts(static_cast<size_t>(m));

  for (int r = 0; r < restarts; ++r) {
    Rng rng = root.fork(static_cast<std::uint64_t>(r));
    detail::kmeanspp_seed(points, m, rng, centers);
    prev.assign(static_cast<size_t>(n), -1);

    for (int it = 0; it < maxIters; ++it) {
      for (Index i = 0; i < n; ++i) {
        Index arg = 0;
        double best = (points.row(i) - centers.row(0)).squaredNorm();
        for (Index jc = 1; jc < m; ++jc) {
          const double d = (points.row(i) - centers.row(jc)).squaredNorm();
          if (d < best) {
            best = d;
            arg = jc;
          }
        }
        assign[static_cast<size_t>(i)] = arg;
      }

      std::fill(counts.begin(), counts.end(), 0);
      for (Index i = 0; i < n; ++i) ++counts[static_cast<size_t>(assign[i])];

      // Empty clusters steal, one at a time, the point farthest from its own
      // center among clusters that can spare one.
      std::vector<char> stolen(static_cast<size_t>(n), 0);
      for (Index c = 0; c < m; ++c) {
        if (counts[static_cast<size_t>(c)] > 0) continue;
        double far = -1.0;
        Index farI = -1;
        for (Index i = 0; i < n; ++i) {
          if (stolen[static_cast<size_t>(i)]) continue;
          if (counts[static_cast<size_t>(assign[i])] < 2) continue;
          const double d = (points.row(i) - centers.row(assign[i])).squaredNorm();
          if (d > far) {
            far = d;
            farI = i;
          }
        }
        if (farI < 0) break;  // cannot happen when m <= distinct points
        stolen[static_cast<size_t>(farI)] = 1;
        --counts[static_cast<size_t>(assign[farI])];
        assign[static_cast<size_t>(farI)] = c;
        counts[static_cast<size_t>(c)] = 1;
      }

      Matrix sums = Matrix::Zero(m, points.cols());
      for (Index i = 0; i < n; ++i) sums.row(assign[i]) += points.row(i);
      for (Index c = 0; c < m; ++c) {
        if (counts[static_cast<size_t>(c)] > 0) {
          centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<size_t>(c)]);
        }
      }

      if (assign == prev) break;
      prev = assign;
    }

    double obj = 0.0;
    for (Index i = 0; i < n; ++i) {
      obj += (points.row(i) - centers.row(assign[i])).squaredNorm();
    }
    if (obj < bestObj) {
      bestObj = obj;
      bestCenters = centers;
      bestAssign = assign;
    }
  }

  Eigen::VectorXi sizes = Eigen::VectorXi::Zero(m);
  for (Index i = 0; i < n; ++i) ++sizes(bestAssign[static_cast<size_t>(i)]);
  return LocalCenters(std::move(bestCenters), std::move(sizes), n);
}

namespace detail {

// Minimax search over K-subsets of `cand` (ascending indices, lexicographic
// order); the objective is taken over all rows of `centers`. Ties prefer the
// larger simplex volume, then the earlier subset.
struct SubsetSearch {
  bool found = false;
  std::vector<Index> subset;
  double objective = std::numeric_limits<double>::infinity();
  double volume = -1.0;
};

inline SubsetSearch best_subset(const Matrix& centers, const std::vector<Index>& cand,
                                Index K) {
  const Index m = centers.rows();
  const Index c = static_cast<Index>(cand.size());
  SubsetSearch best;
  if (c < K) return best;

  std::vector<Index> comb(static_cast<size_t>(K));
  std::iota(comb.begin(), comb.end(), 0);
  Matrix V(K, centers.cols());

  while (true) {
    for (Index k = 0; k < K; ++k) V.row(k) = centers.row(cand[comb[k]]);
    if (affinely_independent(V)) {
      Simplex S(V);
      double obj = 0.0;
      bool worse = false;
      for (Index i = 0; i < m; ++i) {
        obj = std::max(obj, distance_to_simplex(centers.row(i).transpose(), S));
        if (obj > best.objective) {
          worse = true;
          break;
        }
      }
      if (!worse) {
        const double vol = affine_volume_key(V);
        if (!best.found || obj < best.objective ||
            (obj == best.objective && vol > best.volume)) {
          best.found = true;
          best.objective = obj;
          best.volume = vol;
          best.subset.assign(static_cast<size_t>(K), 0);
          for (Index k = 0; k < K; ++k) best.subset[k] = cand[comb[k]];
        }
      }
    }
    // next lexicographic combination
    Index k = K - 1;
    while (k >= 0 && comb[k] == c - K + k) --k;
    if (k < 0) break;
    ++comb[k];
    for (Index j = k + 1; j < K; ++j) comb[j] = comb[j - 1] + 1;
  }
  return best;
}

inline Simplex subset_to_simplex(const Matrix& centers, const SubsetSearch& found,
                                 Index K, double* objectiveOut) {
  if (!found.found) {
    Simplex fb = Simplex::fallback(K);
    if (objectiveOut) {
      double obj = 0.0;
      for (Index i = 0; i < centers.rows(); ++i) {
        obj = std::max(obj, distance_to_simplex(centers.row(i).transpose(), fb));
      }
      *objectiveOut = obj;
    }
    return fb;
  }
  Matrix V(K, centers.cols());
  for (Index k = 0; k < K; ++k) V.row(k) = centers.row(found.subset[k]);
  if (objectiveOut) *objectiveOut = found.objective;
  return Simplex(std::move(V));
}

}  // namespace detail

// Step 2b: search all affinely independent K-subsets of the centers for the
// one minimizing the maximum center-to-simplex distance.
inline Simplex vertex_hunt_exhaustive(const LocalCenters& centers, Index K,
                                      double* objectiveOut = nullptr) {
  require(K >= 2, ErrorKind::Validation, "vertex_hunt_exhaustive: need K >= 2");
  require(centers.m() >= K, ErrorKind::Validation,
          "vertex_hunt_exhaustive: need at least K centers");
  require(centers.dim() == K - 1, ErrorKind::Validation,
          "vertex_hunt_exhaustive: centers must live in R^(K-1)");
  std::vector<Index> cand(static_cast<size_t>(centers.m()));
  std::iota(cand.begin(), cand.end(), 0);
  auto found = detail::best_subset(centers.centers(), cand, K);
  return detail::subset_to_simplex(centers.centers(), found, K, objectiveOut);
}

// Step 2b': keep the farthest pair, grow by maximal distance to the running
// mean until K0 centers remain, then run the exhaustive search restricted to
// those, with the objective still over all m centers.
inline Simplex vertex_hunt_greedy(const LocalCenters& centers, Index K, Index K0,
                                  double* objectiveOut = nullptr) {
  require(K >= 2, ErrorKind::Validation, "vertex_hunt_greedy: need K >= 2");
  require(K <= K0 && K0 <= centers.m(), ErrorKind::Validation,
          "vertex_hunt_greedy: need K <= K0 <= m");
  require(centers.dim() == K - 1, ErrorKind::Validation,
          "vertex_hunt_greedy: centers must live in R^(K-1)");
  const Matrix& C = centers.centers();
  const Index m = centers.m();

  Index bi = 0, bj = 1;
  double bestD = -1.0;
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      const double d = (C.row(i) - C.row(j)).squaredNorm();
      if (d > bestD) {
        bestD = d;
        bi = i;
        bj = j;
      }
    }
  }

  std::vector<Index> sel = {bi, bj};
  std::vector<char> used(static_cast<size_t>(m), 0);
  used[static_cast<size_t>(bi)] = used[static_cast<size_t>(bj)] = 1;
  Eigen::RowVectorXd mean = (C.row(bi) + C.row(bj)) / 2.0;
  while (static_cast<Index>(sel.size()) < K0) {
    Index pick = -1;
    double far = -1.0;
    for (Index i = 0; i < m; ++i) {
      if (used[static_cast<size_t>(i)]) continue;
      const double d = (C.row(i) - mean).squaredNorm();
      if (d > far) {
        far = d;
        pick = i;
      }
    }
    used[static_cast<size_t>(pick)] = 1;
    sel.push_back(pick);
    const double k = static_cast<double>(sel.size());
    mean = mean * ((k - 1.0) / k) + C.row(pick) / k;
  }

  std::sort(sel.begin(), sel.end());
  auto found = detail::best_subset(C, sel, K);
  return detail::subset_to_simplex(C, found, K, objectiveOut);
}

}  // namespace topics
