#pragma once

#include "topicsimplex/core.hpp"
#include "topicsimplex/geometry.hpp"
#include "topicsimplex/spectral.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace topics {

// Barycentric word weights Pi: dense p x K, row-stochastic.
class WeightMatrix {
 public:
  explicit WeightMatrix(Matrix M, double tol = 1e-9) : M_(std::move(M)) {
    require(M_.rows() >= 1 && M_.cols() >= 1, ErrorKind::Validation,
            "WeightMatrix: need p >= 1 and K >= 1");
    require(validate_column_stochastic(Matrix(M_.transpose()), tol),
            ErrorKind::Validation,
            "WeightMatrix: rows must be nonnegative and sum to 1");
  }

  Index p() const { return M_.rows(); }
  Index K() const { return M_.cols(); }
  const Matrix& matrix() const { return M_; }

 private:
  Matrix M_;
};

// Tuning parameters of the practical pipeline. Zero means "use the default":
// s = p, m = 10K, K0 = ceil(5K/4).
struct EstimatorConfig {
  Index K = 2;
  Index s = 0;
  Index m = 0;
  Index K0 = 0;
  std::uint64_t seed = 0;
  bool useGreedy = true;
};

struct EstimateReport {
  TopicMatrix topics;
  WeightMatrix weights;
  Simplex simplex;
  RatioMatrix ratios;
  Index clippedRowCount = 0;
  Vector singularValues;
};

// Step 3: barycentric coordinates of every ratio row, negatives clipped and
// rows renormalized. A row clipped to all-zero falls back to uniform.
inline WeightMatrix recover_weights(const RatioMatrix& R, const Simplex& S,
                                    Index* clippedRowCount = nullptr) {
  const Index K = S.K();
  require(R.dim() == S.dim(), ErrorKind::Validation,
          "recover_weights: dimension mismatch");

  Matrix B(K, K);
  B.leftCols(K - 1) = S.vertices();
  B.col(K - 1).setOnes();
  {
    Eigen::JacobiSVD<Matrix> svd(B);
    const double smin = svd.singularValues()(K - 1);
    const double cond = smin > 0.0 ? svd.singularValues()(0) / smin
                                   : std::numeric_limits<double>::infinity();
    require(cond < 1e10, ErrorKind::Conditioning,
            "recover_weights: simplex matrix condition number " +
                std::to_string(cond) + " exceeds 1e10");
  }

  const Index p = R.p();
  Matrix Raug(p, K);
  Raug.leftCols(K - 1) = R.matrix();
  Raug.col(K - 1).setOnes();
  Matrix PiTilde =
      Matrix(B.transpose()).partialPivLu().solve(Raug.transpose()).transpose();

  Index clipped = 0;
  Matrix Pi(p, K);
  for (Index j = 0; j < p; ++j) {
    bool rowClipped = false;
    double sum = 0.0;
    for (Index k = 0; k < K; ++k) {
      double v = PiTilde(j, k);
      if (v < 0.0) {
        v = 0.0;
        rowClipped = true;
      }
      Pi(j, k) = v;
      sum += v;
    }
    if (rowClipped) ++clipped;
    if (sum <= 0.0) {
      Pi.row(j).setConstant(1.0 / static_cast<double>(K));
    } else {
      Pi.row(j) /= sum;
    }
  }
  if (clippedRowCount) *clippedRowCount = clipped;
  return WeightMatrix(std::move(Pi));
}

// Steps 4-5. The source description writes A* = Pi * diag(xi_1), whose shapes
// (p x K times p x p) do not compose; inverting Pi = [diag(xi_1)]^{-1} A
// diag(V_1) forces A* = diag(xi_1) * Pi, which is what this computes. Per
// column the s largest entries survive (ties keep the lower word index) and
// the column is renormalized; a nonpositive column sum is an error rather
// than a silent sign flip.
inline TopicMatrix assemble_topics(const WeightMatrix& weights, const Vector& xi1,
                                   Index s) {
  const Index p = weights.p();
  const Index K = weights.K();
  require(s >= 1, ErrorKind::Validation, "assemble_topics: need s >= 1");
  require(xi1.size() == p, ErrorKind::Validation,
          "assemble_topics: xi1 length must match word count");

  Matrix A = xi1.asDiagonal() * weights.matrix();
  std::vector<Index> order(static_cast<size_t>(p));
  for (Index k = 0; k < K; ++k) {
    if (s < p) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        if (A(a, k) != A(b, k)) return A(a, k) > A(b, k);
        return a < b;
      });
      for (Index r = s; r < p; ++r) A(order[static_cast<size_t>(r)], k) = 0.0;
    }
    // Surviving negatives mean xi1 is not positive on the topic's support
    // (tied spectrum, disconnected corpus): refuse rather than emit a column
    // that is not a distribution.
    const double colSum = A.col(k).sum();
    require(colSum > 0.0 && A.col(k).minCoeff() >= 0.0, ErrorKind::DegenerateTopic,
            "assemble_topics: topic " + std::to_string(k + 1) +
                " has nonpositive mass after masking");
    A.col(k) /= colSum;
  }
  return TopicMatrix(std::move(A));
}

namespace detail {

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    const std::string label(name);
    const std::string what(e.what());
    if (what.rfind(label + ":", 0) == 0) throw;  // already tagged
    throw Error(e.kind(), label + ": " + what);
  }
}

inline std::vector<Index> nonzero_rows(const SparseMatrix& M) {
  std::vector<char> nz(static_cast<size_t>(M.rows()), 0);
  for (Index j = 0; j < M.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      if (it.value() != 0.0) nz[static_cast<size_t>(it.row())] = 1;
    }
  }
  std::vector<Index> rows;
  for (Index i = 0; i < M.rows(); ++i) {
    if (nz[static_cast<size_t>(i)]) rows.push_back(i);
  }
  return rows;
}

}  // namespace detail

// The full practical pipeline, steps 1-5: truncated SVD, eigen-ratio matrix,
// k-means sketch, vertex hunting, weight recovery, topic assembly. Words with
// all-zero rows are dropped up front and reinserted afterwards (zero rows in
// topics and ratios, uniform rows in the weights).
inline EstimateReport estimate_topics(const TermDocMatrix& D, EstimatorConfig cfg) {
  const Index pFull = D.p();
  const Index n = D.n();

  require(cfg.K >= 2, ErrorKind::Validation, "estimate_topics: need K >= 2");
  if (cfg.s == 0) cfg.s = pFull;
  if (cfg.m == 0) cfg.m = 10 * cfg.K;
  // The ceil(5K/4) default presumes the default m = 10K; clamp the derived
  // value when the caller chose a smaller m. An explicit K0 is validated as
  // given.
  if (cfg.K0 == 0) cfg.K0 = std::min((5 * cfg.K + 3) / 4, cfg.m);
  require(cfg.s >= 1, ErrorKind::Validation, "estimate_topics: need s >= 1");
  require(cfg.m >= cfg.K, ErrorKind::Validation, "estimate_topics: need m >= K");
  require(cfg.K <= cfg.K0 && cfg.K0 <= cfg.m, ErrorKind::Validation,
          "estimate_topics: need K <= K0 <= m");

  const std::vector<Index> keep = detail::nonzero_rows(D.matrix());
  const Index p = static_cast<Index>(keep.size());
  require(p >= 1, ErrorKind::Validation, "estimate_topics: D is zero");
  require(cfg.K <= std::min(p, n), ErrorKind::Validation,
          "estimate_topics: need K <= min(p, n) over words that occur");

  TermDocMatrix Dwork = [&] {
    if (p == pFull) return D;
    std::vector<Index> rowMap(static_cast<size_t>(pFull), -1);
    for (Index i = 0; i < p; ++i) rowMap[static_cast<size_t>(keep[i])] = i;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(D.matrix().nonZeros()));
    for (Index j = 0; j < D.matrix().outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(D.matrix(), j); it; ++it) {
        const Index r = rowMap[static_cast<size_t>(it.row())];
        if (r >= 0) trips.emplace_back(static_cast<int>(r), static_cast<int>(j), it.value());
      }
    }
    SparseMatrix M(p, n);
    M.setFromTriplets(trips.begin(), trips.end());
    return TermDocMatrix(std::move(M));
  }();

  SvdConfig svdCfg;
  svdCfg.K = cfg.K;
  svdCfg.seed = cfg.seed;
  SingularBasis basis = detail::stage("svd", [&] {
    return top_left_singular(Dwork, svdCfg);
  });

  RatioMatrix ratios = detail::stage("ratio", [&] {
    return ratio_matrix(basis, n);
  });

  LocalCenters centers = detail::stage("kmeans", [&] {
    return kmeans(ratios.matrix(), cfg.m, Rng(cfg.seed).fork(0x6d1).next());
  });

  Simplex simplex = detail::stage("vertex-hunt", [&] {
    return cfg.useGreedy ? vertex_hunt_greedy(centers, cfg.K, cfg.K0)
                         : vertex_hunt_exhaustive(centers, cfg.K);
  });

  Index clipped = 0;
  WeightMatrix weights = detail::stage("weights", [&] {
    return recover_weights(ratios, simplex, &clipped);
  });

  TopicMatrix topics = detail::stage("assemble", [&] {
    return assemble_topics(weights, basis.vectors().col(0), std::min(cfg.s, p));
  });

  if (p == pFull) {
    return EstimateReport{std::move(topics), std::move(weights), std::move(simplex),
                          std::move(ratios), clipped, basis.values()};
  }

  Matrix topicsFull = Matrix::Zero(pFull, cfg.K);
  Matrix weightsFull =
      Matrix::Constant(pFull, cfg.K, 1.0 / static_cast<double>(cfg.K));
  Matrix ratiosFull = Matrix::Zero(pFull, cfg.K - 1);
  for (Index i = 0; i < p; ++i) {
    topicsFull.row(keep[i]) = topics.matrix().row(i);
    weightsFull.row(keep[i]) = weights.matrix().row(i);
    ratiosFull.row(keep[i]) = ratios.matrix().row(i);
  }
  return EstimateReport{TopicMatrix(std::move(topicsFull)),
                        WeightMatrix(std::move(weightsFull)), std::move(simplex),
                        RatioMatrix(std::move(ratiosFull), ratios.threshold()),
                        clipped, basis.values()};
}

// Noiseless oracle, steps (i)-(v): the exact ratio cloud (no truncation), the
// vertices as extreme rows found by the exhaustive hunt over deduplicated
// rows, then weight recovery and assembly.
inline TopicMatrix ideal_reconstruct(const SingularBasis& Xi, Index K) {
  require(K >= 2, ErrorKind::Validation, "ideal_reconstruct: need K >= 2");
  require(K == Xi.K(), ErrorKind::Validation,
          "ideal_reconstruct: K must match the basis");

  RatioMatrix R = ratio_matrix(Xi, 1, 1e308);
  const Matrix& Rm = R.matrix();
  const Index p = Rm.rows();

  std::vector<Index> idx(static_cast<size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&](Index a, Index b) {
    for (Index j = 0; j < Rm.cols(); ++j) {
      if (Rm(a, j) != Rm(b, j)) return Rm(a, j) < Rm(b, j);
    }
    return false;
  };
  std::sort(idx.begin(), idx.end(), less);
  std::vector<Index> reps;
  std::vector<int> mult;
  for (Index i = 0; i < p; ++i) {
    if (i == 0 || less(idx[i - 1], idx[i])) {
      reps.push_back(idx[i]);
      mult.push_back(1);
    } else {
      ++mult.back();
    }
  }
  require(static_cast<Index>(reps.size()) >= K, ErrorKind::Identifiability,
          "ideal_reconstruct: fewer than K distinct ratio rows");

  Matrix dedup(static_cast<Index>(reps.size()), Rm.cols());
  Eigen::VectorXi sizes(static_cast<Index>(reps.size()));
  for (size_t i = 0; i < reps.size(); ++i) {
    dedup.row(static_cast<Index>(i)) = Rm.row(reps[i]);
    sizes(static_cast<Index>(i)) = mult[i];
  }
  LocalCenters cloud(std::move(dedup), std::move(sizes), p);

  double objective = 0.0;
  Simplex S = vertex_hunt_exhaustive(cloud, K, &objective);
  require(objective <= 1e-8, ErrorKind::Identifiability,
          "ideal_reconstruct: point cloud is not a K-vertex simplex "
          "(some topic lacks an anchor word); residual " +
              std::to_string(objective));

  WeightMatrix Pi = recover_weights(R, S);
  return assemble_topics(Pi, Xi.vectors().col(0), p);
}

enum class L1Aggregate { maxOverTopics, sumOverTopics };

// Minimum over column permutations of the aggregated per-column l1 distance,
// solved exactly by subset dynamic programming.
inline double l1_error(const TopicMatrix& est, const TopicMatrix& truth,
                       L1Aggregate aggregate = L1Aggregate::maxOverTopics) {
  require(est.p() == truth.p() && est.K() == truth.K(), ErrorKind::Validation,
          "l1_error: shape mismatch");
  const Index K = est.K();
  require(K <= 20, ErrorKind::Validation, "l1_error: K too large for exact matching");

  Matrix cost(K, K);
  for (Index i = 0; i < K; ++i) {
    for (Index j = 0; j < K; ++j) {
      cost(i, j) = (est.matrix().col(i) - truth.matrix().col(j)).lpNorm<1>();
    }
  }

  const std::uint32_t full = (1u << K) - 1u;
  std::vector<double> dp(full + 1, std::numeric_limits<double>::infinity());
  dp[0] = 0.0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const Index i = static_cast<Index>(std::popcount(mask)) - 1;
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < K; ++j) {
      if (!(mask & (1u << j))) continue;
      const double prev = dp[mask ^ (1u << j)];
      const double v = aggregate == L1Aggregate::maxOverTopics
                           ? std::max(prev, cost(i, j))
                           : prev + cost(i, j);
      best = std::min(best, v);
    }
    dp[mask] = best;
  }
  return dp[full];
}

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_csv_matrix(const Matrix& M, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write '" + path + "'");
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
  require(out.good(), ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace detail

inline void write_report(const EstimateReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create directory '" + dir + "'");

  detail::write_csv_matrix(report.topics.matrix(), dir + "/topics.csv");
  detail::write_csv_matrix(report.weights.matrix(), dir + "/weights.csv");
  detail::write_csv_matrix(report.simplex.vertices(), dir + "/simplex.csv");

  std::ofstream out(dir + "/diagnostics.txt");
  require(out.good(), ErrorKind::Io, "cannot write '" + dir + "/diagnostics.txt'");
  out << "p=" << report.topics.p() << '\n';
  out << "K=" << report.topics.K() << '\n';
  out << "clippedRowCount=" << report.clippedRowCount << '\n';
  out << "ratioThreshold=" << detail::format_double(report.ratios.threshold()) << '\n';
  out << "singularValues=";
  for (Index k = 0; k < report.singularValues.size(); ++k) {
    if (k) out << ',';
    out << detail::format_double(report.singularValues(k));
  }
  out << '\n';
  require(out.good(), ErrorKind::Io, "write failed for diagnostics");
}

}  // namespace topics
