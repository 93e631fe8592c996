#pragma once

#include "topicsimplex/core.hpp"
#include "topicsimplex/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace topics {

enum class SvdMethod { exactLanczos, randomized };

struct SvdConfig {
  Index K = 2;
  SvdMethod method = SvdMethod::randomized;
  int oversample = 10;
  int powerIters = 2;
  std::uint64_t seed = 0;
  double tol = 1e-4;  // residual tolerance, scaled by sigma_1^2
};

namespace detail {

inline Matrix orthonormalize(const Matrix& Y) {
  Eigen::HouseholderQR<Matrix> qr(Y);
  return qr.householderQ() * Matrix::Identity(Y.rows(), Y.cols());
}

// Sign convention: entry sum >= 0 per vector; a zero sum falls back to the
// first nonzero entry being positive.
inline void fix_signs(Matrix& U) {
  for (Index k = 0; k < U.cols(); ++k) {
    double s = U.col(k).sum();
    bool flip = s < 0.0;
    if (s == 0.0) {
      for (Index i = 0; i < U.rows(); ++i) {
        if (U(i, k) != 0.0) {
          flip = U(i, k) < 0.0;
          break;
        }
      }
    }
    if (flip) U.col(k) = -U.col(k);
  }
}

inline Vector svd_residuals(const SparseMatrix& D, const Matrix& U, const Vector& s) {
  Matrix T = D * (D.transpose() * U);
  T.noalias() -= U * s.array().square().matrix().asDiagonal();
  return T.colwise().norm();
}

}  // namespace detail

// Top-K left singular pairs of D. The randomized range finder follows the
// usual sketch + power-iteration scheme and keeps iterating the subspace
// until the residual bound holds; exactLanczos is Golub-Kahan
// bidiagonalization with full reorthogonalization and breakdown restarts.
inline SingularBasis top_left_singular(const TermDocMatrix& D, const SvdConfig& cfg) {
  require(cfg.K >= 1, ErrorKind::Validation, "SvdConfig: K must be >= 1");
  require(cfg.oversample >= 0, ErrorKind::Validation, "SvdConfig: oversample must be >= 0");
  require(cfg.powerIters >= 0, ErrorKind::Validation, "SvdConfig: powerIters must be >= 0");
  require(cfg.tol > 0.0, ErrorKind::Validation, "SvdConfig: tol must be positive");

  const SparseMatrix& M = D.matrix();
  const Index p = M.rows(), n = M.cols();
  require(cfg.K <= std::min(p, n), ErrorKind::Validation,
          "top_left_singular: K must be <= min(p, n)");
  require(M.nonZeros() > 0, ErrorKind::Validation, "top_left_singular: D is zero");

  Matrix U;
  Vector s;

  if (cfg.method == SvdMethod::randomized) {
    const Index l = std::min<Index>(cfg.K + cfg.oversample, std::min(p, n));
    Rng rng = Rng(cfg.seed).fork(0x5bd);
    Matrix Omega(n, l);
    for (Index j = 0; j < l; ++j) {
      for (Index i = 0; i < n; ++i) Omega(i, j) = rng.gaussian();
    }
    Matrix Q = detail::orthonormalize(M * Omega);
    for (int t = 0; t < cfg.powerIters; ++t) {
      Matrix Z = detail::orthonormalize(M.transpose() * Q);
      Q = detail::orthonormalize(M * Z);
    }

    const int maxExtra = 60;
    double achieved = 0.0;
    for (int iter = 0;; ++iter) {
      Matrix B = (M.transpose() * Q).transpose();  // l x n
      Eigen::JacobiSVD<Matrix> svd(B, Eigen::ComputeThinU);
      U = Q * svd.matrixU().leftCols(cfg.K);
      s = svd.singularValues().head(cfg.K);
      require(s(cfg.K - 1) >= 1e-12, ErrorKind::RankDeficiency,
              "top_left_singular: singular value " + std::to_string(cfg.K) +
                  " is below 1e-12; the model cannot support K topics");
      achieved = detail::svd_residuals(M, U, s).maxCoeff();
      if (achieved <= cfg.tol * s(0) * s(0)) break;
      require(iter < maxExtra, ErrorKind::Convergence,
              "top_left_singular: residual " + std::to_string(achieved) +
                  " above tolerance " + std::to_string(cfg.tol * s(0) * s(0)));
      Matrix Z = detail::orthonormalize(M.transpose() * Q);
      Q = detail::orthonormalize(M * Z);
    }
  } else {
    // Golub-Kahan chains; a breakdown locks an invariant subspace and a
    // fresh orthogonal start vector opens the next chain.
    const Index minpn = std::min(p, n);
    const Index maxBasis = std::min<Index>(minpn, std::max<Index>(4 * cfg.K + 30, 60));
    Rng rng = Rng(cfg.seed).fork(0x1a2);

    std::vector<Vector> us, vs;  // accumulated left/right basis

    auto reorth = [](Vector& x, const std::vector<Vector>& basis) {
      for (int pass = 0; pass < 2; ++pass) {
        for (const Vector& b : basis) x -= b.dot(x) * b;
      }
    };

    int attempts = 0;
    while (static_cast<Index>(us.size()) < maxBasis && attempts < 2 * cfg.K + 10) {
      ++attempts;
      Vector v(n);
      for (Index i = 0; i < n; ++i) v(i) = rng.gaussian();
      reorth(v, vs);
      double vn = v.norm();
      if (vn < 1e-10) break;  // right space exhausted
      v /= vn;

      double beta = 0.0;
      Vector uPrev;
      vs.push_back(v);  // the right basis runs one vector ahead of the left
      while (static_cast<Index>(us.size()) < maxBasis) {
        Vector u = M * v;
        if (beta > 0.0) u -= beta * uPrev;
        reorth(u, us);
        double alpha = u.norm();
        if (alpha < 1e-13) break;  // M v lies in span(us): nothing new on the left
        u /= alpha;
        us.push_back(u);

        Vector w = M.transpose() * u - alpha * v;
        reorth(w, vs);
        beta = w.norm();
        if (beta < 1e-13) break;  // invariant subspace captured exactly
        v = w / beta;
        vs.push_back(v);
        uPrev = u;
      }
    }

    const Index ru = static_cast<Index>(us.size());
    const Index rv = static_cast<Index>(vs.size());
    require(ru >= 1, ErrorKind::RankDeficiency,
            "top_left_singular: Lanczos found no nonzero directions");

    // Rayleigh-Ritz on the accumulated bases: svd of the small projected
    // matrix Ub^T D Vb. Keeping the trailing right vector of a broken chain
    // makes the projection exact on the subspace the chain explored.
    Matrix Ub(p, ru), Vb(n, rv);
    for (Index i = 0; i < ru; ++i) Ub.col(i) = us[i];
    for (Index i = 0; i < rv; ++i) Vb.col(i) = vs[i];
    Matrix Bsmall = Ub.transpose() * (M * Vb);
    Eigen::JacobiSVD<Matrix> svd(Bsmall, Eigen::ComputeThinU);

    Vector allVals = svd.singularValues();
    require(static_cast<Index>(allVals.size()) >= cfg.K && ru >= cfg.K,
            ErrorKind::RankDeficiency,
            "top_left_singular: rank below K; the model cannot support K topics");
    U = Ub * svd.matrixU().leftCols(cfg.K);
    s = allVals.head(cfg.K);
    require(s(cfg.K - 1) >= 1e-12, ErrorKind::RankDeficiency,
            "top_left_singular: singular value " + std::to_string(cfg.K) +
                " is below 1e-12; the model cannot support K topics");
    double achieved = detail::svd_residuals(M, U, s).maxCoeff();
    require(achieved <= cfg.tol * s(0) * s(0), ErrorKind::Convergence,
            "top_left_singular: residual " + std::to_string(achieved) +
                " above tolerance " + std::to_string(cfg.tol * s(0) * s(0)));
  }

  detail::fix_signs(U);
  return SingularBasis(std::move(U), std::move(s));
}

}  // namespace topics
