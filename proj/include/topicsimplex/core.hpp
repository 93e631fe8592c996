#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>
#include <utility>

namespace topics {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;  // compressed column storage

enum class ErrorKind {
  Validation,
  Parse,
  Io,
  DegenerateCorpus,
  RankDeficiency,
  Convergence,
  InfeasibleClustering,
  Conditioning,
  DegenerateTopic,
  Identifiability,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
    case ErrorKind::DegenerateCorpus: return "degenerate-corpus";
    case ErrorKind::RankDeficiency: return "rank-deficiency";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::InfeasibleClustering: return "infeasible-clustering";
    case ErrorKind::Conditioning: return "conditioning";
    case ErrorKind::DegenerateTopic: return "degenerate-topic";
    case ErrorKind::Identifiability: return "identifiability";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw Error(kind, msg);
}

inline bool validate_column_stochastic(const Matrix& M, double tol) {
  if (M.cols() < 1) return false;
  if ((M.array() < -tol).any()) return false;
  for (Index j = 0; j < M.cols(); ++j) {
    if (std::abs(M.col(j).sum() - 1.0) > tol) return false;
  }
  return true;
}

inline bool validate_column_stochastic(const SparseMatrix& M, double tol) {
  if (M.cols() < 1) return false;
  for (Index j = 0; j < M.outerSize(); ++j) {
    double sum = 0.0;
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      if (it.value() < -tol) return false;
      sum += it.value();
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

// Observed corpus D: sparse p x n, each column a pmf over words.
class TermDocMatrix {
 public:
  explicit TermDocMatrix(SparseMatrix M, double tol = 1e-9) : M_(std::move(M)) {
    M_.makeCompressed();
    require(M_.rows() >= 1 && M_.cols() >= 1, ErrorKind::Validation,
            "TermDocMatrix: need p >= 1 and n >= 1");
    require(validate_column_stochastic(M_, tol), ErrorKind::Validation,
            "TermDocMatrix: columns must be nonnegative and sum to 1");
  }

  static TermDocMatrix from_dense(const Matrix& M, double tol = 1e-9) {
    return TermDocMatrix(M.sparseView(), tol);
  }

  Index p() const { return M_.rows(); }
  Index n() const { return M_.cols(); }
  const SparseMatrix& matrix() const { return M_; }

 private:
  SparseMatrix M_;
};

// Topic matrix A: dense p x K, column-stochastic.
class TopicMatrix {
 public:
  explicit TopicMatrix(Matrix M, double tol = 1e-9) : M_(std::move(M)) {
    require(M_.rows() >= 1 && M_.cols() >= 1, ErrorKind::Validation,
            "TopicMatrix: need p >= 1 and K >= 1");
    require(validate_column_stochastic(M_, tol), ErrorKind::Validation,
            "TopicMatrix: columns must be nonnegative and sum to 1");
  }

  Index p() const { return M_.rows(); }
  Index K() const { return M_.cols(); }
  const Matrix& matrix() const { return M_; }

 private:
  Matrix M_;
};

// Document weights W: dense K x n, column-stochastic.
class DocWeightMatrix {
 public:
  explicit DocWeightMatrix(Matrix M, double tol = 1e-9) : M_(std::move(M)) {
    require(M_.rows() >= 1 && M_.cols() >= 1, ErrorKind::Validation,
            "DocWeightMatrix: need K >= 1 and n >= 1");
    require(validate_column_stochastic(M_, tol), ErrorKind::Validation,
            "DocWeightMatrix: columns must be nonnegative and sum to 1");
  }

  Index K() const { return M_.rows(); }
  Index n() const { return M_.cols(); }
  const Matrix& matrix() const { return M_; }

 private:
  Matrix M_;
};

// Top-K left singular pairs. Values are positive and non-increasing;
// exact ties are allowed (degenerate gaps occur, e.g. for orthogonal
// inputs), downstream code never assumes simple spectra.
class SingularBasis {
 public:
  SingularBasis(Matrix vectors, Vector values)
      : U_(std::move(vectors)), s_(std::move(values)) {
    require(U_.rows() >= 1 && U_.cols() >= 1, ErrorKind::Validation,
            "SingularBasis: need p >= 1 and K >= 1");
    require(U_.cols() == s_.size(), ErrorKind::Validation,
            "SingularBasis: vector/value count mismatch");
    Matrix G = U_.transpose() * U_;
    G.diagonal().array() -= 1.0;
    require(G.cwiseAbs().maxCoeff() <= 1e-8, ErrorKind::Validation,
            "SingularBasis: columns not orthonormal");
    for (Index k = 0; k < s_.size(); ++k) {
      require(s_(k) > 0.0, ErrorKind::Validation,
              "SingularBasis: values must be positive");
      if (k > 0) {
        require(s_(k) <= s_(k - 1) + 1e-12 * s_(0), ErrorKind::Validation,
                "SingularBasis: values must be non-increasing");
      }
    }
    require(U_.col(0).sum() >= -1e-8, ErrorKind::Validation,
            "SingularBasis: first vector must be sign-fixed (entry sum >= 0)");
  }

  Index p() const { return U_.rows(); }
  Index K() const { return U_.cols(); }
  const Matrix& vectors() const { return U_; }
  const Vector& values() const { return s_; }

 private:
  Matrix U_;
  Vector s_;
};

}  // namespace topics
