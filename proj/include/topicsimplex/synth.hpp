#pragma once

#include "topicsimplex/core.hpp"
#include "topicsimplex/estimator.hpp"
#include "topicsimplex/parallel.hpp"
#include "topicsimplex/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace topics {

struct SynthConfig {
  Index K = 6;
  Index n = 500;
  Index p = 2000;
  std::int64_t N = 2000;
  double a0 = 0.2;
  Index p0 = 20;
  std::uint64_t seed = 0;
};

inline void validate(const SynthConfig& cfg) {
  require(cfg.K >= 1 && cfg.n >= 1 && cfg.p >= 1, ErrorKind::Validation,
          "SynthConfig: K, n, p must be >= 1");
  require(cfg.p0 >= 0 && cfg.K * cfg.p0 <= cfg.p, ErrorKind::Validation,
          "SynthConfig: need K*p0 <= p");
  require(cfg.N >= 1, ErrorKind::Validation, "SynthConfig: need N >= 1");
  require(cfg.a0 >= 0.0 && cfg.a0 <= 1.0, ErrorKind::Validation,
          "SynthConfig: a0 must be in [0,1]");
}

struct SynthInstance {
  TopicMatrix A;
  DocWeightMatrix W;
  TermDocMatrix D0;
  TermDocMatrix D;
};

// Words 1..K*p0 are anchors in blocks of p0 per topic at pre-normalization
// weight 1.5/p; the rest of each column is U(0,1)/p; columns renormalized.
inline TopicMatrix generate_topic_matrix(const SynthConfig& cfg, Rng& rng) {
  validate(cfg);
  const Index p = cfg.p, K = cfg.K, p0 = cfg.p0;
  Matrix A = Matrix::Zero(p, K);
  for (Index k = 0; k < K; ++k) {
    for (Index j = 0; j < p0; ++j) A(k * p0 + j, k) = 1.5 / static_cast<double>(p);
  }
  for (Index k = 0; k < K; ++k) {
    for (Index j = K * p0; j < p; ++j) A(j, k) = rng.uniform() / static_cast<double>(p);
  }
  for (Index k = 0; k < K; ++k) A.col(k) /= A.col(k).sum();
  return TopicMatrix(std::move(A));
}

// First floor(n*a0) documents are pure, in K contiguous blocks with the
// remainder going to the lowest-index topics; the rest are U(0,1) columns
// normalized to sum 1.
inline DocWeightMatrix generate_weight_matrix(const SynthConfig& cfg, Rng& rng) {
  validate(cfg);
  const Index n = cfg.n, K = cfg.K;
  const Index n0 = static_cast<Index>(
      std::floor(cfg.a0 * static_cast<double>(n) + 1e-9));
  Matrix W = Matrix::Zero(K, n);
  const Index base = n0 / K, rem = n0 % K;
  Index doc = 0;
  for (Index k = 0; k < K; ++k) {
    const Index block = base + (k < rem ? 1 : 0);
    for (Index i = 0; i < block; ++i) W(k, doc++) = 1.0;
  }
  for (; doc < n; ++doc) {
    double sum = 0.0;
    for (Index k = 0; k < K; ++k) {
      W(k, doc) = rng.uniform();
      sum += W(k, doc);
    }
    W.col(doc) /= sum;
  }
  return DocWeightMatrix(std::move(W));
}

namespace detail {

// Exact binomial draw; inversion from zero for small means, mode-centered
// two-sided accumulation otherwise (any fixed enumeration order of the
// support is a valid categorical sampler).
inline std::int64_t binomial(std::int64_t n, double q, Rng& rng) {
  if (n <= 0 || q <= 0.0) return 0;
  if (q >= 1.0) return n;
  const double mean = static_cast<double>(n) * q;
  const double u = rng.uniform();
  if (mean <= 30.0) {
    double pmf = std::exp(static_cast<double>(n) * std::log1p(-q));
    const double ratio = q / (1.0 - q);
    double cum = pmf;
    std::int64_t k = 0;
    while (u > cum && k < n) {
      pmf *= static_cast<double>(n - k) / static_cast<double>(k + 1) * ratio;
      cum += pmf;
      ++k;
    }
    return k;
  }
  const std::int64_t mode = static_cast<std::int64_t>(
      std::floor(static_cast<double>(n + 1) * q));
  const double logq = std::log(q), log1mq = std::log1p(-q);
  const double lgn = std::lgamma(static_cast<double>(n + 1));
  auto pmfAt = [&](std::int64_t k) {
    return std::exp(lgn - std::lgamma(static_cast<double>(k + 1)) -
                    std::lgamma(static_cast<double>(n - k + 1)) +
                    static_cast<double>(k) * logq +
                    static_cast<double>(n - k) * log1mq);
  };
  double cum = 0.0;
  for (std::int64_t step = 0; step <= n; ++step) {
    for (int sign = 0; sign < (step == 0 ? 1 : 2); ++sign) {
      const std::int64_t k = sign == 0 ? mode + step : mode - step;
      if (k < 0 || k > n) continue;
      cum += pmfAt(k);
      if (cum >= u) return k;
    }
  }
  return std::min(std::max<std::int64_t>(mode, 0), n);  // fp undersum fallback
}

}  // namespace detail

// Column i is X_i / N with X_i ~ Multinomial(N, A W_i), drawn by sequential
// conditional binomials (exact distribution, O(p + N) per document).
inline TermDocMatrix sample_corpus(const TopicMatrix& A, const DocWeightMatrix& W,
                                   std::int64_t N, Rng& rng) {
  require(A.K() == W.K(), ErrorKind::Validation, "sample_corpus: shape mismatch");
  require(N >= 1, ErrorKind::Validation, "sample_corpus: need N >= 1");
  const Index p = A.p(), n = W.n();
  std::vector<Eigen::Triplet<double>> trips;
  Vector d0(p);
  const double invN = 1.0 / static_cast<double>(N);
  for (Index i = 0; i < n; ++i) {
    d0.noalias() = A.matrix() * W.matrix().col(i);
    double psum = d0.sum();
    std::int64_t remaining = N;
    for (Index j = 0; j < p && remaining > 0; ++j) {
      std::int64_t x;
      if (j == p - 1 || psum <= 0.0) {
        x = remaining;
      } else {
        const double q = std::min(std::max(d0(j) / psum, 0.0), 1.0);
        x = detail::binomial(remaining, q, rng);
      }
      if (x > 0) {
        trips.emplace_back(static_cast<int>(j), static_cast<int>(i),
                           static_cast<double>(x) * invN);
        remaining -= x;
      }
      psum -= d0(j);
    }
  }
  SparseMatrix M(p, n);
  M.setFromTriplets(trips.begin(), trips.end());
  return TermDocMatrix(std::move(M));
}

inline SynthInstance make_instance(const SynthConfig& cfg) {
  validate(cfg);
  Rng root(cfg.seed);
  Rng rA = root.fork(1), rW = root.fork(2), rD = root.fork(3);
  TopicMatrix A = generate_topic_matrix(cfg, rA);
  DocWeightMatrix W = generate_weight_matrix(cfg, rW);
  TermDocMatrix D0 = TermDocMatrix::from_dense(A.matrix() * W.matrix());
  TermDocMatrix D = sample_corpus(A, W, cfg.N, rD);
  return SynthInstance{std::move(A), std::move(W), std::move(D0), std::move(D)};
}

enum class Experiment { exp1, exp2, exp3, exp4 };

inline std::optional<Experiment> parse_experiment(const std::string& name) {
  if (name == "exp1") return Experiment::exp1;
  if (name == "exp2") return Experiment::exp2;
  if (name == "exp3") return Experiment::exp3;
  if (name == "exp4") return Experiment::exp4;
  return std::nullopt;
}

struct SynthOverrides {
  std::optional<Index> K, n, p, p0;
  std::optional<std::int64_t> N;
  std::optional<double> a0;
};

struct ExperimentRow {
  double gridValue = 0.0;
  double meanError = 0.0;
  double stdError = 0.0;
  Index reps = 0;      // replicates contributing to the mean
  Index failures = 0;  // replicates that raised a pipeline error
};

// Grids: exp1 varies m, exp2 varies n, exp3 varies a0, exp4 varies K.
// Replicate r of every grid point uses seed baseSeed + r; errors are
// recorded per replicate without aborting the grid.
inline std::vector<ExperimentRow> run_experiment(Experiment exp, int reps,
                                                 std::uint64_t baseSeed,
                                                 const SynthOverrides& overrides = {},
                                                 int threads = 0) {
  require(reps >= 1, ErrorKind::Validation, "run_experiment: need reps >= 1");

  SynthConfig base;
  if (overrides.K) base.K = *overrides.K;
  if (overrides.n) base.n = *overrides.n;
  if (overrides.p) base.p = *overrides.p;
  if (overrides.p0) base.p0 = *overrides.p0;
  if (overrides.N) base.N = *overrides.N;
  if (overrides.a0) base.a0 = *overrides.a0;

  std::vector<double> grid;
  switch (exp) {
    case Experiment::exp1: grid = {12, 24, 36, 48, 60, 84}; break;
    case Experiment::exp2: grid = {50, 100, 500, 1000, 1500, 2000, 3000}; break;
    case Experiment::exp3: grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6}; break;
    case Experiment::exp4: grid = {3, 4, 5, 6, 7, 8, 9}; break;
  }

  const size_t G = grid.size();
  const size_t tasks = G * static_cast<size_t>(reps);
  std::vector<double> errs(tasks, 0.0);
  std::vector<char> failed(tasks, 0);

  parallel_for(tasks, threads, [&](size_t t) {
    const size_t g = t / static_cast<size_t>(reps);
    const int rep = static_cast<int>(t % static_cast<size_t>(reps));

    SynthConfig cfg = base;
    EstimatorConfig est;
    switch (exp) {
      case Experiment::exp1: est.m = static_cast<Index>(grid[g]); break;
      case Experiment::exp2: cfg.n = static_cast<Index>(grid[g]); break;
      case Experiment::exp3: cfg.a0 = grid[g]; break;
      case Experiment::exp4: cfg.K = static_cast<Index>(grid[g]); break;
    }
    cfg.seed = baseSeed + static_cast<std::uint64_t>(rep);
    est.K = cfg.K;
    est.seed = cfg.seed;

    try {
      SynthInstance inst = make_instance(cfg);
      EstimateReport report = estimate_topics(inst.D, est);
      errs[t] = l1_error(report.topics, inst.A, L1Aggregate::maxOverTopics);
    } catch (const Error&) {
      failed[t] = 1;
    }
  });

  std::vector<ExperimentRow> rows(G);
  for (size_t g = 0; g < G; ++g) {
    ExperimentRow& row = rows[g];
    row.gridValue = grid[g];
    double sum = 0.0;
    Index cnt = 0;
    for (int r = 0; r < reps; ++r) {
      const size_t t = g * static_cast<size_t>(reps) + static_cast<size_t>(r);
      if (failed[t]) {
        ++row.failures;
      } else {
        sum += errs[t];
        ++cnt;
      }
    }
    row.reps = cnt;
    if (cnt == 0) {
      row.meanError = std::numeric_limits<double>::quiet_NaN();
      row.stdError = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    row.meanError = sum / static_cast<double>(cnt);
    if (cnt > 1) {
      double ss = 0.0;
      for (int r = 0; r < reps; ++r) {
        const size_t t = g * static_cast<size_t>(reps) + static_cast<size_t>(r);
        if (!failed[t]) {
          const double d = errs[t] - row.meanError;
          ss += d * d;
        }
      }
      row.stdError = std::sqrt(ss / static_cast<double>(cnt - 1)) /
                     std::sqrt(static_cast<double>(cnt));
    }
  }
  return rows;
}

inline void write_experiment_csv(const std::vector<ExperimentRow>& rows,
                                 const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write '" + path + "'");
  out << "gridValue,meanError,stdError,reps,failures\n";
  for (const auto& r : rows) {
    out << detail::format_double(r.gridValue) << ','
        << detail::format_double(r.meanError) << ','
        << detail::format_double(r.stdError) << ',' << r.reps << ',' << r.failures
        << '\n';
  }
  require(out.good(), ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace topics
