#include "topicsimplex/corpus.hpp"
#include "topicsimplex/estimator.hpp"
#include "topicsimplex/spectral.hpp"
#include "topicsimplex/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace ts = topics;

namespace {

struct CorpusFlags {
  std::string corpusPath;
  std::string vocabPath;
  std::string stopWords;
  ts::Index vocabKeep = 5000;
  double docKeep = 0.95;
};

void add_corpus_flags(CLI::App* cmd, CorpusFlags& f) {
  cmd->add_option("corpus", f.corpusPath, "bag-of-words counts file")->required();
  cmd->add_option("--vocab", f.vocabPath, "vocabulary file, one word per line");
  cmd->add_option("--stopwords", f.stopWords,
                  "stop-word file, or 'default' for the built-in list");
  cmd->add_option("--vocab-keep", f.vocabKeep, "keep the top-count words")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--doc-keep", f.docKeep, "fraction of longest documents kept")
      ->check(CLI::Range(1e-12, 1.0));
}

ts::BowCorpus load_corpus(const CorpusFlags& f) {
  ts::BowCorpus corpus = ts::load_bow(f.corpusPath);
  if (!f.vocabPath.empty()) {
    std::vector<std::string> vocab = ts::load_vocab(f.vocabPath);
    ts::require(static_cast<ts::Index>(vocab.size()) == corpus.p(),
                ts::ErrorKind::Validation,
                "vocabulary has " + std::to_string(vocab.size()) +
                    " words but the corpus declares " + std::to_string(corpus.p()));
    corpus.vocab = std::move(vocab);
  }
  ts::PreprocessConfig pc;
  pc.vocabKeep = f.vocabKeep;
  pc.docKeepFraction = f.docKeep;
  if (f.stopWords == "default") {
    const auto& words = ts::default_stop_words();
    pc.stopWords.insert(words.begin(), words.end());
  } else if (!f.stopWords.empty()) {
    pc.stopWords = ts::load_stop_words(f.stopWords);
  }
  return ts::preprocess(corpus, pc);
}

// For each topic, the 20 words whose ratio rows sit closest to that topic's
// vertex, as a label + comma-separated list per line.
void write_top_words(const ts::BowCorpus& corpus, const ts::EstimateReport& report,
                     const std::string& path) {
  const ts::Index p = corpus.p();
  std::vector<std::int64_t> total(static_cast<size_t>(p), 0);
  for (const auto& doc : corpus.docs)
    for (const auto& [w, c] : doc) total[static_cast<size_t>(w)] += c;

  std::ofstream out(path);
  ts::require(out.good(), ts::ErrorKind::Io, "cannot write '" + path + "'");
  const ts::Matrix& R = report.ratios.matrix();
  const ts::Matrix& V = report.simplex.vertices();
  for (ts::Index k = 0; k < V.rows(); ++k) {
    std::vector<std::pair<double, ts::Index>> dist;
    dist.reserve(static_cast<size_t>(p));
    for (ts::Index j = 0; j < p; ++j) {
      if (total[static_cast<size_t>(j)] <= 0) continue;
      dist.emplace_back((R.row(j) - V.row(k)).norm(), j);
    }
    const size_t take = std::min<size_t>(20, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(take),
                      dist.end());
    out << "topic " << (k + 1) << ": ";
    for (size_t i = 0; i < take; ++i) {
      if (i) out << ", ";
      out << corpus.vocab[static_cast<size_t>(dist[i].second)];
    }
    out << '\n';
  }
  ts::require(out.good(), ts::ErrorKind::Io, "write failed for '" + path + "'");
}

int run_estimate(const CorpusFlags& cf, ts::Index K, ts::Index s, ts::Index m,
                 ts::Index K0, bool exhaustive, std::uint64_t seed,
                 const std::string& outDir) {
  ts::BowCorpus corpus = load_corpus(cf);
  ts::TermDocMatrix D = ts::to_frequency_matrix(corpus);
  ts::EstimatorConfig cfg;
  cfg.K = K;
  cfg.s = s;
  cfg.m = m;
  cfg.K0 = K0;
  cfg.seed = seed;
  cfg.useGreedy = !exhaustive;
  ts::EstimateReport report = ts::estimate_topics(D, cfg);
  ts::write_report(report, outDir);
  write_top_words(corpus, report, outDir + "/top_words.txt");
  return 0;
}

int run_ratios(const CorpusFlags& cf, ts::Index K, bool rawSingular,
               std::uint64_t seed, const std::string& outPath) {
  ts::BowCorpus corpus = load_corpus(cf);
  ts::TermDocMatrix D = ts::to_frequency_matrix(corpus);
  ts::SvdConfig sc;
  sc.K = K;
  sc.seed = seed;
  ts::SingularBasis basis = ts::top_left_singular(D, sc);
  ts::RatioMatrix R = ts::ratio_matrix(basis, D.n());
  const ts::Index rcols = std::min<ts::Index>(2, K - 1);
  const ts::Index cols = rcols + (rawSingular ? 2 : 0);
  ts::Matrix out(D.p(), cols);
  out.leftCols(rcols) = R.matrix().leftCols(rcols);
  if (rawSingular) out.rightCols(2) = basis.vectors().leftCols(2);
  ts::detail::write_csv_matrix(out, outPath);
  return 0;
}

int run_simulate(const std::string& name, int reps, std::uint64_t seed,
                 const ts::SynthOverrides& overrides, int threads,
                 const std::string& outPath) {
  std::optional<ts::Experiment> exp = ts::parse_experiment(name);
  ts::require(exp.has_value(), ts::ErrorKind::Validation,
              "unknown experiment '" + name + "'");
  std::vector<ts::ExperimentRow> rows =
      ts::run_experiment(*exp, reps, seed, overrides, threads);
  ts::write_experiment_csv(rows, outPath);
  return 0;
}

int run_bench(const ts::SynthConfig& base, int reps, int threads) {
  using clock = std::chrono::steady_clock;
  double genMs = 0.0, estMs = 0.0, errSum = 0.0;
  for (int r = 0; r < reps; ++r) {
    ts::SynthConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(r);
    const auto t0 = clock::now();
    ts::SynthInstance inst = ts::make_instance(cfg);
    const auto t1 = clock::now();
    ts::EstimatorConfig est;
    est.K = cfg.K;
    est.seed = cfg.seed;
    ts::EstimateReport report = ts::estimate_topics(inst.D, est);
    const auto t2 = clock::now();
    const double g = std::chrono::duration<double, std::milli>(t1 - t0).count();
    const double e = std::chrono::duration<double, std::milli>(t2 - t1).count();
    genMs += g;
    estMs += e;
    errSum += ts::l1_error(report.topics, inst.A, ts::L1Aggregate::maxOverTopics);
    std::cerr << "rep " << r << ": generate " << g << " ms, estimate " << e
              << " ms\n";
  }
  std::cerr << "mean over " << reps << " reps: generate " << genMs / reps
            << " ms, estimate " << estMs / reps << " ms (threads=" << threads
            << ")\n";
  std::cout << "bench K=" << base.K << " n=" << base.n << " p=" << base.p
            << " N=" << base.N << " reps=" << reps
            << " meanError=" << ts::detail::format_double(errSum / reps) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic-matrix estimation via spectral simplex recovery"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "worker-thread cap (0 = hardware)");

  // estimate
  CorpusFlags estCf;
  ts::Index estK = 0, estS = 0, estM = 0, estK0 = 0;
  bool exhaustive = false;
  std::uint64_t estSeed = 0;
  std::string estOut;
  CLI::App* est = app.add_subcommand("estimate", "estimate the topic matrix");
  add_corpus_flags(est, estCf);
  est->add_option("--k", estK, "number of topics")
      ->required()
      ->check(CLI::Range(ts::Index(2), ts::Index(1) << 20));
  est->add_option("--s", estS, "per-topic support size (0 = all words)");
  est->add_option("--m", estM, "k-means centers (0 = 10K)");
  est->add_option("--k0", estK0, "greedy candidate pool (0 = ceil(5K/4))");
  est->add_flag("--exhaustive", exhaustive, "exhaustive vertex search");
  est->add_option("--seed", estSeed, "random seed");
  est->add_option("--out", estOut, "output directory")->required();

  // ratios
  CorpusFlags ratCf;
  ts::Index ratK = 0;
  bool rawSingular = false;
  std::uint64_t ratSeed = 0;
  std::string ratOut;
  CLI::App* rat = app.add_subcommand("ratios", "export eigen-ratio scatter data");
  add_corpus_flags(rat, ratCf);
  rat->add_option("--k", ratK, "number of topics")
      ->required()
      ->check(CLI::Range(ts::Index(2), ts::Index(1) << 20));
  rat->add_flag("--raw-singular", rawSingular, "append unscaled vector columns");
  rat->add_option("--seed", ratSeed, "random seed");
  rat->add_option("--out", ratOut, "output CSV path")->required();

  // simulate
  std::string simName;
  int simReps = 10;
  std::uint64_t simSeed = 0;
  std::string simOut;
  ts::Index ovK = -1, ovN = -1, ovP = -1, ovP0 = -1;
  std::int64_t ovWords = -1;
  double ovA0 = -1.0;
  CLI::App* sim = app.add_subcommand("simulate", "run a synthetic experiment grid");
  sim->add_option("experiment", simName, "one of exp1, exp2, exp3, exp4")
      ->required()
      ->check(CLI::IsMember({"exp1", "exp2", "exp3", "exp4"}));
  sim->add_option("--reps", simReps, "replicates per grid point")
      ->check(CLI::PositiveNumber);
  sim->add_option("--seed", simSeed, "base seed; replicate r uses seed+r");
  sim->add_option("--out", simOut, "output CSV path")->required();
  sim->add_option("--k", ovK, "override topic count");
  sim->add_option("--n", ovN, "override document count");
  sim->add_option("--p", ovP, "override vocabulary size");
  sim->add_option("--p0", ovP0, "override anchors per topic");
  sim->add_option("--n-words", ovWords, "override words per document");
  sim->add_option("--a0", ovA0, "override pure-document fraction");

  // bench
  ts::SynthConfig benchCfg;
  int benchReps = 3;
  CLI::App* ben = app.add_subcommand("bench", "time the pipeline on synthetic data");
  ben->add_option("--k", benchCfg.K, "topic count");
  ben->add_option("--n", benchCfg.n, "document count");
  ben->add_option("--p", benchCfg.p, "vocabulary size");
  ben->add_option("--p0", benchCfg.p0, "anchors per topic");
  ben->add_option("--n-words", benchCfg.N, "words per document");
  ben->add_option("--a0", benchCfg.a0, "pure-document fraction");
  ben->add_option("--seed", benchCfg.seed, "base seed");
  ben->add_option("--reps", benchReps, "replicates")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(est))
      return run_estimate(estCf, estK, estS, estM, estK0, exhaustive, estSeed,
                          estOut);
    if (app.got_subcommand(rat))
      return run_ratios(ratCf, ratK, rawSingular, ratSeed, ratOut);
    if (app.got_subcommand(sim)) {
      ts::SynthOverrides ov;
      if (ovK >= 0) ov.K = ovK;
      if (ovN >= 0) ov.n = ovN;
      if (ovP >= 0) ov.p = ovP;
      if (ovP0 >= 0) ov.p0 = ovP0;
      if (ovWords >= 0) ov.N = ovWords;
      if (ovA0 >= 0.0) ov.a0 = ovA0;
      return run_simulate(simName, simReps, simSeed, ov, threads, simOut);
    }
    return run_bench(benchCfg, benchReps, threads);
  } catch (const ts::Error& err) {
    std::cerr << "error [" << ts::to_string(err.kind()) << "]: " << err.what()
              << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
