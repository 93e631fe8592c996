#pragma once

#include "topicsimplex/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace topics {

// Raw bag-of-words counts preceding the frequency matrix. Word pairs within
// a document are kept sorted by word index, without duplicates.
struct BowCorpus {
  std::vector<std::string> vocab;
  std::vector<std::vector<std::pair<Index, std::int64_t>>> docs;

  Index p() const { return static_cast<Index>(vocab.size()); }
  Index n() const { return static_cast<Index>(docs.size()); }

  std::int64_t doc_length(Index d) const {
    std::int64_t t = 0;
    for (const auto& [w, c] : docs[d]) t += c;
    return t;
  }
};

struct PreprocessConfig {
  std::set<std::string> stopWords;
  Index vocabKeep = 5000;
  double docKeepFraction = 0.95;
};

// Common English stop words. The list is a modest default; callers needing a
// specific list can supply one via PreprocessConfig or the CLI --stopwords flag.
inline const std::vector<std::string>& default_stop_words() {
  static const std::vector<std::string> words = {
      "a",    "an",   "and",  "are",   "as",    "at",   "be",    "but",
      "by",   "for",  "from", "has",   "have",  "he",   "her",   "his",
      "i",    "in",   "is",   "it",    "its",   "not",  "of",    "on",
      "or",   "she",  "that", "the",   "their", "they", "this",  "to",
      "was",  "were", "which", "who",  "will",  "with", "would", "you"};
  return words;
}

namespace detail {

inline std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::int64_t parse_int(const std::string& tok, int line, const char* what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  require(ec == std::errc() && ptr == tok.data() + tok.size(), ErrorKind::Parse,
          "line " + std::to_string(line) + ": bad " + what + " '" + tok + "'");
  return v;
}

inline bool next_content_line(std::istream& in, std::string& line, int& lineNo) {
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
  }
  return false;
}

}  // namespace detail

// UCI bag-of-words format: three header lines (p, n, nnz) then nnz lines of
// "docId wordId count" with 1-based ids. Vocabulary names are synthesized as
// word1..wordp; load_vocab replaces them from a companion file.
inline BowCorpus load_bow(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open '" + path + "'");

  std::string line;
  int lineNo = 0;
  std::int64_t header[3];
  for (int h = 0; h < 3; ++h) {
    require(detail::next_content_line(in, line, lineNo), ErrorKind::Parse,
            "line " + std::to_string(lineNo + 1) + ": missing header line");
    std::istringstream ls(line);
    std::string tok, extra;
    require(static_cast<bool>(ls >> tok) && !(ls >> extra), ErrorKind::Parse,
            "line " + std::to_string(lineNo) + ": header must be a single integer");
    header[h] = detail::parse_int(tok, lineNo, "header value");
  }
  const std::int64_t p = header[0], n = header[1], nnz = header[2];
  require(p >= 1, ErrorKind::Parse, "line 1: word count must be >= 1");
  require(n >= 0, ErrorKind::Parse, "line 2: document count must be >= 0");
  require(nnz >= 0, ErrorKind::Parse, "line 3: nnz must be >= 0");

  BowCorpus c;
  c.vocab.resize(static_cast<size_t>(p));
  for (std::int64_t i = 0; i < p; ++i) c.vocab[i] = "word" + std::to_string(i + 1);
  c.docs.resize(static_cast<size_t>(n));

  std::vector<std::set<Index>> seen(static_cast<size_t>(n));
  for (std::int64_t t = 0; t < nnz; ++t) {
    require(detail::next_content_line(in, line, lineNo), ErrorKind::Parse,
            "line " + std::to_string(lineNo + 1) + ": expected " +
                std::to_string(nnz) + " triples, got " + std::to_string(t));
    std::istringstream ls(line);
    std::string a, b, d, extra;
    require(static_cast<bool>(ls >> a >> b >> d) && !(ls >> extra), ErrorKind::Parse,
            "line " + std::to_string(lineNo) + ": expected 'docId wordId count'");
    std::int64_t doc = detail::parse_int(a, lineNo, "docId");
    std::int64_t word = detail::parse_int(b, lineNo, "wordId");
    std::int64_t count = detail::parse_int(d, lineNo, "count");
    require(doc >= 1 && doc <= n, ErrorKind::Parse,
            "line " + std::to_string(lineNo) + ": docId " + std::to_string(doc) +
                " out of range 1.." + std::to_string(n));
    require(word >= 1 && word <= p, ErrorKind::Parse,
            "line " + std::to_string(lineNo) + ": wordId " + std::to_string(word) +
                " out of range 1.." + std::to_string(p));
    require(count >= 1, ErrorKind::Parse,
            "line " + std::to_string(lineNo) + ": count must be positive");
    require(seen[doc - 1].insert(word - 1).second, ErrorKind::Parse,
            "line " + std::to_string(lineNo) + ": duplicate (doc, word) pair");
    c.docs[doc - 1].emplace_back(word - 1, count);
  }
  for (auto& d : c.docs) std::sort(d.begin(), d.end());
  return c;
}

inline std::vector<std::string> load_vocab(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open '" + path + "'");
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (!line.empty()) vocab.push_back(line);
  }
  return vocab;
}

inline std::set<std::string> load_stop_words(const std::string& path) {
  std::set<std::string> out;
  for (const auto& w : load_vocab(path)) out.insert(detail::lowercase(w));
  return out;
}

// Stop-word removal, vocabulary truncation to the most frequent words, then
// a document-length filter keeping the longest docKeepFraction of documents.
// Documents emptied by truncation are dropped before the length filter.
inline BowCorpus preprocess(const BowCorpus& c, const PreprocessConfig& cfg) {
  require(c.p() >= 1 && c.n() >= 1, ErrorKind::DegenerateCorpus,
          "preprocess: corpus is empty");
  require(cfg.vocabKeep >= 1, ErrorKind::Validation, "preprocess: vocabKeep must be >= 1");
  require(cfg.docKeepFraction > 0.0 && cfg.docKeepFraction <= 1.0, ErrorKind::Validation,
          "preprocess: docKeepFraction must be in (0,1]");

  std::set<std::string> stops;
  for (const auto& w : cfg.stopWords) stops.insert(detail::lowercase(w));

  const Index p = c.p();
  std::vector<char> keepWord(static_cast<size_t>(p), 1);
  for (Index w = 0; w < p; ++w) {
    if (stops.count(detail::lowercase(c.vocab[w]))) keepWord[w] = 0;
  }

  std::vector<std::int64_t> total(static_cast<size_t>(p), 0);
  for (const auto& doc : c.docs) {
    for (const auto& [w, cnt] : doc) {
      if (keepWord[w]) total[w] += cnt;
    }
  }

  std::vector<Index> candidates;
  for (Index w = 0; w < p; ++w) {
    if (keepWord[w]) candidates.push_back(w);
  }
  if (static_cast<Index>(candidates.size()) > cfg.vocabKeep) {
    // Highest total count wins; ties keep the lower original index.
    std::stable_sort(candidates.begin(), candidates.end(), [&](Index a, Index b) {
      if (total[a] != total[b]) return total[a] > total[b];
      return a < b;
    });
    candidates.resize(static_cast<size_t>(cfg.vocabKeep));
    std::sort(candidates.begin(), candidates.end());
  }
  require(!candidates.empty(), ErrorKind::DegenerateCorpus,
          "preprocess: no vocabulary words survive filtering");

  std::vector<Index> remap(static_cast<size_t>(p), -1);
  BowCorpus out;
  out.vocab.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    remap[candidates[i]] = static_cast<Index>(i);
    out.vocab.push_back(c.vocab[candidates[i]]);
  }

  struct DocRec {
    Index orig;
    std::int64_t length;
    std::vector<std::pair<Index, std::int64_t>> pairs;
  };
  std::vector<DocRec> recs;
  for (Index d = 0; d < c.n(); ++d) {
    DocRec r;
    r.orig = d;
    r.length = 0;
    for (const auto& [w, cnt] : c.docs[d]) {
      if (remap[w] >= 0) {
        r.pairs.emplace_back(remap[w], cnt);
        r.length += cnt;
      }
    }
    if (!r.pairs.empty()) recs.push_back(std::move(r));
  }
  require(!recs.empty(), ErrorKind::DegenerateCorpus,
          "preprocess: no documents survive filtering");

  const Index nDocs = static_cast<Index>(recs.size());
  // The nudge keeps floor() on the intended integer when (1 - fraction)
  // picks up representation error (e.g. (1 - 0.8) * 10 = 1.9999...).
  const Index nDrop = static_cast<Index>(
      std::floor((1.0 - cfg.docKeepFraction) * static_cast<double>(nDocs) + 1e-9));
  if (nDrop > 0) {
    // Drop the nDrop shortest; at equal length the higher original index
    // goes first so lower-index documents are retained.
    std::vector<Index> order(recs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      if (recs[a].length != recs[b].length) return recs[a].length < recs[b].length;
      return recs[a].orig > recs[b].orig;
    });
    std::vector<char> drop(recs.size(), 0);
    for (Index i = 0; i < nDrop; ++i) drop[order[i]] = 1;
    std::vector<DocRec> kept;
    for (size_t i = 0; i < recs.size(); ++i) {
      if (!drop[i]) kept.push_back(std::move(recs[i]));
    }
    recs = std::move(kept);
  }
  require(!recs.empty(), ErrorKind::DegenerateCorpus,
          "preprocess: document-length filter removed every document");

  out.docs.reserve(recs.size());
  for (auto& r : recs) out.docs.push_back(std::move(r.pairs));
  return out;
}

inline TermDocMatrix to_frequency_matrix(const BowCorpus& c) {
  require(c.p() >= 1 && c.n() >= 1, ErrorKind::DegenerateCorpus,
          "to_frequency_matrix: corpus is empty");
  std::vector<Eigen::Triplet<double>> trips;
  for (Index d = 0; d < c.n(); ++d) {
    const std::int64_t total = c.doc_length(d);
    require(total >= 1, ErrorKind::DegenerateCorpus,
            "to_frequency_matrix: document " + std::to_string(d + 1) + " is empty");
    for (const auto& [w, cnt] : c.docs[d]) {
      trips.emplace_back(static_cast<int>(w), static_cast<int>(d),
                         static_cast<double>(cnt) / static_cast<double>(total));
    }
  }
  SparseMatrix M(c.p(), c.n());
  M.setFromTriplets(trips.begin(), trips.end());
  return TermDocMatrix(std::move(M));
}

inline void write_matrix_market(const TermDocMatrix& D, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write '" + path + "'");
  const SparseMatrix& M = D.matrix();
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << M.rows() << " " << M.cols() << " " << M.nonZeros() << "\n";
  char buf[64];
  for (Index j = 0; j < M.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      auto res = std::to_chars(buf, buf + sizeof(buf), it.value());
      out << (it.row() + 1) << " " << (it.col() + 1) << " "
          << std::string_view(buf, res.ptr - buf) << "\n";
    }
  }
  require(out.good(), ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace topics
