#include "dimsel/eval.hpp"

#include <omp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "dimsel/error.hpp"
#include "dimsel/kernels.hpp"

namespace dimsel {

namespace {

std::string lowercased(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::int64_t resolve(const Vocabulary& vocab, const std::string& word,
                     bool lowercase_words) {
  return vocab.id_of(lowercase_words ? lowercased(word) : word);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == '\t' || c == ',' || c == ' ' || c == '\r') {
      if (!cur.empty()) fields.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) fields.push_back(std::move(cur));
  return fields;
}

bool parse_score(const std::string& s, double* out) {
  try {
    std::size_t used = 0;
    *out = std::stod(s, &used);
    return used == s.size() && std::isfinite(*out);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

SimilarityBenchmark load_similarity(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_similarity: cannot open " + path.string());

  SimilarityBenchmark bench;
  bench.name = path.stem().string();
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_fields(line);
    double score = 0;
    if (fields.size() != 3 || !parse_score(fields[2], &score)) {
      if (lineno == 1) continue;  // header
      throw Error("load_similarity: malformed row at line " +
                  std::to_string(lineno) + " in " + path.string());
    }
    if (!seen.insert(fields[0] + '\t' + fields[1]).second)
      ++bench.duplicate_pairs;
    bench.pairs.push_back({std::move(fields[0]), std::move(fields[1]), score});
  }
  if (bench.pairs.empty())
    throw Error("load_similarity: no valid rows in " + path.string());
  return bench;
}

AnalogyBenchmark load_analogy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_analogy: cannot open " + path.string());

  AnalogyBenchmark bench;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == ':') {
      std::string label = line.substr(1);
      while (!label.empty() && label.front() == ' ') label.erase(0, 1);
      while (!label.empty() && (label.back() == '\r' || label.back() == ' '))
        label.pop_back();
      bench.sections.push_back(std::move(label));
      continue;
    }
    auto fields = split_fields(line);
    if (fields.size() != 4)
      throw Error("load_analogy: expected 4 words at line " +
                  std::to_string(lineno) + " in " + path.string());
    if (fields[0] == fields[1] || fields[2] == fields[3])
      throw Error("load_analogy: degenerate question at line " +
                  std::to_string(lineno) + " in " + path.string());
    bench.questions.push_back(
        {std::move(fields[0]), std::move(fields[1]), std::move(fields[2]),
         std::move(fields[3]),
         static_cast<int>(bench.sections.size()) - 1});
  }
  if (bench.questions.empty())
    throw Error("load_analogy: no questions in " + path.string());
  return bench;
}

template <typename T>
double cosine(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) throw Error("cosine: length mismatch");
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = static_cast<double>(u[i]);
    const double b = static_cast<double>(v[i]);
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0.0 || nv == 0.0) throw Error("cosine: zero vector");
  return dot / std::sqrt(nu * nv);
}

template double cosine<float>(std::span<const float>, std::span<const float>);
template double cosine<double>(std::span<const double>,
                               std::span<const double>);

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share the average of 1-based ranks i+1..j+1;
    // that average is always a multiple of 0.5, hence exact in double.
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("spearman: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) throw Error("spearman: need at least 2 observations");

  const std::vector<double> rx = average_ranks(xs);
  const std::vector<double> ry = average_ranks(ys);

  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw Error("spearman: zero rank variance (undefined correlation)");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

template <typename T>
EvalResult evaluate_similarity(const Matrix<T>& rows, const Vocabulary& vocab,
                               const SimilarityBenchmark& benchmark,
                               bool lowercase_words) {
  std::vector<double> cosines, human;
  std::size_t skipped = 0;
  for (const auto& pair : benchmark.pairs) {
    const std::int64_t id1 = resolve(vocab, pair.word1, lowercase_words);
    const std::int64_t id2 = resolve(vocab, pair.word2, lowercase_words);
    if (id1 < 0 || id2 < 0 ||
        static_cast<std::size_t>(std::max(id1, id2)) >= rows.rows()) {
      ++skipped;
      continue;
    }
    try {
      cosines.push_back(cosine<T>(rows.row(id1), rows.row(id2)));
      human.push_back(pair.human_score);
    } catch (const Error&) {
      ++skipped;  // zero vector
    }
  }
  if (cosines.size() < 2)
    throw Error("evaluate_similarity: insufficient coverage (" +
                std::to_string(cosines.size()) + " of " +
                std::to_string(benchmark.pairs.size()) + " pairs)");
  EvalResult result;
  result.metric = 100.0 * spearman(cosines, human);
  result.covered = cosines.size();
  result.skipped = skipped;
  return result;
}

template EvalResult evaluate_similarity<float>(const Matrix<float>&,
                                               const Vocabulary&,
                                               const SimilarityBenchmark&,
                                               bool);
template EvalResult evaluate_similarity<double>(const Matrix<double>&,
                                                const Vocabulary&,
                                                const SimilarityBenchmark&,
                                                bool);

template <typename T>
EvalResult evaluate_analogy(const Matrix<T>& rows, const Vocabulary& vocab,
                            const AnalogyBenchmark& benchmark, bool normalize,
                            int threads, bool lowercase_words) {
  const std::size_t vocab_rows = rows.rows();
  if (vocab_rows < 4)
    throw Error("evaluate_analogy: empty candidate set");
  const std::size_t dim = rows.cols();

  Matrix<T> unit;
  const Matrix<T>* mat = &rows;
  std::vector<double> norms;
  if (normalize) {
    unit = rows;
    kernels::normalize_rows(unit, threads);
    mat = &unit;
  } else {
    norms.resize(vocab_rows);
    for (std::size_t r = 0; r < vocab_rows; ++r) {
      double sq = 0;
      for (T v : rows.row(r)) sq += static_cast<double>(v) * v;
      norms[r] = std::sqrt(sq);
    }
  }

  struct Resolved {
    std::uint32_t a, b, c, expected;
  };
  std::vector<Resolved> resolved;
  resolved.reserve(benchmark.questions.size());
  std::size_t skipped = 0;
  for (const auto& q : benchmark.questions) {
    const std::int64_t a = resolve(vocab, q.a, lowercase_words);
    const std::int64_t b = resolve(vocab, q.b, lowercase_words);
    const std::int64_t c = resolve(vocab, q.c, lowercase_words);
    const std::int64_t d = resolve(vocab, q.expected, lowercase_words);
    if (a < 0 || b < 0 || c < 0 || d < 0 ||
        static_cast<std::size_t>(std::max(std::max(a, b), std::max(c, d))) >=
            vocab_rows) {
      ++skipped;
      continue;
    }
    resolved.push_back({static_cast<std::uint32_t>(a),
                        static_cast<std::uint32_t>(b),
                        static_cast<std::uint32_t>(c),
                        static_cast<std::uint32_t>(d)});
  }
  if (resolved.empty())
    throw Error("evaluate_analogy: no covered questions");

  std::size_t correct = 0;
#pragma omp parallel for schedule(dynamic, 4) num_threads(std::max(threads, 1)) \
    reduction(+ : correct)
  for (std::ptrdiff_t qi = 0; qi < static_cast<std::ptrdiff_t>(resolved.size());
       ++qi) {
    const Resolved& q = resolved[qi];
    std::vector<double> query(dim);
    auto va = mat->row(q.a);
    auto vb = mat->row(q.b);
    auto vc = mat->row(q.c);
    for (std::size_t i = 0; i < dim; ++i)
      query[i] = static_cast<double>(vb[i]) - static_cast<double>(va[i]) +
                 static_cast<double>(vc[i]);

    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_row = vocab_rows;
    for (std::size_t r = 0; r < vocab_rows; ++r) {
      if (r == q.a || r == q.b || r == q.c) continue;
      auto row = mat->row(r);
      double dot = 0;
      for (std::size_t i = 0; i < dim; ++i)
        dot += static_cast<double>(row[i]) * query[i];
      const double score = normalize
                               ? dot
                               : (norms[r] > 0 ? dot / norms[r]
                                               : -std::numeric_limits<double>::infinity());
      if (score > best) {
        best = score;
        best_row = r;
      }
    }
    if (best_row == q.expected) ++correct;
  }

  EvalResult result;
  result.metric =
      100.0 * static_cast<double>(correct) / static_cast<double>(resolved.size());
  result.covered = resolved.size();
  result.skipped = skipped;
  return result;
}

template EvalResult evaluate_analogy<float>(const Matrix<float>&,
                                            const Vocabulary&,
                                            const AnalogyBenchmark&, bool, int,
                                            bool);
template EvalResult evaluate_analogy<double>(const Matrix<double>&,
                                             const Vocabulary&,
                                             const AnalogyBenchmark&, bool,
                                             int, bool);

std::vector<SweepPoint> evaluate_similarity_sweep(
    const PcaModel& model, const Vocabulary& vocab,
    const SimilarityBenchmark& benchmark, bool lowercase_words) {
  if (model.mode != PcaMode::kUncentered)
    throw Error("evaluate_similarity_sweep: requires an uncentered model");
  const int n_dim = model.dim();
  const auto& coef = model.coefficients;

  struct PairState {
    std::uint32_t r1, r2;
    double human;
    double dot, n1, n2;
    double floor1, floor2;  // zero-norm thresholds, relative to full norms
  };
  std::vector<PairState> pairs;
  std::size_t oov_skipped = 0;
  for (const auto& bp : benchmark.pairs) {
    const std::int64_t id1 = resolve(vocab, bp.word1, lowercase_words);
    const std::int64_t id2 = resolve(vocab, bp.word2, lowercase_words);
    if (id1 < 0 || id2 < 0 ||
        static_cast<std::size_t>(std::max(id1, id2)) >= coef.rows()) {
      ++oov_skipped;
      continue;
    }
    PairState ps;
    ps.r1 = static_cast<std::uint32_t>(id1);
    ps.r2 = static_cast<std::uint32_t>(id2);
    ps.human = bp.human_score;
    ps.dot = ps.n1 = ps.n2 = 0;
    const auto c1 = coef.row(ps.r1);
    const auto c2 = coef.row(ps.r2);
    for (int k = 0; k < n_dim; ++k) {
      ps.dot += c1[k] * c2[k];
      ps.n1 += c1[k] * c1[k];
      ps.n2 += c2[k] * c2[k];
    }
    // Downdating leaves O(N eps) residue on what should be exact zeros.
    ps.floor1 = ps.n1 * 1e-12;
    ps.floor2 = ps.n2 * 1e-12;
    pairs.push_back(ps);
  }
  if (pairs.size() < 2)
    throw Error("evaluate_similarity_sweep: insufficient coverage (" +
                std::to_string(pairs.size()) + " pairs)");

  std::vector<SweepPoint> points;
  points.reserve(n_dim - 1);
  std::vector<double> cosines, human;
  for (int d = n_dim - 1; d >= 1; --d) {
    cosines.clear();
    human.clear();
    std::size_t zero_skipped = 0;
    for (auto& ps : pairs) {
      const double c1 = coef(ps.r1, d);
      const double c2 = coef(ps.r2, d);
      ps.dot -= c1 * c2;
      ps.n1 -= c1 * c1;
      ps.n2 -= c2 * c2;
      if (ps.n1 <= ps.floor1 || ps.n2 <= ps.floor2) {
        ++zero_skipped;
        continue;
      }
      cosines.push_back(ps.dot / std::sqrt(ps.n1 * ps.n2));
      human.push_back(ps.human);
    }
    SweepPoint point;
    point.d = d;
    point.covered = cosines.size();
    point.skipped = oov_skipped + zero_skipped;
    if (cosines.size() >= 2) {
      try {
        point.metric = 100.0 * spearman(cosines, human);
      } catch (const Error&) {
        point.metric = std::numeric_limits<double>::quiet_NaN();
      }
    } else {
      point.metric = std::numeric_limits<double>::quiet_NaN();
    }
    points.push_back(point);
  }
  return points;
}

}  // namespace dimsel
