#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dimsel/corpus.hpp"
#include "dimsel/matrix.hpp"
#include "dimsel/pca.hpp"

namespace dimsel {

struct SimilarityBenchmark {
  struct Pair {
    std::string word1, word2;
    double human_score;
  };
  std::string name;
  std::vector<Pair> pairs;
  std::size_t duplicate_pairs = 0;  // permitted, but worth flagging
};

struct AnalogyBenchmark {
  struct Question {
    std::string a, b, c, expected;
    int section = -1;
  };
  std::vector<Question> questions;
  std::vector<std::string> sections;
};

struct EvalResult {
  double metric = 0;       // Spearman rho x100, or accuracy in [0,100]
  std::size_t covered = 0;
  std::size_t skipped = 0;
};

// Tab-, comma-, or whitespace-separated `word1 word2 score` rows; a
// non-parsing first line is treated as a header.
SimilarityBenchmark load_similarity(const std::filesystem::path& path);

// word2vec questions format: whitespace-separated `a b c d` rows, lines
// starting with `:` are section labels.
AnalogyBenchmark load_analogy(const std::filesystem::path& path);

// u.v / (|u| |v|); zero vectors are an error the caller turns into a skip.
template <typename T>
double cosine(std::span<const T> u, std::span<const T> v);

// Average ranks (1-based, ties averaged).
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average-ranked values, in [-1, 1].
double spearman(std::span<const double> xs, std::span<const double> ys);

// Scores every pair with both words in vocabulary by cosine and returns
// 100 x Spearman against the human scores. OOV or zero-vector pairs are
// skipped and counted.
template <typename T>
EvalResult evaluate_similarity(const Matrix<T>& rows, const Vocabulary& vocab,
                               const SimilarityBenchmark& benchmark,
                               bool lowercase_words = false);

// 3CosAdd with a, b, c excluded from candidates; rows pre-normalized to unit
// length when normalize is set. Questions with any OOV word are skipped.
template <typename T>
EvalResult evaluate_analogy(const Matrix<T>& rows, const Vocabulary& vocab,
                            const AnalogyBenchmark& benchmark,
                            bool normalize = true, int threads = 1,
                            bool lowercase_words = false);

struct SweepPoint {
  int d = 0;
  double metric = 0;  // NaN when the correlation is undefined at this d
  std::size_t covered = 0;
  std::size_t skipped = 0;
};

// Similarity metric at every truncation d = N-1 .. 1 of an uncentered model,
// maintaining per-pair running inner products and squared norms so each
// dimension removal costs O(1) per pair. Matches a fresh
// evaluate_similarity(truncate(model, d)) within 1e-9.
std::vector<SweepPoint> evaluate_similarity_sweep(
    const PcaModel& model, const Vocabulary& vocab,
    const SimilarityBenchmark& benchmark, bool lowercase_words = false);

}  // namespace dimsel
