#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dimsel/matrix.hpp"

namespace dimsel {

enum class PcaMode { kUncentered, kCentered };

// Orthonormal principal-direction decomposition of an embedding matrix.
// basis columns u_1..u_N are ordered by descending explained variance;
// coefficients row w holds the coordinates of word w in that basis, so
// coefficients * basis^T (plus the mean in centered mode) reconstructs the
// input. Signs are fixed so each basis column's largest-magnitude entry is
// positive, which makes the decomposition deterministic.
struct PcaModel {
  PcaMode mode = PcaMode::kUncentered;
  MatrixD basis;                           // N x N, columns are directions
  MatrixD coefficients;                    // |V| x N
  std::vector<double> explained_variance;  // length N, non-increasing
  std::vector<double> mean;                // length N in centered mode only

  std::size_t vocab_rows() const { return coefficients.rows(); }
  int dim() const { return static_cast<int>(basis.cols()); }
};

// First d coefficient columns of a model; the embedding Algorithm-1 style
// dimension removal leaves behind, expressed in basis coordinates.
struct TruncatedEmbedding {
  MatrixD values;  // |V| x d
  int d = 0;
};

// Decomposes via the eigensystem of the (optionally centered) Gram matrix;
// explained_variance[k] = s_k^2 / (|V| - 1). Requires more rows than columns
// and finite input. Rank-deficient input keeps its trailing zero variances.
PcaModel fit_pca(const MatrixF& embedding, PcaMode mode = PcaMode::kUncentered,
                 int threads = 1);

TruncatedEmbedding truncate(const PcaModel& model, int d);

// (mean +) sum_{k<=d} coefficients[:,k] u_k^T: the embedding in original
// coordinates after removing directions d+1..N.
MatrixD reconstruct(const PcaModel& model, int d, int threads = 1);

struct VarianceReport {
  std::vector<double> ratios;  // variance shares, sum to 1
  double spread = 0;           // first / last variance
  bool spread_infinite = false;
};

VarianceReport explained_variance_report(const PcaModel& model);

// Per-direction mean of |coefficients| across the vocabulary.
std::vector<double> coefficient_mean_profile(const PcaModel& model);

// Binary container; round-trips bit-exact.
void save_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

}  // namespace dimsel
