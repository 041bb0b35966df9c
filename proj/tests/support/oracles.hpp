// Test-side oracles, deliberately independent of the library implementations
// they check: a cyclic Jacobi eigensolver (vs the Gram-based PCA), O(n^2)
// brute-force ranking (vs the sort-based Spearman), long-double loss
// evaluation and central finite differences (vs the SGNS gradients), and an
// exhaustive 3CosAdd scan.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dimsel/matrix.hpp"
#include "dimsel/rng.hpp"

namespace oracles {

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a,
                                              std::size_t n) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
    if (off < 1e-26) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = (aqq - app) / (2 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double cosr = 1.0 / std::sqrt(t * t + 1);
        const double sinr = t * cosr;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = cosr * akp - sinr * akq;
          a[k * n + q] = sinr * akp + cosr * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = cosr * apk - sinr * aqk;
          a[q * n + k] = sinr * apk + cosr * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i * n + i];
  std::sort(eig.rbegin(), eig.rend());
  return eig;
}

// Average ranks by brute-force counting: rank_i = (#smaller) + (#ties+1)/2,
// 1-based. Always a multiple of 0.5, hence exact in double.
inline std::vector<double> brute_force_ranks(std::span<const double> xs) {
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::size_t smaller = 0, ties = 0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (xs[j] < xs[i]) ++smaller;
      if (xs[j] == xs[i]) ++ties;
    }
    ranks[i] = static_cast<double>(smaller) +
               (static_cast<double>(ties) + 1.0) / 2.0;
  }
  return ranks;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double brute_force_spearman(std::span<const double> xs,
                                   std::span<const double> ys) {
  const auto rx = brute_force_ranks(xs);
  const auto ry = brute_force_ranks(ys);
  return pearson(rx, ry);
}

// pair_loss evaluated in long double, term by term.
inline long double high_precision_pair_loss(
    const std::vector<double>& center, const std::vector<double>& context,
    const std::vector<std::vector<double>>& negatives) {
  auto log_sigma = [](long double x) -> long double {
    return -(std::log1p(std::exp(-std::abs(x))) + std::max(-x, 0.0L));
  };
  auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
    long double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
      s += static_cast<long double>(u[i]) * static_cast<long double>(v[i]);
    return s;
  };
  long double loss = -log_sigma(dot(center, context));
  for (const auto& neg : negatives) loss -= log_sigma(-dot(center, neg));
  return loss;
}

// Token frequencies counted the dumbest possible way.
inline std::unordered_map<std::string, std::uint64_t> brute_force_counts(
    const std::vector<std::string>& tokens) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& t : tokens) ++counts[t];
  return counts;
}

// Exhaustive 3CosAdd: normalizes every row on the fly, no precomputation.
// Returns the winning row id, or -1 if no candidate exists.
template <typename T>
std::int64_t exhaustive_3cosadd(const dimsel::Matrix<T>& rows, std::uint32_t a,
                                std::uint32_t b, std::uint32_t c) {
  const std::size_t dim = rows.cols();
  auto unit = [&](std::uint32_t r) {
    std::vector<double> v(dim);
    double sq = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      v[i] = static_cast<double>(rows(r, i));
      sq += v[i] * v[i];
    }
    const double inv = sq > 0 ? 1.0 / std::sqrt(sq) : 0.0;
    for (double& x : v) x *= inv;
    return v;
  };
  const auto va = unit(a), vb = unit(b), vc = unit(c);
  std::vector<double> q(dim);
  for (std::size_t i = 0; i < dim; ++i) q[i] = vb[i] - va[i] + vc[i];

  std::int64_t best_row = -1;
  double best = -1e300;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    if (r == a || r == b || r == c) continue;
    const auto u = unit(static_cast<std::uint32_t>(r));
    double s = 0;
    for (std::size_t i = 0; i < dim; ++i) s += u[i] * q[i];
    if (s > best) {
      best = s;
      best_row = static_cast<std::int64_t>(r);
    }
  }
  return best_row;
}

inline dimsel::MatrixF random_embedding(std::size_t rows, std::size_t cols,
                                        std::uint64_t seed,
                                        float scale = 1.0f) {
  dimsel::MatrixF m(rows, cols);
  dimsel::SplitMix64 rng(seed);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(r, c) = (rng.uniform_float() * 2.0f - 1.0f) * scale;
  return m;
}

// Vocabulary of rows.size() synthetic tokens "w0".."wN-1" mapping id i to
// row i, for benchmark-evaluation fixtures.
inline dimsel::Vocabulary synthetic_vocab(std::size_t size) {
  dimsel::Vocabulary vocab;
  for (std::size_t i = 0; i < size; ++i) {
    vocab.tokens.push_back("w" + std::to_string(i));
    vocab.counts.push_back(size - i);
    vocab.total_count += size - i;
    vocab.index.emplace(vocab.tokens.back(), static_cast<std::uint32_t>(i));
  }
  return vocab;
}

}  // namespace oracles
