#include "dimsel/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <cstring>
#include <vector>

namespace dimsel::kernels {

void gram_serial(const double* a, std::size_t rows, std::size_t cols,
                 double* g) {
  std::memset(g, 0, cols * cols * sizeof(double));
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a + r * cols;
    for (std::size_t i = 0; i < cols; ++i) {
      const double ai = row[i];
      double* gi = g + i * cols;
      for (std::size_t j = i; j < cols; ++j) gi[j] += ai * row[j];
    }
  }
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = 0; j < i; ++j) g[i * cols + j] = g[j * cols + i];
}

void gram(const double* a, std::size_t rows, std::size_t cols, double* g,
          int threads) {
  if (threads <= 1) {
    gram_serial(a, rows, cols, g);
    return;
  }
  // Per-thread partial Gram over a row block, then an ordered reduction.
  std::vector<std::vector<double>> partials(threads);
#pragma omp parallel num_threads(threads)
  {
    const int tid = omp_get_thread_num();
    auto& part = partials[tid];
    part.assign(cols * cols, 0.0);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
      const double* row = a + static_cast<std::size_t>(r) * cols;
      for (std::size_t i = 0; i < cols; ++i) {
        const double ai = row[i];
        double* gi = part.data() + i * cols;
        for (std::size_t j = i; j < cols; ++j) gi[j] += ai * row[j];
      }
    }
  }
  std::memset(g, 0, cols * cols * sizeof(double));
  for (const auto& part : partials)
    for (std::size_t k = 0; k < cols * cols; ++k) g[k] += part[k];
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = 0; j < i; ++j) g[i * cols + j] = g[j * cols + i];
}

namespace {

inline void matmul_row(const double* arow, std::size_t inner, const double* b,
                       std::size_t cols, std::size_t ldb, double* crow) {
  std::memset(crow, 0, cols * sizeof(double));
  for (std::size_t k = 0; k < inner; ++k) {
    const double ak = arow[k];
    if (ak == 0.0) continue;
    const double* brow = b + k * ldb;
    for (std::size_t j = 0; j < cols; ++j) crow[j] += ak * brow[j];
  }
}

}  // namespace

void matmul_serial(const double* a, std::size_t rows, std::size_t inner,
                   std::size_t lda, const double* b, std::size_t cols,
                   std::size_t ldb, double* c, std::size_t ldc) {
  for (std::size_t r = 0; r < rows; ++r)
    matmul_row(a + r * lda, inner, b, cols, ldb, c + r * ldc);
}

void matmul(const double* a, std::size_t rows, std::size_t inner,
            std::size_t lda, const double* b, std::size_t cols,
            std::size_t ldb, double* c, std::size_t ldc, int threads) {
  if (threads <= 1) {
    matmul_serial(a, rows, inner, lda, b, cols, ldb, c, ldc);
    return;
  }
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r)
    matmul_row(a + static_cast<std::size_t>(r) * lda, inner, b, cols, ldb,
               c + static_cast<std::size_t>(r) * ldc);
}

template <typename T>
void normalize_rows_serial(Matrix<T>& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double sq = 0.0;
    for (T v : row) sq += static_cast<double>(v) * static_cast<double>(v);
    if (sq <= 0.0) continue;
    const T inv = static_cast<T>(1.0 / std::sqrt(sq));
    for (T& v : row) v *= inv;
  }
}

template <typename T>
void normalize_rows(Matrix<T>& m, int threads) {
  if (threads <= 1) {
    normalize_rows_serial(m);
    return;
  }
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(m.rows()); ++r) {
    auto row = m.row(static_cast<std::size_t>(r));
    double sq = 0.0;
    for (T v : row) sq += static_cast<double>(v) * static_cast<double>(v);
    if (sq <= 0.0) continue;
    const T inv = static_cast<T>(1.0 / std::sqrt(sq));
    for (T& v : row) v *= inv;
  }
}

template void normalize_rows_serial<float>(Matrix<float>&);
template void normalize_rows_serial<double>(Matrix<double>&);
template void normalize_rows<float>(Matrix<float>&, int);
template void normalize_rows<double>(Matrix<double>&, int);

}  // namespace dimsel::kernels
