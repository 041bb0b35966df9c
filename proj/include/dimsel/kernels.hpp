#pragma once

#include <cstddef>

#include "dimsel/matrix.hpp"

namespace dimsel::kernels {

// Dense data-parallel primitives backing PCA and evaluation. Each kernel has
// a plain serial reference used by the tests and the benchmark; the OpenMP
// variants take an explicit thread count (<= 1 falls through to serial).

// G = A^T A for row-major A (rows x cols); G is cols x cols, fully written.
void gram_serial(const double* a, std::size_t rows, std::size_t cols,
                 double* g);
void gram(const double* a, std::size_t rows, std::size_t cols, double* g,
          int threads);

// C = A B with explicit leading dimensions, all row-major:
// A is rows x inner (stride lda), B is inner x cols (stride ldb),
// C is rows x cols (stride ldc).
void matmul_serial(const double* a, std::size_t rows, std::size_t inner,
                   std::size_t lda, const double* b, std::size_t cols,
                   std::size_t ldb, double* c, std::size_t ldc);
void matmul(const double* a, std::size_t rows, std::size_t inner,
            std::size_t lda, const double* b, std::size_t cols,
            std::size_t ldb, double* c, std::size_t ldc, int threads);

// Scales every row to unit L2 norm; all-zero rows are left untouched.
template <typename T>
void normalize_rows_serial(Matrix<T>& m);
template <typename T>
void normalize_rows(Matrix<T>& m, int threads);

}  // namespace dimsel::kernels
