#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define LOADCAST_GEMM_AVX2 1
#endif

namespace loadcast::kernels {

namespace detail {

#if LOADCAST_GEMM_AVX2
template <bool kMasked>
inline __m256d load(const double* p, __m256i mask) {
  if constexpr (kMasked) {
    return _mm256_maskload_pd(p, mask);
  } else {
    return _mm256_loadu_pd(p);
  }
}

template <bool kMasked>
inline void store(double* p, __m256d v, __m256i mask) {
  if constexpr (kMasked) {
    _mm256_maskstore_pd(p, mask, v);
  } else {
    _mm256_storeu_pd(p, v);
  }
}

// One column panel (8 wide, or narrower under masks) of C for all rows:
// 4-row blocks first, then single leftover rows.
template <bool kMasked>
inline void panel(const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c, std::size_t ldc,
                  std::size_t m, std::size_t m_full, std::size_t k, bool accumulate, __m256i mlo, __m256i mhi) {
  auto finish = [&](double* cp, __m256d lo, __m256d hi) {
    if (accumulate) {
      lo = _mm256_add_pd(lo, load<kMasked>(cp, mlo));
      hi = _mm256_add_pd(hi, load<kMasked>(cp + 4, mhi));
    }
    store<kMasked>(cp, lo, mlo);
    store<kMasked>(cp + 4, hi, mhi);
  };
  for (std::size_t i = 0; i < m_full; i += 4) {
    __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
    __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
    __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
    __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
    const double* a0 = a + i * lda;
    const double* a1 = a0 + lda;
    const double* a2 = a1 + lda;
    const double* a3 = a2 + lda;
    const double* bp = b;
    for (std::size_t p = 0; p < k; ++p, bp += ldb) {
      const __m256d b0 = load<kMasked>(bp, mlo);
      const __m256d b1 = load<kMasked>(bp + 4, mhi);
      __m256d av = _mm256_broadcast_sd(a0 + p);
      c00 = _mm256_fmadd_pd(av, b0, c00);
      c01 = _mm256_fmadd_pd(av, b1, c01);
      av = _mm256_broadcast_sd(a1 + p);
      c10 = _mm256_fmadd_pd(av, b0, c10);
      c11 = _mm256_fmadd_pd(av, b1, c11);
      av = _mm256_broadcast_sd(a2 + p);
      c20 = _mm256_fmadd_pd(av, b0, c20);
      c21 = _mm256_fmadd_pd(av, b1, c21);
      av = _mm256_broadcast_sd(a3 + p);
      c30 = _mm256_fmadd_pd(av, b0, c30);
      c31 = _mm256_fmadd_pd(av, b1, c31);
    }
    finish(c + i * ldc, c00, c01);
    finish(c + (i + 1) * ldc, c10, c11);
    finish(c + (i + 2) * ldc, c20, c21);
    finish(c + (i + 3) * ldc, c30, c31);
  }
  for (std::size_t i = m_full; i < m; ++i) {
    __m256d lo = _mm256_setzero_pd(), hi = _mm256_setzero_pd();
    const double* ai = a + i * lda;
    const double* bp = b;
    for (std::size_t p = 0; p < k; ++p, bp += ldb) {
      const __m256d av = _mm256_broadcast_sd(ai + p);
      lo = _mm256_fmadd_pd(av, load<kMasked>(bp, mlo), lo);
      hi = _mm256_fmadd_pd(av, load<kMasked>(bp + 4, mhi), hi);
    }
    finish(c + i * ldc, lo, hi);
  }
}
#endif

}  // namespace detail

// Row-major C[M x N] (+)= A[M x K] * B[K x N].
//
// Every output element is reduced in ascending k order with fused
// multiply-adds starting from zero, in the vector body, the masked edge
// panel and the portable fallback alike. A row's result therefore does not
// depend on how many other rows are in the batch or where the block
// boundaries fall, which keeps inference bit-identical between batched
// evaluation and single-window prediction.
inline void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                 const double* b, std::size_t ldb, double* c, std::size_t ldc,
                 bool accumulate = false) {
#if LOADCAST_GEMM_AVX2
  constexpr std::size_t kCols = 8;
  // Row blocks keep a slab of A resident in cache while every column panel
  // streams past it.
  constexpr std::size_t kRowBlock = 64;
  const __m256i lane = _mm256_set_epi64x(3, 2, 1, 0);
  for (std::size_t i0 = 0; i0 < m; i0 += kRowBlock) {
    const std::size_t rows = m - i0 < kRowBlock ? m - i0 : kRowBlock;
    const double* ab = a + i0 * lda;
    double* cb = c + i0 * ldc;
    const std::size_t rows_full = rows - rows % 4;
    // Column panels of width 8; the last one may be narrower and is handled
    // with masked loads and stores of the same fma sequence.
    for (std::size_t j = 0; j < n; j += kCols) {
      const std::size_t width = n - j < kCols ? n - j : kCols;
      if (width == kCols) {
        const __m256i all = _mm256_set1_epi64x(-1);
        detail::panel<false>(ab, lda, b + j, ldb, cb + j, ldc, rows, rows_full, k, accumulate, all, all);
      } else {
        const auto w = static_cast<long long>(width);
        const __m256i mask_lo = _mm256_cmpgt_epi64(_mm256_set1_epi64x(w), lane);
        const __m256i mask_hi = _mm256_cmpgt_epi64(_mm256_set1_epi64x(w - 4), lane);
        detail::panel<true>(ab, lda, b + j, ldb, cb + j, ldc, rows, rows_full, k, accumulate, mask_lo, mask_hi);
      }
    }
  }
#else
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      const double* ai = a + i * lda;
      for (std::size_t p = 0; p < k; ++p) acc = std::fma(ai[p], b[p * ldb + j], acc);
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + acc : acc;
    }
  }
#endif
}

/// Row-major transpose of a [rows x cols] block into [cols x rows].
inline void transpose(std::size_t rows, std::size_t cols, const double* src, double* dst) {
  constexpr std::size_t kTile = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += kTile) {
    for (std::size_t j0 = 0; j0 < cols; j0 += kTile) {
      const std::size_t i1 = i0 + kTile < rows ? i0 + kTile : rows;
      const std::size_t j1 = j0 + kTile < cols ? j0 + kTile : cols;
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) dst[j * rows + i] = src[i * cols + j];
      }
    }
  }
}

/// C[M x N] (+)= A^T * B where A is stored [K x M].
inline void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                    double* c, bool accumulate = false) {
  std::vector<double> at(m * k);
  transpose(k, m, a, at.data());
  gemm(m, n, k, at.data(), k, b, n, c, n, accumulate);
}

/// C[M x N] (+)= A * B^T where B is stored [N x K].
inline void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                    double* c, bool accumulate = false) {
  std::vector<double> bt(k * n);
  transpose(n, k, b, bt.data());
  gemm(m, n, k, a, k, bt.data(), n, c, n, accumulate);
}

}  // namespace loadcast::kernels
