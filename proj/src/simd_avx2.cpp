#include "simd_kernels.hpp"

#include <immintrin.h>

namespace entk::simd::avx2 {

namespace {

inline double hsum(__m256d v)
{
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

}  // namespace

void axpy(std::size_t n, double a, const double* x, double* y)
{
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        __m256d y1 = _mm256_loadu_pd(y + i + 4);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
        _mm256_storeu_pd(y + i, y0);
        _mm256_storeu_pd(y + i + 4, y1);
    }
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

double dot(std::size_t n, const double* x, const double* y)
{
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
        s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
    }
    for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    double s = hsum(_mm256_add_pd(s0, s1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void mul(std::size_t n, const double* x, const double* y, double* out)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

// 4x8 register tile; the K x 8 panel of B stays cache resident while the row
// blocks of A stream past it.
void gemm(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc)
{
    int j = 0;
    for (; j + 8 <= n; j += 8) {
        int i = 0;
        for (; i + 4 <= m; i += 4) {
            double* c0 = c + static_cast<std::size_t>(i) * ldc + j;
            double* c1 = c0 + ldc;
            double* c2 = c1 + ldc;
            double* c3 = c2 + ldc;
            __m256d r00 = _mm256_loadu_pd(c0), r01 = _mm256_loadu_pd(c0 + 4);
            __m256d r10 = _mm256_loadu_pd(c1), r11 = _mm256_loadu_pd(c1 + 4);
            __m256d r20 = _mm256_loadu_pd(c2), r21 = _mm256_loadu_pd(c2 + 4);
            __m256d r30 = _mm256_loadu_pd(c3), r31 = _mm256_loadu_pd(c3 + 4);
            const double* a0 = a + static_cast<std::size_t>(i) * lda;
            const double* a1 = a0 + lda;
            const double* a2 = a1 + lda;
            const double* a3 = a2 + lda;
            for (int p = 0; p < k; ++p) {
                const double* bp = b + static_cast<std::size_t>(p) * ldb + j;
                __m256d b0 = _mm256_loadu_pd(bp), b1 = _mm256_loadu_pd(bp + 4);
                __m256d av = _mm256_broadcast_sd(a0 + p);
                r00 = _mm256_fmadd_pd(av, b0, r00);
                r01 = _mm256_fmadd_pd(av, b1, r01);
                av = _mm256_broadcast_sd(a1 + p);
                r10 = _mm256_fmadd_pd(av, b0, r10);
                r11 = _mm256_fmadd_pd(av, b1, r11);
                av = _mm256_broadcast_sd(a2 + p);
                r20 = _mm256_fmadd_pd(av, b0, r20);
                r21 = _mm256_fmadd_pd(av, b1, r21);
                av = _mm256_broadcast_sd(a3 + p);
                r30 = _mm256_fmadd_pd(av, b0, r30);
                r31 = _mm256_fmadd_pd(av, b1, r31);
            }
            _mm256_storeu_pd(c0, r00);
            _mm256_storeu_pd(c0 + 4, r01);
            _mm256_storeu_pd(c1, r10);
            _mm256_storeu_pd(c1 + 4, r11);
            _mm256_storeu_pd(c2, r20);
            _mm256_storeu_pd(c2 + 4, r21);
            _mm256_storeu_pd(c3, r30);
            _mm256_storeu_pd(c3 + 4, r31);
        }
        for (; i < m; ++i) {
            double* ci = c + static_cast<std::size_t>(i) * ldc + j;
            __m256d r0 = _mm256_loadu_pd(ci), r1 = _mm256_loadu_pd(ci + 4);
            const double* ai = a + static_cast<std::size_t>(i) * lda;
            for (int p = 0; p < k; ++p) {
                const double* bp = b + static_cast<std::size_t>(p) * ldb + j;
                __m256d av = _mm256_broadcast_sd(ai + p);
                r0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), r0);
                r1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), r1);
            }
            _mm256_storeu_pd(ci, r0);
            _mm256_storeu_pd(ci + 4, r1);
        }
    }
    if (j < n) {
        for (int i = 0; i < m; ++i) {
            double* ci = c + static_cast<std::size_t>(i) * ldc;
            const double* ai = a + static_cast<std::size_t>(i) * lda;
            for (int p = 0; p < k; ++p) {
                const double* bp = b + static_cast<std::size_t>(p) * ldb;
                for (int jj = j; jj < n; ++jj) ci[jj] += ai[p] * bp[jj];
            }
        }
    }
}

}  // namespace entk::simd::avx2
