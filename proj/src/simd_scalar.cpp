#include "simd_kernels.hpp"

namespace entk::simd::scalar {

void axpy(std::size_t n, double a, const double* x, double* y)
{
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(std::size_t n, const double* x, const double* y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void mul(std::size_t n, const double* x, const double* y, double* out)
{
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void gemm(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc)
{
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<std::size_t>(i) * ldc;
        for (int p = 0; p < k; ++p) {
            double aip = a[static_cast<std::size_t>(i) * lda + p];
            if (aip == 0.0) continue;
            const double* bp = b + static_cast<std::size_t>(p) * ldb;
            for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

}  // namespace entk::simd::scalar
