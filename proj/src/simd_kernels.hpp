#pragma once

// Raw kernels per ISA. Kept free of standard-library templates so that the
// AVX2 translation unit cannot leak wider instructions into shared inline code.
#include <cstddef>

namespace entk::simd {

struct KernelTable {
    void (*axpy)(std::size_t, double, const double*, double*);
    double (*dot)(std::size_t, const double*, const double*);
    void (*mul)(std::size_t, const double*, const double*, double*);
    void (*gemm)(int, int, int, const double*, int, const double*, int, double*, int);
};

namespace scalar {
void axpy(std::size_t n, double a, const double* x, double* y);
double dot(std::size_t n, const double* x, const double* y);
void mul(std::size_t n, const double* x, const double* y, double* out);
void gemm(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc);
}  // namespace scalar

namespace avx2 {
void axpy(std::size_t n, double a, const double* x, double* y);
double dot(std::size_t n, const double* x, const double* y);
void mul(std::size_t n, const double* x, const double* y, double* out);
void gemm(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc);
}  // namespace avx2

const KernelTable& kernel_table(bool avx2);

}  // namespace entk::simd
