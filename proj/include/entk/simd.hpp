#pragma once

#include <cstddef>

// Data-parallel inner loops with a portable reference path and an AVX2/FMA
// path picked once at startup. ENTK_SIMD=scalar forces the reference path.
namespace entk::simd {

enum class Isa { scalar, avx2 };

bool avx2_supported();
Isa active_isa();
void select_isa(Isa isa);  // throws DomainError if the CPU lacks the ISA
const char* isa_name(Isa isa);

// y += a*x
void axpy(std::size_t n, double a, const double* x, double* y);
double dot(std::size_t n, const double* x, const double* y);
// out = x*y elementwise
void mul(std::size_t n, const double* x, const double* y, double* out);
// C[MxN] += A[MxK] * B[KxN], row-major with leading dimensions.
void gemm(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc);

}  // namespace entk::simd
