#include "entk/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "entk/errors.hpp"
#include "simd_kernels.hpp"

namespace entk::simd {

namespace {

const KernelTable kScalar{&scalar::axpy, &scalar::dot, &scalar::mul, &scalar::gemm};
const KernelTable kAvx2{&avx2::axpy, &avx2::dot, &avx2::mul, &avx2::gemm};

bool detect_avx2()
{
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa initial_isa()
{
    const char* env = std::getenv("ENTK_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return Isa::scalar;
    return detect_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<const KernelTable*>& current()
{
    static std::atomic<const KernelTable*> table{initial_isa() == Isa::avx2 ? &kAvx2 : &kScalar};
    return table;
}

}  // namespace

const KernelTable& kernel_table(bool avx2) { return avx2 ? kAvx2 : kScalar; }

bool avx2_supported()
{
    static const bool ok = detect_avx2();
    return ok;
}

Isa active_isa() { return current().load() == &kAvx2 ? Isa::avx2 : Isa::scalar; }

void select_isa(Isa isa)
{
    if (isa == Isa::avx2 && !avx2_supported()) throw DomainError("AVX2/FMA not supported on this CPU");
    current().store(isa == Isa::avx2 ? &kAvx2 : &kScalar);
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void axpy(std::size_t n, double a, const double* x, double* y) { current().load()->axpy(n, a, x, y); }

double dot(std::size_t n, const double* x, const double* y) { return current().load()->dot(n, x, y); }

void mul(std::size_t n, const double* x, const double* y, double* out) { current().load()->mul(n, x, y, out); }

void gemm(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c, int ldc)
{
    current().load()->gemm(m, n, k, a, lda, b, ldb, c, ldc);
}

}  // namespace entk::simd
