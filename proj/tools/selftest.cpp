#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <string>

#include "commands.hpp"
#include "entk/errors.hpp"
#include "entk/pipeline.hpp"
#include "entk/reference/planar_oracle.hpp"
#include "entk/reference/so3_oracle.hpp"
#include "entk/simd.hpp"

namespace entk::cli {

namespace {

using namespace entk::so3;

struct Check {
    std::string name;
    double value = 0.0;  // worst error seen
    double limit = 0.0;
    bool above = false;  // pass when value exceeds the limit instead
};

double max_abs(const MatrixXc& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

Check transform_round_trips()
{
    std::mt19937_64 rng(101);
    std::normal_distribution<double> nd;
    double err = 0.0;
    for (auto kind : {GridKind::gauss_legendre, GridKind::driscoll_healy})
        for (int L = 1; L <= 8; ++L) {
            auto g = S2Grid::make(L, kind);
            auto c = oracle::random_real_s2(rng, L);
            auto vals = sht_inverse(g, c, L);
            std::vector<double> re(vals.size());
            for (std::size_t i = 0; i < vals.size(); ++i) re[i] = vals[i].real();
            auto back = sht_forward(g, re, L);
            for (std::size_t i = 0; i < c.size(); ++i) err = std::max(err, std::abs(back[i] - c[i]));

            auto b = so3_basis(L, L, kind);
            VectorXc x(so3_size(L));
            for (auto& v : x) v = cplx(nd(rng), nd(rng));
            err = std::max(err, max_abs(so3_forward(*b, so3_inverse(*b, x)) - x));
            if (L <= 4) {
                MatrixXc K(so3_size(L), so3_size(L));
                for (auto& v : K.reshaped()) v = cplx(nd(rng), nd(rng));
                err = std::max(err, max_abs(so3_double_forward(*b, so3_double_inverse(*b, K)) - K));
            }
        }
    return {"transform round trips (S2, SO(3), double; L <= 8)", err, 1e-10};
}

Check wigner_symmetries()
{
    std::mt19937_64 rng(102);
    double err = 0.0;
    for (int t = 0; t < 10; ++t) {
        Euler a = oracle::random_euler(rng), b = oracle::random_euler(rng);
        Euler ab = euler_from_rotation(compose(rotation_from_euler(a), rotation_from_euler(b)));
        for (int l = 0; l < 6; ++l)
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) {
                    err = std::max(err, std::abs(wigner_d(l, m, n, a.beta) - ((m - n) % 2 ? -1 : 1) * wigner_d(l, n, m, a.beta)));
                    err = std::max(err, std::abs(wigner_d(l, m, n, a.beta) - wigner_d(l, -n, -m, a.beta)));
                    cplx prod(0.0), unit(0.0);
                    for (int k = -l; k <= l; ++k) {
                        prod += wigner_D(l, m, k, a.alpha, a.beta, a.gamma) * wigner_D(l, k, n, b.alpha, b.beta, b.gamma);
                        unit += wigner_D(l, m, k, a.alpha, a.beta, a.gamma) * std::conj(wigner_D(l, n, k, a.alpha, a.beta, a.gamma));
                    }
                    err = std::max(err, std::abs(prod - wigner_D(l, m, n, ab.alpha, ab.beta, ab.gamma)));
                    err = std::max(err, std::abs(unit - (m == n ? 1.0 : 0.0)));
                }
    }
    return {"Wigner symmetries, unitarity and homomorphism (l < 6)", err, 1e-12};
}

Check nonlinearity_oracle()
{
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> u(1e-3, 10.0), rho(-1.0, 1.0);
    double err = 0.0;
    for (int i = 0; i < 200; ++i) {
        double a = u(rng), b = u(rng), c = rho(rng) * std::sqrt(a * b);
        for (auto kind : {NonlinKind::relu, NonlinKind::erf}) {
            auto x = nonlin_map(kind, a, c, b);
            auto y = gauss_hermite_oracle(kind, a, c, b, 60);
            err = std::max({err, std::abs(x.k - y.k), std::abs(x.kdot - y.kdot)});
        }
    }
    return {"nonlinearity closed forms vs quadrature (200 triples)", err, 1e-8};
}

Check lifting_lemma()
{
    std::mt19937_64 rng(104);
    const int L = 3;
    auto grid = SO3Grid::make(L, GridKind::gauss_legendre);
    MatrixXc M = oracle::analysis_matrix(grid, L);
    auto f = oracle::random_signal(rng, L, 2), g = oracle::random_signal(rng, L, 2);
    FourierKernel k = lifting_so3_fourier(input_kernel_s2(f, g));
    MatrixXc want = oracle::double_analysis(M, oracle::lifting_grid(f, g, grid).cast<cplx>());
    return {"SO(3) lifting lemma vs real-space quadrature (L = 3)", max_abs(k.cross - want), 1e-8};
}

// Returns the oracle gap of the lemma under test and of the sign-flipped lemma.
std::pair<Check, Check> gconv_lemma(bool inject_fault)
{
    std::mt19937_64 rng(105);
    const int L = 3;
    auto grid = SO3Grid::make(L, GridKind::gauss_legendre);
    MatrixXc M = oracle::analysis_matrix(grid, L);
    MatrixXc kin = oracle::random_real_kernel(rng, M);
    MatrixXc want = oracle::double_analysis(M, oracle::gconv_grid(kin, L, grid));
    FourierKernel in = oracle::wrap_kernel(kin, L);
    FourierKernel out = inject_fault ? detail::gconv_so3_fourier_signed(in, -1) : gconv_so3_fourier(in);
    FourierKernel mutated = detail::gconv_so3_fourier_signed(in, -1);
    return {{"SO(3) gconv lemma vs real-space quadrature (L = 3)", max_abs(out.cross - want), 1e-8},
            {"oracle rejects a sign-flipped gconv lemma", max_abs(mutated.cross - want), 1e-3, true}};
}

Check planar_oracle()
{
    std::mt19937_64 rng(106);
    double err = 0.0;
    planar::RotoTranslationGroup grp(4, 4, 4);
    for (auto kind : {NonlinKind::relu, NonlinKind::erf})
        for (int depth : {1, 2}) {
            ArchitectureSpec a;
            a.layers.push_back(Layer::lifting(3));
            for (int d = 1; d < depth; ++d) {
                a.layers.push_back(Layer::act(kind));
                a.layers.push_back(Layer::gconv(3));
            }
            a.layers.push_back(Layer::gpool());
            auto f = oracle::random_image(rng, 2, 4, 4), g = oracle::random_image(rng, 2, 4, 4);
            auto k = std::get<ScalarKernel>(run_pipeline(a, PipelineInput(f), PipelineInput(g)));
            auto st = oracle::brute_gcnn_fields(grp, f, g, planar::FilterSupport2D::centered_square(3), depth, kind);
            double mk = 0.0, mt = 0.0;
            for (double v : st.k) mk += v;
            for (double v : st.th) mt += v;
            err = std::max({err, std::abs(k.k_xy - mk / st.k.size()), std::abs(k.theta - mt / st.th.size())});
        }
    return {"planar GCNN kernel vs finite-group sums (4x4, C4)", err, 1e-12};
}

Check simd_tables()
{
    if (!simd::avx2_supported()) return {"vector kernels (AVX2 unavailable, scalar only)", 0.0, 1e-12};
    std::mt19937_64 rng(107);
    std::normal_distribution<double> nd;
    const int m = 13, n = 11, k = 17;
    std::vector<double> a(m * k), b(k * n), x(257), y(257);
    for (auto* v : {&a, &b, &x, &y})
        for (auto& e : *v) e = nd(rng);
    auto run = [&](simd::Isa isa, std::vector<double>& c, std::vector<double>& yy, double& d) {
        simd::select_isa(isa);
        c.assign(m * n, 0.0);
        simd::gemm(m, n, k, a.data(), k, b.data(), n, c.data(), n);
        yy = y;
        simd::axpy(yy.size(), 0.7, x.data(), yy.data());
        d = simd::dot(x.size(), x.data(), y.data());
    };
    simd::Isa before = simd::active_isa();
    std::vector<double> c1, c2, y1, y2;
    double d1 = 0, d2 = 0;
    run(simd::Isa::scalar, c1, y1, d1);
    run(simd::Isa::avx2, c2, y2, d2);
    simd::select_isa(before);
    double err = std::abs(d1 - d2) / std::max(1.0, std::abs(d1));
    for (std::size_t i = 0; i < c1.size(); ++i) err = std::max(err, std::abs(c1[i] - c2[i]) / std::max(1.0, std::abs(c1[i])));
    for (std::size_t i = 0; i < y1.size(); ++i) err = std::max(err, std::abs(y1[i] - y2[i]));
    return {"vector kernels, AVX2 vs scalar", err, 1e-12};
}

}  // namespace

int cmd_selftest(bool inject_fault)
{
    std::vector<std::function<std::vector<Check>()>> suite{
        [] { return std::vector<Check>{transform_round_trips()}; },
        [] { return std::vector<Check>{wigner_symmetries()}; },
        [] { return std::vector<Check>{nonlinearity_oracle()}; },
        [] { return std::vector<Check>{lifting_lemma()}; },
        [&] {
            auto [a, b] = gconv_lemma(inject_fault);
            return std::vector<Check>{a, b};
        },
        [] { return std::vector<Check>{planar_oracle()}; },
        [] { return std::vector<Check>{simd_tables()}; },
    };
    int failed = 0, total = 0;
    for (const auto& step : suite)
        for (const auto& c : step()) {
            bool ok = c.above ? c.value > c.limit : c.value < c.limit;
            ++total;
            if (!ok) ++failed;
            std::cout << (ok ? "PASS  " : "FAIL  ") << c.name << "  (" << std::scientific << std::setprecision(2) << c.value
                      << (c.above ? " > " : " < ") << c.limit << ")\n";
        }
    std::cout << std::defaultfloat << (total - failed) << "/" << total << " checks passed\n";
    return failed ? static_cast<int>(ExitCode::verification_failure) : 0;
}

}  // namespace entk::cli
