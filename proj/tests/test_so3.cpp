#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "entk/errors.hpp"
#include "entk/so3.hpp"
#include "entk/reference/so3_oracle.hpp"

using namespace entk;
using namespace entk::so3;

namespace {

constexpr double pi = std::numbers::pi;

// d^l(β) = exp(−iβ J_y) in the |l m⟩ basis, by scaling and squaring a Taylor series.
Eigen::MatrixXd small_d_expm(int l, double beta)
{
    const int n = 2 * l + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    // −iJ_y = −(J₊ − J₋)/2, rows/cols indexed by m + l
    for (int m = -l; m < l; ++m) {
        double c = std::sqrt(double(l * (l + 1) - m * (m + 1)));
        A(m + 1 + l, m + l) += -0.5 * c;
        A(m + l, m + 1 + l) += 0.5 * c;
    }
    A *= beta;
    int squarings = 0;
    double nrm = A.cwiseAbs().rowwise().sum().maxCoeff();
    while (nrm > 0.25) {
        nrm /= 2;
        A /= 2;
        ++squarings;
    }
    Eigen::MatrixXd E = Eigen::MatrixXd::Identity(n, n), term = E;
    for (int k = 1; k < 30; ++k) {
        term = term * A / k;
        E += term;
    }
    for (int s = 0; s < squarings; ++s) E = E * E;
    return E;
}

double max_abs(const MatrixXc& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

VectorXc random_complex(std::mt19937_64& rng, Eigen::Index n)
{
    std::normal_distribution<double> nd;
    VectorXc v(n);
    for (auto& x : v) x = cplx(nd(rng), nd(rng));
    return v;
}

}  // namespace

TEST_CASE("wigner d reference values")
{
    CHECK(wigner_d(0, 0, 0, 1.234) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(wigner_d(1, 0, 0, pi / 3) - 0.5) < 1e-14);
    CHECK(std::abs(wigner_d(1, 1, 1, pi / 2) - 0.5) < 1e-14);
    CHECK(std::abs(wigner_d(1, 1, 0, 0.7) + std::sin(0.7) / std::sqrt(2.0)) < 1e-14);
    CHECK_THROWS_AS(wigner_d(1, 2, 0, 0.1), DomainError);
    CHECK_THROWS_AS(wigner_d(-1, 0, 0, 0.1), DomainError);
}

TEST_CASE("wigner d matches the matrix exponential")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, pi);
    for (int l : {1, 2, 3, 5, 8}) {
        for (int t = 0; t < 4; ++t) {
            double b = u(rng);
            auto E = small_d_expm(l, b);
            double err = 0.0;
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) err = std::max(err, std::abs(E(m + l, n + l) - wigner_d(l, m, n, b)));
            CHECK(err < 1e-12);
        }
    }
}

TEST_CASE("wigner d is stable at l = 64")
{
    const int l = 64;
    for (double b : {1e-3, 0.4, pi / 2, 2.9, pi - 1e-3}) {
        auto E = small_d_expm(l, b);
        double err = 0.0, unit = 0.0;
        for (int n : {-64, -31, 0, 7, 64}) {
            double s = 0.0;
            for (int m = -l; m <= l; ++m) {
                double d = wigner_d(l, m, n, b);
                REQUIRE(std::isfinite(d));
                s += d * d;
                err = std::max(err, std::abs(E(m + l, n + l) - d));
            }
            unit = std::max(unit, std::abs(s - 1.0));
        }
        CHECK(err < 1e-9);
        CHECK(unit < 1e-11);
    }
}

TEST_CASE("wigner symmetries")
{
    std::mt19937_64 rng(12);
    for (int t = 0; t < 20; ++t) {
        Euler e = oracle::random_euler(rng);
        Rotation r = rotation_from_euler(e);
        Rotation rt{r[0], r[3], r[6], r[1], r[4], r[7], r[2], r[5], r[8]};
        Euler ei = euler_from_rotation(rt);
        for (int l = 0; l < 5; ++l) {
            double unit = 0.0;
            for (int m = -l; m <= l; ++m) {
                for (int n = -l; n <= l; ++n) {
                    CHECK(std::abs(wigner_d(l, m, n, e.beta) - ((m - n) % 2 ? -1 : 1) * wigner_d(l, n, m, e.beta)) < 1e-13);
                    CHECK(std::abs(wigner_d(l, m, n, e.beta) - wigner_d(l, -n, -m, e.beta)) < 1e-13);
                    cplx a = wigner_D(l, m, n, ei.alpha, ei.beta, ei.gamma);
                    cplx b = std::conj(wigner_D(l, n, m, e.alpha, e.beta, e.gamma));
                    CHECK(std::abs(a - b) < 1e-12);
                }
                for (int mp = -l; mp <= l; ++mp) {
                    cplx s(0.0);
                    for (int n = -l; n <= l; ++n)
                        s += wigner_D(l, m, n, e.alpha, e.beta, e.gamma) * std::conj(wigner_D(l, mp, n, e.alpha, e.beta, e.gamma));
                    unit = std::max(unit, std::abs(s - (m == mp ? 1.0 : 0.0)));
                }
            }
            CHECK(unit < 1e-12);
        }
    }
}

TEST_CASE("euler angles round trip through rotation matrices")
{
    std::mt19937_64 rng(13);
    for (int t = 0; t < 50; ++t) {
        Rotation r = rotation_from_euler(oracle::random_euler(rng));
        Rotation q = rotation_from_euler(euler_from_rotation(r));
        for (int i = 0; i < 9; ++i) CHECK(std::abs(r[i] - q[i]) < 1e-12);
    }
    // degenerate β
    for (double b : {0.0, pi}) {
        Rotation r = rotation_from_euler({0.3, b, 1.1});
        Rotation q = rotation_from_euler(euler_from_rotation(r));
        for (int i = 0; i < 9; ++i) CHECK(std::abs(r[i] - q[i]) < 1e-12);
    }
}

TEST_CASE("spherical harmonics rotate through conj D")
{
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 10; ++t) {
        Euler e = oracle::random_euler(rng);
        Rotation r = rotation_from_euler(e);
        auto x = unit_vector(std::acos(2 * u(rng) - 1), 2 * pi * u(rng));
        double th, ph, rth, rph;
        angles_of(x, th, ph);
        angles_of(entk::so3::apply(r, x), rth, rph);
        for (int l = 0; l < 5; ++l)
            for (int m = -l; m <= l; ++m) {
                cplx s(0.0);
                for (int n = -l; n <= l; ++n) s += std::conj(wigner_D(l, m, n, e.alpha, e.beta, e.gamma)) * sph_harm(l, n, th, ph);
                CHECK(std::abs(sph_harm(l, m, rth, rph) - s) < 1e-12);
            }
    }
}

TEST_CASE("wigner table matches pointwise values")
{
    WignerTable tab(5, {0.1, 1.0, 2.5});
    CHECK(tab.angles() == 3);
    for (std::size_t j = 0; j < 3; ++j)
        for (int l = 0; l < 5; ++l)
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) CHECK(tab(j, l, m, n) == doctest::Approx(wigner_d(l, m, n, std::vector{0.1, 1.0, 2.5}[j])).epsilon(1e-13));
}

TEST_CASE("sht of a constant")
{
    for (auto kind : {GridKind::gauss_legendre, GridKind::driscoll_healy}) {
        auto g = S2Grid::make(4, kind);
        std::vector<double> ones(g.points(), 1.0);
        auto c = sht_forward(g, ones, 4);
        CHECK(std::abs(c[0] - std::sqrt(4 * pi)) < 1e-13);
        for (std::size_t i = 1; i < c.size(); ++i) CHECK(std::abs(c[i]) < 1e-13);
    }
}

TEST_CASE("sht recovers Re Y21")
{
    auto g = S2Grid::make(3, GridKind::gauss_legendre);
    std::vector<double> v(g.points());
    for (int j = 0; j < g.n_theta(); ++j)
        for (int k = 0; k < g.n_phi(); ++k) v[j * g.n_phi() + k] = sph_harm(2, 1, g.theta[j], g.phi[k]).real();
    auto c = sht_forward(g, v, 3);
    for (int l = 0; l < 3; ++l)
        for (int m = -l; m <= l; ++m) {
            cplx want(0.0);
            if (l == 2 && m == 1) want = 0.5;
            if (l == 2 && m == -1) want = -0.5;
            CHECK(std::abs(c[s2_index(l, m)] - want) < 1e-13);
        }
}

TEST_CASE("transform round trips")
{
    std::mt19937_64 rng(15);
    for (auto kind : {GridKind::gauss_legendre, GridKind::driscoll_healy})
        for (int L = 1; L <= 8; ++L) {
            auto g = S2Grid::make(L, kind);
            auto c = oracle::random_real_s2(rng, L);
            auto vals = sht_inverse(g, c, L);
            std::vector<double> re(vals.size());
            for (std::size_t i = 0; i < vals.size(); ++i) {
                CHECK(std::abs(vals[i].imag()) < 1e-10);
                re[i] = vals[i].real();
            }
            auto back = sht_forward(g, re, L);
            double err = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) err = std::max(err, std::abs(back[i] - c[i]));
            CHECK(err < 1e-10);

            auto b = so3_basis(L, L, kind);
            VectorXc x = random_complex(rng, so3_size(L));
            CHECK(max_abs(so3_forward(*b, so3_inverse(*b, x)) - x) < 1e-10);
            if (L <= 5) {
                MatrixXc K(so3_size(L), so3_size(L));
                for (Eigen::Index j = 0; j < K.cols(); ++j) K.col(j) = random_complex(rng, K.rows());
                CHECK(max_abs(so3_double_forward(*b, so3_double_inverse(*b, K)) - K) < 1e-10);
            }
        }
}

TEST_CASE("band and shape mismatches are rejected")
{
    auto g = S2Grid::make(3, GridKind::gauss_legendre);
    std::vector<double> v(g.points(), 0.0);
    CHECK_THROWS(sht_forward(g, v, 4));
    std::vector<double> bad(3, 0.0);
    CHECK_THROWS_AS(sht_forward(g, bad, 2), ShapeError);
    CHECK_THROWS(so3_basis(4, 3, GridKind::gauss_legendre));
    CHECK_THROWS(S2Grid::make(0, GridKind::gauss_legendre));
    CHECK_THROWS(parse_grid_kind("healpix"));
    CHECK(parse_grid_kind(grid_kind_name(GridKind::driscoll_healy)) == GridKind::driscoll_healy);
}

TEST_CASE("sht of a rotated signal equals the Wigner action")
{
    std::mt19937_64 rng(16);
    const int L = 5;
    auto g = S2Grid::make(L, GridKind::gauss_legendre);
    for (int t = 0; t < 5; ++t) {
        auto c = oracle::random_real_s2(rng, L);
        Euler e = oracle::random_euler(rng);
        Rotation r = rotation_from_euler(e);
        Rotation rt{r[0], r[3], r[6], r[1], r[4], r[7], r[2], r[5], r[8]};
        std::vector<double> v(g.points());
        for (int j = 0; j < g.n_theta(); ++j)
            for (int k = 0; k < g.n_phi(); ++k) v[j * g.n_phi() + k] = oracle::eval_s2(c.data(), L, entk::so3::apply(rt, unit_vector(g.theta[j], g.phi[k])));
        auto got = sht_forward(g, v, L);
        auto want = rotate_s2_coeffs(c, L, e);
        double err = 0.0;
        for (std::size_t i = 0; i < got.size(); ++i) err = std::max(err, std::abs(got[i] - want[i]));
        CHECK(err < 1e-9);
    }
}

TEST_CASE("double transform of simple kernels")
{
    const int L = 3;
    auto b = so3_basis(L, L, GridKind::gauss_legendre);
    const auto P = static_cast<Eigen::Index>(b->grid.points());
    MatrixXc K = MatrixXc::Constant(P, P, cplx(2.5));
    MatrixXc kh = so3_double_forward(*b, K);
    CHECK(std::abs(kh(0, 0) - 2.5 * kVolume * kVolume) < 1e-9);
    kh(0, 0) = 0.0;
    CHECK(max_abs(kh) < 1e-9);

    MatrixXc D(P, P);
    for (Eigen::Index i = 0; i < P; ++i) {
        Euler e = b->grid.angles(i);
        cplx d = wigner_D(1, 0, 0, e.alpha, e.beta, e.gamma);
        for (Eigen::Index j = 0; j < P; ++j) D(i, j) = d.real();
    }
    kh = so3_double_forward(*b, D);
    for (Eigen::Index i = 0; i < kh.rows(); ++i)
        for (Eigen::Index j = 0; j < kh.cols(); ++j)
            if (i < so3_offset(1) || i >= so3_offset(2) || j != 0) CHECK(std::abs(kh(i, j)) < 1e-9);
    CHECK(max_abs(so3_double_inverse(*b, kh) - D) < 1e-10);
}

TEST_CASE("input kernel on the sphere")
{
    std::mt19937_64 rng(17);
    const int L = 3;
    auto f = oracle::random_signal(rng, L, 2), g = oracle::random_signal(rng, L, 2);
    S2Kernel k = input_kernel_s2(f, g);
    CHECK(max_abs(k.theta) == 0.0);
    auto grid = S2Grid::make(L, GridKind::gauss_legendre);
    double diag = 0.0;
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
            auto x = unit_vector(0.3 + 0.4 * a, 1.1 * a), y = unit_vector(0.2 + 0.5 * b, -0.7 * b);
            double want = 0.0;
            for (int c = 0; c < 2; ++c) want += 0.5 * oracle::eval_s2(f.channel(c), L, x) * oracle::eval_s2(g.channel(c), L, y);
            double tx, px, ty, py;
            angles_of(x, tx, px);
            angles_of(y, ty, py);
            cplx got(0.0);
            for (int i = 0; i < s2_size(L); ++i)
                for (int j = 0; j < s2_size(L); ++j) {
                    int li = static_cast<int>(std::sqrt(double(i))), lj = static_cast<int>(std::sqrt(double(j)));
                    got += k.cross(i, j) * sph_harm(li, i - li * li - li, tx, px) * sph_harm(lj, j - lj * lj - lj, ty, py);
                }
            CHECK(std::abs(got - want) < 1e-9);
        }
    for (int j = 0; j < grid.n_theta(); ++j)
        for (int q = 0; q < grid.n_phi(); ++q) {
            auto x = unit_vector(grid.theta[j], grid.phi[q]);
            for (int c = 0; c < 2; ++c) diag += grid.weight(j) * 0.5 * std::pow(oracle::eval_s2(f.channel(c), L, x), 2);
        }
    CHECK(k.diag_x_mean == doctest::Approx(diag / (4 * pi)).epsilon(1e-12));

    S2Coeffs one{1, 1, {cplx(1.0)}};
    CHECK(std::abs(input_kernel_s2(one, one).cross(0, 0) - 1.0) < 1e-15);

    S2Coeffs a{2, 1, {0.0, 0.0, 1.0, 0.0}}, b2{2, 1, {0.0, 0.0, 0.0, 0.0}};
    CHECK(max_abs(input_kernel_s2(a, b2).cross) == 0.0);
    S2Coeffs bad = oracle::random_signal(rng, L, 3);
    CHECK_THROWS_AS(input_kernel_s2(f, bad), ShapeError);
    CHECK(truncate(f, 2).data.size() == 8);
    CHECK(truncate(f, 2).channel(1)[3] == f.channel(1)[3]);
    CHECK_THROWS_AS(truncate(f, 4), DomainError);
}

TEST_CASE("lifting lemma matches real-space quadrature")
{
    std::mt19937_64 rng(18);
    for (int L : {2, 3}) {
        auto grid = SO3Grid::make(L, GridKind::gauss_legendre);
        MatrixXc M = oracle::analysis_matrix(grid, L);
        for (int t = 0; t < 3; ++t) {
            auto f = oracle::random_signal(rng, L, 2), g = oracle::random_signal(rng, L, 2);
            FourierKernel k = lifting_so3_fourier(input_kernel_s2(f, g));
            MatrixXc want = oracle::double_analysis(M, oracle::lifting_grid(f, g, grid).cast<cplx>());
            CHECK(max_abs(k.cross - want) < 1e-8);
            CHECK(max_abs(k.theta - k.cross) < 1e-14);
            CHECK(k.sparse);
            CHECK(k.right_invariant);
            auto fs = oracle::lifting_grid(f, f, grid);
            double dmean = 0.0;
            for (Eigen::Index i = 0; i < fs.rows(); ++i) dmean += grid.weight(i) * fs(i, i);
            CHECK(std::abs(k.diag_x(0) - dmean) < 1e-9);
        }
    }
    S2Kernel z;
    z.L = 2;
    z.cross = MatrixXc::Zero(4, 4);
    z.theta = z.cross;
    CHECK(max_abs(lifting_so3_fourier(z).cross) == 0.0);
    z.cross(0, 0) = 3.0;
    auto o = lifting_so3_fourier(z);
    CHECK(std::abs(o.cross(0, 0) - 3.0 * kVolume * kVolume / (4 * pi)) < 1e-9);
    o.cross(0, 0) = 0.0;
    CHECK(max_abs(o.cross) == 0.0);
}

TEST_CASE("gconv lemma matches real-space quadrature")
{
    std::mt19937_64 rng(19);
    for (int L : {2, 3}) {
        auto grid = SO3Grid::make(L, GridKind::gauss_legendre);
        MatrixXc M = oracle::analysis_matrix(grid, L);
        for (int t = 0; t < 3; ++t) {
            MatrixXc kin = oracle::random_real_kernel(rng, M);
            FourierKernel out = gconv_so3_fourier(oracle::wrap_kernel(kin, L));
            MatrixXc want = oracle::double_analysis(M, oracle::gconv_grid(kin, L, grid));
            CHECK(max_abs(out.cross - want) < 1e-8);
            CHECK(max_abs(out.theta - 1.5 * out.cross) < 1e-9);
            CHECK(std::abs(out.diag_x(0) - kVolume) < 1e-12);
            CHECK(out.sparse);
            CHECK(out.right_invariant);
            // the mutated lemma must be caught by the same oracle
            if (L == 3) CHECK(max_abs(detail::gconv_so3_fourier_signed(oracle::wrap_kernel(kin, L), -1).cross - want) > 1e-3);
        }
    }
}

TEST_CASE("gconv structure")
{
    std::mt19937_64 rng(20);
    const int L = 3, B = so3_size(L);
    MatrixXc k = MatrixXc::Zero(B, B);
    k(0, 0) = 4.0;
    for (int i = so3_offset(1); i < so3_offset(2); ++i)
        for (int j = so3_offset(1); j < so3_offset(2); ++j) k(i, j) = cplx(std::normal_distribution<double>()(rng), 0.3);
    auto o = gconv_so3_fourier(oracle::wrap_kernel(k, L));
    CHECK(o.cross(0, 0) == 4.0);
    for (int l = 0; l < L; ++l)
        for (int m = -l; m <= l; ++m)
            for (int n = -l; n <= l; ++n)
                for (int lp = 0; lp < L; ++lp)
                    for (int mp = -lp; mp <= lp; ++mp)
                        for (int np = -lp; np <= lp; ++np)
                            if (l != lp || n != -np) CHECK(o.cross(so3_index(l, m, n), so3_index(lp, mp, np)) == 0.0);
}

TEST_CASE("gpool and invariance")
{
    std::mt19937_64 rng(21);
    const int L = 3;
    auto grid = SO3Grid::make(L, GridKind::gauss_legendre);
    auto f = oracle::random_signal(rng, L, 2), g = oracle::random_signal(rng, L, 2);
    FourierKernel k = gconv_so3_fourier(lifting_so3_fourier(input_kernel_s2(f, g)));
    auto lg = oracle::lifting_grid(f, g, grid);
    double mean = 0.0;
    for (Eigen::Index i = 0; i < lg.rows(); ++i)
        for (Eigen::Index j = 0; j < lg.cols(); ++j) mean += grid.weight(i) * grid.weight(j) * lg(i, j);
    ScalarKernel s = gpool_so3(k);
    CHECK(std::abs(s.k_xy - mean / (kVolume * kVolume)) < 1e-10);
    CHECK(std::abs(gpool_so3(lifting_so3_fourier(input_kernel_s2(f, g))).k_xy - s.k_xy) < 1e-12);

    auto rotated = [&](const S2Coeffs& c, const Euler& e) {
        S2Coeffs r = c;
        for (int ch = 0; ch < c.channels; ++ch) {
            auto v = rotate_s2_coeffs(std::span(c.channel(ch), s2_size(L)), L, e);
            std::copy(v.begin(), v.end(), r.data.begin() + ch * s2_size(L));
        }
        return r;
    };
    NonlinOptions opt;
    opt.oversample = 4;
    auto head = [&](const S2Coeffs& a, const S2Coeffs& b, bool nl) {
        FourierKernel x = lifting_so3_fourier(input_kernel_s2(a, b));
        if (nl) x = nonlinearity_so3(x, NonlinKind::relu, opt);
        return gpool_so3(gconv_so3_fourier(x));
    };
    for (int t = 0; t < 3; ++t) {
        Euler e = oracle::random_euler(rng);
        ScalarKernel a = head(f, g, false), b = head(rotated(f, e), g, false), c = head(f, rotated(g, e), false);
        CHECK(std::abs(a.k_xy - b.k_xy) < 1e-8);
        CHECK(std::abs(a.k_xy - c.k_xy) < 1e-8);
        CHECK(std::abs(head(f, f, false).k_xy - head(rotated(f, e), rotated(f, e), false).k_xy) < 1e-8);
        ScalarKernel an = head(f, g, true), bn = head(rotated(f, e), g, true);
        CHECK(std::abs(an.k_xy - bn.k_xy) < 1e-3 * std::abs(an.k_xy) + 1e-8);
    }

    FourierKernel c = oracle::wrap_kernel(MatrixXc::Zero(so3_size(L), so3_size(L)), L);
    c.cross(0, 0) = cplx(0.0, 1.0);
    CHECK_THROWS_AS(gpool_so3(c), RealityViolationError);
}

TEST_CASE("nonlinearity on constant and zero kernels")
{
    const int L = 2, B = so3_size(L);
    FourierKernel k;
    k.L = L;
    k.cross = MatrixXc::Zero(B, B);
    k.theta = k.cross;
    k.diag_x = VectorXc::Zero(B);
    k.diag_y = VectorXc::Zero(B);
    k.diag_x(0) = kVolume;
    k.diag_y(0) = kVolume;
    for (auto path : {NonlinPath::dense, NonlinPath::automatic}) {
        NonlinOptions opt;
        opt.path = path;
        auto z = nonlinearity_so3(k, NonlinKind::erf, opt);
        CHECK(max_abs(z.cross) < 1e-12);
        FourierKernel one = k;
        one.cross(0, 0) = kVolume * kVolume;
        auto r = nonlinearity_so3(one, NonlinKind::relu, opt);
        CHECK(std::abs(r.cross(0, 0) - 0.5 * kVolume * kVolume) < 1e-8);
        r.cross(0, 0) = 0.0;
        CHECK(max_abs(r.cross) < 1e-8);
    }
    NonlinOptions bad;
    bad.oversample = 0;
    CHECK_THROWS_AS(nonlinearity_so3(k, NonlinKind::relu, bad), DomainError);
    FourierKernel dense = k;
    dense.right_invariant = false;
    NonlinOptions fast;
    fast.path = NonlinPath::right_invariant;
    CHECK_THROWS_AS(nonlinearity_so3(dense, NonlinKind::relu, fast), DomainError);
}

TEST_CASE("dense nonlinearity matches a per-point loop")
{
    std::mt19937_64 rng(22);
    const int L = 2;
    auto f = oracle::random_signal(rng, L, 2), g = oracle::random_signal(rng, L, 2);
    FourierKernel k = lifting_so3_fourier(input_kernel_s2(f, g));
    k.diag_x = lifting_so3_fourier(input_kernel_s2(f, f)).diag_x;
    for (auto kind : {NonlinKind::relu, NonlinKind::erf}) {
        NonlinOptions opt;
        opt.path = NonlinPath::dense;
        FourierKernel got = nonlinearity_so3(k, kind, opt);

        auto grid = SO3Grid::make(2 * L, GridKind::gauss_legendre);
        const auto P = static_cast<Eigen::Index>(grid.points());
        std::vector<VectorXc> syn(P);
        for (Eigen::Index i = 0; i < P; ++i) syn[i] = oracle::synthesis_vector(rotation_from_euler(grid.angles(i)), L);
        Eigen::MatrixXd gk(P, P), gt(P, P);
        double dx = k.diag_x(0).real() / kVolume, dy = k.diag_y(0).real() / kVolume;
        for (Eigen::Index i = 0; i < P; ++i)
            for (Eigen::Index j = 0; j < P; ++j) {
                double kij = (syn[i].transpose() * k.cross * syn[j]).value().real();
                double tij = (syn[i].transpose() * k.theta * syn[j]).value().real();
                NonlinValue v = nonlin_map(kind, dx, kij, dy);
                gk(i, j) = v.k;
                gt(i, j) = v.kdot * tij;
            }
        MatrixXc M = oracle::analysis_matrix(grid, L);
        CHECK(max_abs(got.cross - oracle::double_analysis(M, gk.cast<cplx>())) < 1e-9);
        CHECK(max_abs(got.theta - oracle::double_analysis(M, gt.cast<cplx>())) < 1e-9);
    }
}

TEST_CASE("fast and dense nonlinearity paths agree up to aliasing")
{
    // the two paths alias differently; the gap must shrink with oversampling
    std::mt19937_64 rng(23);
    for (int L : {2, 3}) {
        auto f = oracle::random_signal(rng, L, 2), g = oracle::random_signal(rng, L, 2);
        FourierKernel k = lifting_so3_fourier(input_kernel_s2(f, g));
        for (auto kind : {NonlinKind::relu, NonlinKind::erf})
            for (auto grid : {GridKind::gauss_legendre, GridKind::driscoll_healy}) {
                double prev_k = INFINITY, prev_t = INFINITY;
                for (int os = 2; os <= (L == 2 ? 3 : 2); ++os) {
                    NonlinOptions a, b;
                    a.path = NonlinPath::dense;
                    b.path = NonlinPath::right_invariant;
                    a.grid = b.grid = grid;
                    a.oversample = b.oversample = os;
                    auto x = nonlinearity_so3(k, kind, a), y = nonlinearity_so3(k, kind, b);
                    double gk = max_abs(x.cross - y.cross) / max_abs(x.cross);
                    double gt = max_abs(x.theta - y.theta) / max_abs(x.theta);
                    CHECK(gk < 1e-4);
                    CHECK(gt < 1e-3);
                    CHECK(gk < prev_k / 10);
                    CHECK(gt < prev_t / 10);
                    prev_k = gk;
                    prev_t = gt;
                    CHECK(y.sparse);
                }
            }
    }
}

TEST_CASE("reconstructed kernels stay real")
{
    std::mt19937_64 rng(24);
    const int L = 3;
    auto f = oracle::random_signal(rng, L, 3), g = oracle::random_signal(rng, L, 3);
    FourierKernel k = lifting_so3_fourier(input_kernel_s2(f, g));
    for (int layer = 0; layer < 2; ++layer) {
        k = gconv_so3_fourier(nonlinearity_so3(k, NonlinKind::erf));
        auto b = so3_basis(L, L, GridKind::gauss_legendre);
        MatrixXc grid = so3_double_inverse(*b, k.cross);
        CHECK(grid.imag().cwiseAbs().maxCoeff() < 1e-10 * (1.0 + grid.real().cwiseAbs().maxCoeff()));
    }
    ScalarKernel s = gpool_so3(k);
    CHECK(std::isfinite(s.k_xy));
}

TEST_CASE("bandlimit truncation")
{
    std::mt19937_64 rng(25);
    const int L = 3;
    auto f = oracle::random_signal(rng, L, 1);
    FourierKernel k = lifting_so3_fourier(input_kernel_s2(f, f));
    auto same = bandlimit_truncate(k, L);
    CHECK(max_abs(same.cross - k.cross) == 0.0);
    auto one = bandlimit_truncate(k, 1);
    CHECK(one.cross.rows() == 1);
    CHECK(one.cross(0, 0) == k.cross(0, 0));
    auto two = bandlimit_truncate(k, 2);
    CHECK(max_abs(two.cross - k.cross.topLeftCorner(so3_size(2), so3_size(2))) == 0.0);
    CHECK_THROWS_AS(bandlimit_truncate(k, 0), DomainError);
    CHECK_THROWS_AS(bandlimit_truncate(k, 4), DomainError);
}
