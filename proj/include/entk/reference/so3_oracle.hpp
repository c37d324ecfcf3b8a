#pragma once

// Real-space quadrature references for the SO(3) kernel maps.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "entk/so3.hpp"

namespace oracle {

using namespace entk::so3;

inline Euler random_euler(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double tau = 2.0 * std::numbers::pi;
    return {tau * u(rng), std::acos(2.0 * u(rng) - 1.0), tau * u(rng)};
}

// Coefficients of a random real band-L function.
inline std::vector<cplx> random_real_s2(std::mt19937_64& rng, int L)
{
    std::normal_distribution<double> nd;
    std::vector<cplx> c(s2_size(L));
    for (int l = 0; l < L; ++l) {
        c[s2_index(l, 0)] = nd(rng);
        for (int m = 1; m <= l; ++m) {
            cplx v(nd(rng), nd(rng));
            c[s2_index(l, m)] = v;
            c[s2_index(l, -m)] = (m % 2 ? -1.0 : 1.0) * std::conj(v);
        }
    }
    return c;
}

inline S2Coeffs random_signal(std::mt19937_64& rng, int L, int channels)
{
    S2Coeffs s;
    s.L = L;
    s.channels = channels;
    for (int c = 0; c < channels; ++c) {
        auto v = random_real_s2(rng, L);
        s.data.insert(s.data.end(), v.begin(), v.end());
    }
    return s;
}

inline double eval_s2(const cplx* c, int L, const std::array<double, 3>& x)
{
    double th, ph;
    angles_of(x, th, ph);
    cplx s(0.0);
    for (int l = 0; l < L; ++l)
        for (int m = -l; m <= l; ++m) s += c[s2_index(l, m)] * sph_harm(l, m, th, ph);
    return s.real();
}

// Rows w_R D_b(R) over an SO(3) grid, built from wigner_D directly.
inline MatrixXc analysis_matrix(const SO3Grid& g, int L)
{
    MatrixXc M(g.points(), so3_size(L));
    for (std::size_t i = 0; i < g.points(); ++i) {
        Euler e = g.angles(i);
        double w = g.weight(i);
        for (int l = 0; l < L; ++l)
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) M(i, so3_index(l, m, n)) = w * wigner_D(l, m, n, e.alpha, e.beta, e.gamma);
    }
    return M;
}

// Synthesis vector (2l+1)/(8π²) conj(D_b(R)).
inline VectorXc synthesis_vector(const Rotation& r, int L)
{
    Euler e = euler_from_rotation(r);
    VectorXc v(so3_size(L));
    for (int l = 0; l < L; ++l)
        for (int m = -l; m <= l; ++m)
            for (int n = -l; n <= l; ++n)
                v(so3_index(l, m, n)) = (2.0 * l + 1.0) / kVolume * std::conj(wigner_D(l, m, n, e.alpha, e.beta, e.gamma));
    return v;
}

inline MatrixXc double_analysis(const MatrixXc& M, const MatrixXc& k) { return M.transpose() * k * M; }

// (1/4π) ∫ dx K⁰(Rx, R'x) on an SO(3) grid of band L.
inline Eigen::MatrixXd lifting_grid(const S2Coeffs& f, const S2Coeffs& g, const SO3Grid& grid)
{
    const int L = f.L;
    S2Grid sg = S2Grid::make(2 * L, GridKind::gauss_legendre);
    const std::size_t P = grid.points(), X = sg.points();
    const int C = f.channels;
    Eigen::MatrixXd A(P, X * C), B(P, X * C);
    for (std::size_t i = 0; i < P; ++i) {
        Rotation r = rotation_from_euler(grid.angles(i));
        for (int j = 0; j < sg.n_theta(); ++j)
            for (int k = 0; k < sg.n_phi(); ++k) {
                auto y = entk::so3::apply(r, unit_vector(sg.theta[j], sg.phi[k]));
                std::size_t x = static_cast<std::size_t>(j) * sg.n_phi() + k;
                double w = sg.weight(j);
                for (int c = 0; c < C; ++c) {
                    A(i, x * C + c) = w * eval_s2(f.channel(c), L, y);
                    B(i, x * C + c) = eval_s2(g.channel(c), L, y);
                }
            }
    }
    return A * B.transpose() / (4.0 * std::numbers::pi * C);
}

// (1/8π²) ∫ dS K(RS, R'S) on an SO(3) grid of band L; S integrated on a band 2L−1 grid.
inline MatrixXc gconv_grid(const MatrixXc& khat, int L, const SO3Grid& grid)
{
    SO3Grid sg = SO3Grid::make(2 * L - 1, GridKind::gauss_legendre);
    const std::size_t P = grid.points();
    std::vector<Rotation> rs(P);
    for (std::size_t i = 0; i < P; ++i) rs[i] = rotation_from_euler(grid.angles(i));
    MatrixXc out = MatrixXc::Zero(P, P);
    MatrixXc V(P, so3_size(L));
    for (std::size_t s = 0; s < sg.points(); ++s) {
        Rotation S = rotation_from_euler(sg.angles(s));
        for (std::size_t i = 0; i < P; ++i) V.row(i) = synthesis_vector(compose(rs[i], S), L).transpose();
        out += sg.weight(s) * (V * khat * V.transpose());
    }
    return out / kVolume;
}

// Analysis of a random real kernel sampled on the grid behind M.
inline MatrixXc random_real_kernel(std::mt19937_64& rng, const MatrixXc& M)
{
    std::normal_distribution<double> nd;
    const Eigen::Index P = M.rows();
    Eigen::MatrixXd G(P, P);
    for (auto& x : G.reshaped()) x = nd(rng);
    return double_analysis(M, G.cast<cplx>());
}

// Fourier kernel with theta = k/2 and constant diagonals 1 and 2.
inline FourierKernel wrap_kernel(const MatrixXc& k, int L)
{
    FourierKernel f;
    f.L = L;
    f.cross = k;
    f.theta = 0.5 * k;
    f.diag_x = VectorXc::Zero(so3_size(L));
    f.diag_y = VectorXc::Zero(so3_size(L));
    f.diag_x(0) = kVolume;
    f.diag_y(0) = 2.0 * kVolume;
    return f;
}

}  // namespace oracle
