#include <cmath>
#include <numbers>

#include "entk/errors.hpp"
#include "entk/so3.hpp"

namespace entk::so3 {

namespace {

constexpr double kPi = std::numbers::pi;

double parity(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }

double real_checked(cplx z, const char* where)
{
    if (std::abs(z.imag()) > kRealityTol * std::max(1.0, std::abs(z.real())))
        throw RealityViolationError(std::string(where) + ": imaginary residue " + std::to_string(z.imag()));
    return z.real();
}

Eigen::MatrixXd real_part_checked(const MatrixXc& m, const char* where)
{
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    double worst = m.imag().cwiseAbs().maxCoeff();
    if (worst > kRealityTol * scale)
        throw RealityViolationError(std::string(where) + ": imaginary residue " + std::to_string(worst));
    return m.real();
}

Eigen::VectorXd real_part_checked(const VectorXc& v, const char* where)
{
    double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
    double worst = v.imag().cwiseAbs().maxCoeff();
    if (worst > kRealityTol * scale)
        throw RealityViolationError(std::string(where) + ": imaginary residue " + std::to_string(worst));
    return v.real();
}

VectorXc constant_diag(int L, double value)
{
    VectorXc d = VectorXc::Zero(so3_size(L));
    d(0) = value * kVolume;
    return d;
}

bool diag_is_constant(const VectorXc& d)
{
    double base = std::abs(d(0));
    for (Eigen::Index i = 1; i < d.size(); ++i)
        if (std::abs(d(i)) > 1e-12 * std::max(base, 1e-300)) return false;
    return true;
}

// Shared δ_{ll'} δ_{n,−n'} output shape of the lifting / group convolution lemmas.
void lemma_gconv(const MatrixXc& in, MatrixXc& out, int L, int sign)
{
    out.setZero(in.rows(), in.cols());
    for (int l = 0; l < L; ++l) {
        double inv = 1.0 / (2.0 * l + 1.0);
        for (int m = -l; m <= l; ++m)
            for (int mp = -l; mp <= l; ++mp) {
                cplx alt(0.0);  // Σ_p (−1)^p in_{mp, m'(−p)}
                cplx plain(0.0);
                for (int p = -l; p <= l; ++p) {
                    cplx v = in(so3_index(l, m, p), so3_index(l, mp, -p));
                    alt += parity(p) * v;
                    plain += v;
                }
                for (int n = -l; n <= l; ++n)
                    out(so3_index(l, m, n), so3_index(l, mp, -n)) = inv * (sign == 1 ? parity(n) * alt : plain);
            }
    }
}

}  // namespace

S2Coeffs truncate(const S2Coeffs& c, int L_new)
{
    if (L_new < 1 || L_new > c.L) throw DomainError("truncate: invalid bandlimit");
    S2Coeffs out;
    out.L = L_new;
    out.channels = c.channels;
    out.data.resize(static_cast<std::size_t>(c.channels) * s2_size(L_new));
    for (int ch = 0; ch < c.channels; ++ch)
        for (int i = 0; i < s2_size(L_new); ++i) out.data[static_cast<std::size_t>(ch) * s2_size(L_new) + i] = c.channel(ch)[i];
    return out;
}

S2Kernel input_kernel_s2(const S2Coeffs& f, const S2Coeffs& g)
{
    if (f.channels != g.channels) throw ShapeError("input_kernel_s2: channel counts differ");
    if (f.L != g.L) throw ShapeError("input_kernel_s2: bandlimits differ");
    if (f.channels < 1) throw ShapeError("input_kernel_s2: no channels");
    const int S = s2_size(f.L);
    S2Kernel k;
    k.L = f.L;
    k.cross = MatrixXc::Zero(S, S);
    k.theta = MatrixXc::Zero(S, S);
    double sx = 0.0, sy = 0.0;
    for (int c = 0; c < f.channels; ++c) {
        Eigen::Map<const VectorXc> a(f.channel(c), S), b(g.channel(c), S);
        k.cross.noalias() += a * b.transpose();
        sx += a.squaredNorm();
        sy += b.squaredNorm();
    }
    double w = 1.0 / f.channels;
    k.cross *= w;
    k.diag_x_mean = sx * w / (4.0 * kPi);
    k.diag_y_mean = sy * w / (4.0 * kPi);
    return k;
}

FourierKernel lifting_so3_fourier(const S2Kernel& in)
{
    const int L = in.L;
    const int B = so3_size(L);
    FourierKernel out;
    out.L = L;
    out.cross = MatrixXc::Zero(B, B);
    out.theta = MatrixXc::Zero(B, B);
    for (int l = 0; l < L; ++l) {
        double f = kVolume / (2.0 * l + 1.0);
        double pref = f * f / (4.0 * kPi);
        for (int m = -l; m <= l; ++m)
            for (int mp = -l; mp <= l; ++mp) {
                cplx k = in.cross(s2_index(l, m), s2_index(l, mp));
                cplx t = in.theta(s2_index(l, m), s2_index(l, mp));
                for (int n = -l; n <= l; ++n) {
                    int a = so3_index(l, m, n), b = so3_index(l, mp, -n);
                    out.cross(a, b) = pref * parity(n) * k;
                    out.theta(a, b) = pref * parity(n) * t;
                }
            }
    }
    out.theta += out.cross;
    out.diag_x = constant_diag(L, in.diag_x_mean);
    out.diag_y = constant_diag(L, in.diag_y_mean);
    out.sparse = true;
    out.right_invariant = true;
    return out;
}

namespace detail {

FourierKernel gconv_so3_fourier_signed(const FourierKernel& in, int sign)
{
    FourierKernel out;
    out.L = in.L;
    lemma_gconv(in.cross, out.cross, in.L, sign);
    lemma_gconv(in.theta, out.theta, in.L, sign);
    out.theta += out.cross;
    out.diag_x = VectorXc::Zero(in.diag_x.size());
    out.diag_y = VectorXc::Zero(in.diag_y.size());
    out.diag_x(0) = in.diag_x(0);
    out.diag_y(0) = in.diag_y(0);
    out.sparse = true;
    out.right_invariant = true;
    return out;
}

}  // namespace detail

FourierKernel gconv_so3_fourier(const FourierKernel& in) { return detail::gconv_so3_fourier_signed(in, 1); }

ScalarKernel gpool_so3(const FourierKernel& in)
{
    ScalarKernel s;
    s.k_xy = real_checked(in.cross(0, 0) / (kVolume * kVolume), "gpool_so3");
    s.theta = real_checked(in.theta(0, 0) / (kVolume * kVolume), "gpool_so3");
    s.k_xx = real_checked(in.diag_x(0) / kVolume, "gpool_so3");
    s.k_yy = real_checked(in.diag_y(0) / kVolume, "gpool_so3");
    return s;
}

FourierKernel bandlimit_truncate(const FourierKernel& in, int L_new)
{
    if (L_new < 1 || L_new > in.L) throw DomainError("bandlimit_truncate: invalid bandlimit");
    const int B = so3_size(L_new);
    FourierKernel out = in;
    out.L = L_new;
    out.cross = in.cross.topLeftCorner(B, B);
    out.theta = in.theta.topLeftCorner(B, B);
    out.diag_x = in.diag_x.head(B);
    out.diag_y = in.diag_y.head(B);
    return out;
}

GridKernel to_grid(const FourierKernel& k, int grid_L, GridKind kind)
{
    auto basis = so3_basis(k.L, grid_L, kind);
    GridKernel g;
    g.L = k.L;
    g.grid = basis->grid;
    g.cross = real_part_checked(so3_double_inverse(*basis, k.cross), "to_grid");
    g.theta = real_part_checked(so3_double_inverse(*basis, k.theta), "to_grid");
    g.diag_x = real_part_checked(so3_inverse(*basis, k.diag_x), "to_grid");
    g.diag_y = real_part_checked(so3_inverse(*basis, k.diag_y), "to_grid");
    return g;
}

FourierKernel from_grid(const GridKernel& g, int L)
{
    auto basis = so3_basis(L, g.grid.L, g.grid.kind);
    FourierKernel k;
    k.L = L;
    k.cross = so3_double_forward(*basis, g.cross.cast<cplx>());
    k.theta = so3_double_forward(*basis, g.theta.cast<cplx>());
    k.diag_x = so3_forward(*basis, g.diag_x.cast<cplx>());
    k.diag_y = so3_forward(*basis, g.diag_y.cast<cplx>());
    return k;
}

GridKernel apply_nonlinearity(const GridKernel& g, NonlinKind kind)
{
    GridKernel out = g;
    const Eigen::Index N = g.cross.rows();
    for (Eigen::Index j = 0; j < N; ++j)
        for (Eigen::Index i = 0; i < N; ++i) {
            NonlinValue v = nonlin_map(kind, g.diag_x(i), g.cross(i, j), g.diag_y(j));
            out.cross(i, j) = v.k;
            out.theta(i, j) = v.kdot * g.theta(i, j);
        }
    for (Eigen::Index i = 0; i < N; ++i) {
        out.diag_x(i) = nonlin_map(kind, g.diag_x(i), g.diag_x(i), g.diag_x(i)).k;
        out.diag_y(i) = nonlin_map(kind, g.diag_y(i), g.diag_y(i), g.diag_y(i)).k;
    }
    return out;
}

FourierKernel nonlinearity_so3(const FourierKernel& in, NonlinKind kind, const NonlinOptions& opt)
{
    if (opt.oversample < 1) throw DomainError("nonlinearity_so3: oversampling factor must be at least 1");
    const int L = in.L;
    const int grid_L = opt.oversample * L;
    bool eligible = in.right_invariant && diag_is_constant(in.diag_x) && diag_is_constant(in.diag_y);
    if (opt.path == NonlinPath::right_invariant && !eligible)
        throw DomainError("nonlinearity_so3: kernel is not right invariant with constant diagonals");
    if (opt.path == NonlinPath::dense || !eligible) return from_grid(apply_nonlinearity(to_grid(in, grid_L, opt.grid), kind), L);

    // K_{R,R'} = F(R'R⁻¹) with F(Q) = K_{I,Q}: one SO(3) function carries the kernel.
    auto basis = so3_basis(L, grid_L, opt.grid);
    const int B = so3_size(L);
    VectorXc vk = VectorXc::Zero(B), vt = VectorXc::Zero(B);
    for (int l = 0; l < L; ++l) {
        double cl = (2.0 * l + 1.0) / kVolume;
        for (int m = -l; m <= l; ++m) {
            vk += cl * in.cross.row(so3_index(l, m, m)).transpose();
            vt += cl * in.theta.row(so3_index(l, m, m)).transpose();
        }
    }
    Eigen::VectorXd fk = real_part_checked(so3_inverse(*basis, vk), "nonlinearity_so3");
    Eigen::VectorXd ft = real_part_checked(so3_inverse(*basis, vt), "nonlinearity_so3");
    double dx = real_checked(in.diag_x(0) / kVolume, "nonlinearity_so3");
    double dy = real_checked(in.diag_y(0) / kVolume, "nonlinearity_so3");
    Eigen::VectorXd gk(fk.size()), gt(ft.size());
    for (Eigen::Index i = 0; i < fk.size(); ++i) {
        NonlinValue v = nonlin_map(kind, dx, fk(i), dy);
        gk(i) = v.k;
        gt(i) = v.kdot * ft(i);
    }
    VectorXc hk = so3_forward(*basis, gk.cast<cplx>());
    VectorXc ht = so3_forward(*basis, gt.cast<cplx>());

    FourierKernel out;
    out.L = L;
    out.cross = MatrixXc::Zero(B, B);
    out.theta = MatrixXc::Zero(B, B);
    for (int l = 0; l < L; ++l) {
        double f = kVolume / (2.0 * l + 1.0);
        for (int m = -l; m <= l; ++m)
            for (int mp = -l; mp <= l; ++mp) {
                int src = so3_index(l, mp, -m);
                for (int n = -l; n <= l; ++n) {
                    double s = f * parity(m + n);
                    out.cross(so3_index(l, m, n), so3_index(l, mp, -n)) = s * hk(src);
                    out.theta(so3_index(l, m, n), so3_index(l, mp, -n)) = s * ht(src);
                }
            }
    }
    out.diag_x = constant_diag(L, nonlin_map(kind, dx, dx, dx).k);
    out.diag_y = constant_diag(L, nonlin_map(kind, dy, dy, dy).k);
    out.sparse = true;
    out.right_invariant = true;
    return out;
}

}  // namespace entk::so3
