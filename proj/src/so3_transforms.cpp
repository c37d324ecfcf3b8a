#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "entk/errors.hpp"
#include "entk/so3.hpp"

namespace entk::so3 {

namespace {

constexpr double kPi = std::numbers::pi;

void check_band(int L, int grid_L)
{
    if (L < 1) throw DomainError("bandlimit must be positive");
    if (L > grid_L) throw DomainError("grid does not support the requested bandlimit");
}

}  // namespace

std::vector<cplx> sht_forward(const S2Grid& grid, std::span<const double> values, int L)
{
    check_band(L, grid.L);
    if (values.size() != grid.points()) throw ShapeError("sht_forward: sample count does not match grid");
    WignerTable d(L, grid.theta);
    const int nt = grid.n_theta(), np = grid.n_phi();
    std::vector<cplx> out(s2_size(L), cplx(0.0));
    std::vector<cplx> fm(2 * L - 1);
    for (int j = 0; j < nt; ++j) {
        for (int m = -(L - 1); m < L; ++m) {
            cplx s(0.0);
            for (int k = 0; k < np; ++k) s += values[static_cast<std::size_t>(j) * np + k] * std::polar(1.0, -m * grid.phi[k]);
            fm[m + L - 1] = s * grid.weight(j);
        }
        for (int l = 0; l < L; ++l) {
            double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi));
            for (int m = -l; m <= l; ++m) out[s2_index(l, m)] += norm * d(j, l, m, 0) * fm[m + L - 1];
        }
    }
    return out;
}

std::vector<cplx> sht_inverse(const S2Grid& grid, std::span<const cplx> coeffs, int L)
{
    check_band(L, grid.L);
    if (coeffs.size() != static_cast<std::size_t>(s2_size(L))) throw ShapeError("sht_inverse: coefficient count mismatch");
    WignerTable d(L, grid.theta);
    const int nt = grid.n_theta(), np = grid.n_phi();
    std::vector<cplx> out(grid.points(), cplx(0.0));
    std::vector<cplx> hm(2 * L - 1);
    for (int j = 0; j < nt; ++j) {
        for (int m = -(L - 1); m < L; ++m) {
            cplx s(0.0);
            for (int l = std::abs(m); l < L; ++l)
                s += std::sqrt((2.0 * l + 1.0) / (4.0 * kPi)) * d(j, l, m, 0) * coeffs[s2_index(l, m)];
            hm[m + L - 1] = s;
        }
        for (int k = 0; k < np; ++k) {
            cplx s(0.0);
            for (int m = -(L - 1); m < L; ++m) s += hm[m + L - 1] * std::polar(1.0, m * grid.phi[k]);
            out[static_cast<std::size_t>(j) * np + k] = s;
        }
    }
    return out;
}

std::vector<cplx> rotate_s2_coeffs(std::span<const cplx> coeffs, int L, const Euler& r)
{
    if (coeffs.size() != static_cast<std::size_t>(s2_size(L))) throw ShapeError("rotate_s2_coeffs: size mismatch");
    std::vector<cplx> out(coeffs.size(), cplx(0.0));
    for (int l = 0; l < L; ++l)
        for (int n = -l; n <= l; ++n) {
            cplx s(0.0);
            for (int m = -l; m <= l; ++m) s += coeffs[s2_index(l, m)] * wigner_D(l, n, m, r.alpha, r.beta, r.gamma);
            out[s2_index(l, n)] = s;
        }
    return out;
}

std::shared_ptr<const SO3Basis> so3_basis(int L, int grid_L, GridKind kind)
{
    check_band(L, grid_L);
    static std::mutex mu;
    static std::map<std::tuple<int, int, int>, std::shared_ptr<const SO3Basis>> cache;
    auto key = std::make_tuple(L, grid_L, static_cast<int>(kind));
    {
        std::lock_guard<std::mutex> lk(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto b = std::make_shared<SO3Basis>();
    b->L = L;
    b->grid = SO3Grid::make(grid_L, kind);
    WignerTable d(L, b->grid.beta);
    const std::size_t N = b->grid.points();
    const int B = so3_size(L);
    const std::size_t nb = b->grid.beta.size(), nc = b->grid.gamma.size();
    b->forward.resize(static_cast<Eigen::Index>(N), B);
    b->inverse.resize(static_cast<Eigen::Index>(N), B);
    for (std::size_t p = 0; p < N; ++p) {
        std::size_t j = (p / nc) % nb;
        Euler e = b->grid.angles(p);
        double w = b->grid.weight(p);
        for (int l = 0; l < L; ++l) {
            double cl = (2.0 * l + 1.0) / kVolume;
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) {
                    int idx = so3_index(l, m, n);
                    cplx D = std::polar(d(j, l, m, n), -(m * e.alpha + n * e.gamma));
                    b->forward(static_cast<Eigen::Index>(p), idx) = w * D;
                    b->inverse(static_cast<Eigen::Index>(p), idx) = cl * std::conj(D);
                }
        }
    }
    std::lock_guard<std::mutex> lk(mu);
    auto [it, inserted] = cache.emplace(key, b);
    return it->second;
}

VectorXc so3_forward(const SO3Basis& b, const VectorXc& values)
{
    if (values.size() != b.forward.rows()) throw ShapeError("so3_forward: sample count does not match grid");
    return b.forward.transpose() * values;
}

VectorXc so3_inverse(const SO3Basis& b, const VectorXc& coeffs)
{
    if (coeffs.size() != b.inverse.cols()) throw ShapeError("so3_inverse: coefficient count mismatch");
    return b.inverse * coeffs;
}

MatrixXc so3_double_forward(const SO3Basis& b, const MatrixXc& k)
{
    if (k.rows() != b.forward.rows() || k.cols() != b.forward.rows())
        throw ShapeError("so3_double_forward: kernel does not match grid");
    MatrixXc tmp = b.forward.transpose() * k;
    return tmp * b.forward;
}

MatrixXc so3_double_inverse(const SO3Basis& b, const MatrixXc& khat)
{
    if (khat.rows() != b.inverse.cols() || khat.cols() != b.inverse.cols())
        throw ShapeError("so3_double_inverse: coefficient shape mismatch");
    MatrixXc tmp = b.inverse * khat;
    return tmp * b.inverse.transpose();
}

}  // namespace entk::so3
