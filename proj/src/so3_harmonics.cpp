#include <algorithm>
#include <cmath>
#include <numbers>

#include "entk/errors.hpp"
#include "entk/quadrature.hpp"
#include "entk/so3.hpp"

namespace entk::so3 {

namespace {

constexpr double kPi = std::numbers::pi;

double sqrt_binomial(int n, int k)
{
    return std::exp(0.5 * (std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

// d^l_mn(β) for l in [max(|m|,|n|), L), written to out[l].
void d_column(int L, int m, int n, double beta, double* out)
{
    int l0 = std::max(std::abs(m), std::abs(n));
    if (l0 >= L) return;
    double sign = 1.0;
    int a = m, b = n;
    if (std::abs(n) > std::abs(m)) {
        // d_mn = (−1)^{m−n} d_nm; seed with the larger index first.
        std::swap(a, b);
        sign = ((m - n) % 2 == 0) ? 1.0 : -1.0;
    }
    double c = std::cos(0.5 * beta), s = std::sin(0.5 * beta);
    double seed;
    if (a == l0)
        seed = (((l0 - b) % 2 == 0) ? 1.0 : -1.0) * sqrt_binomial(2 * l0, l0 + b) * std::pow(c, l0 + b) * std::pow(s, l0 - b);
    else
        seed = sqrt_binomial(2 * l0, l0 + b) * std::pow(c, l0 - b) * std::pow(s, l0 + b);
    out[l0] = sign * seed;
    if (l0 + 1 >= L) return;
    double cb = std::cos(beta);
    double mn = static_cast<double>(m) * n;
    double m2 = static_cast<double>(m) * m, n2 = static_cast<double>(n) * n;
    double prev2 = 0.0, prev1 = out[l0];
    for (int l = l0 + 1; l < L; ++l) {
        double cur;
        if (l == 1) {
            cur = cb;  // only reached for m = n = 0
        } else {
            double dl = l;
            double num = (2.0 * dl - 1.0) * (dl * (dl - 1.0) * cb - mn) * prev1;
            if (l - 2 >= l0) {
                double lm1 = dl - 1.0;
                num -= dl * std::sqrt((lm1 * lm1 - m2) * (lm1 * lm1 - n2)) * prev2;
            }
            cur = num / ((dl - 1.0) * std::sqrt((dl * dl - m2) * (dl * dl - n2)));
        }
        out[l] = cur;
        prev2 = prev1;
        prev1 = cur;
    }
}

void check_indices(int l, int m, int n)
{
    if (l < 0 || std::abs(m) > l || std::abs(n) > l) throw DomainError("Wigner index out of range");
}

}  // namespace

const char* grid_kind_name(GridKind k) { return k == GridKind::gauss_legendre ? "gauss_legendre" : "driscoll_healy"; }

GridKind parse_grid_kind(const std::string& name)
{
    if (name == "gauss_legendre") return GridKind::gauss_legendre;
    if (name == "driscoll_healy") return GridKind::driscoll_healy;
    throw ConfigError("unknown grid kind '" + name + "'");
}

double wigner_d(int l, int m, int n, double beta)
{
    check_indices(l, m, n);
    std::vector<double> col(l + 1, 0.0);
    d_column(l + 1, m, n, beta, col.data());
    return col[l];
}

cplx wigner_D(int l, int m, int n, double alpha, double beta, double gamma)
{
    double d = wigner_d(l, m, n, beta);
    return std::polar(d, -(m * alpha + n * gamma));
}

cplx sph_harm(int l, int m, double theta, double phi)
{
    double d = wigner_d(l, m, 0, theta);
    return std::polar(std::sqrt((2.0 * l + 1.0) / (4.0 * kPi)) * d, m * phi);
}

WignerTable::WignerTable(int L, std::vector<double> betas) : L_(L), betas_(std::move(betas))
{
    if (L < 1) throw DomainError("WignerTable: bandlimit must be positive");
    const std::size_t B = static_cast<std::size_t>(so3_size(L));
    values_.assign(betas_.size() * B, 0.0);
    std::vector<double> col(L);
    for (std::size_t j = 0; j < betas_.size(); ++j)
        for (int m = -(L - 1); m < L; ++m)
            for (int n = -(L - 1); n < L; ++n) {
                d_column(L, m, n, betas_[j], col.data());
                for (int l = std::max(std::abs(m), std::abs(n)); l < L; ++l) values_[j * B + so3_index(l, m, n)] = col[l];
            }
}

Rotation rotation_from_euler(const Euler& e)
{
    double ca = std::cos(e.alpha), sa = std::sin(e.alpha);
    double cb = std::cos(e.beta), sb = std::sin(e.beta);
    double cg = std::cos(e.gamma), sg = std::sin(e.gamma);
    return {ca * cb * cg - sa * sg, -ca * cb * sg - sa * cg, ca * sb,
            sa * cb * cg + ca * sg, -sa * cb * sg + ca * cg, sa * sb,
            -sb * cg, sb * sg, cb};
}

Euler euler_from_rotation(const Rotation& r)
{
    Euler e;
    double cb = std::clamp(r[8], -1.0, 1.0);
    e.beta = std::acos(cb);
    double sb = std::sqrt(r[2] * r[2] + r[5] * r[5]);
    if (sb > 1e-12) {
        e.alpha = std::atan2(r[5], r[2]);
        e.gamma = std::atan2(r[7], -r[6]);
    } else if (cb > 0) {
        e.beta = 0.0;
        e.alpha = std::atan2(r[3], r[0]);
        e.gamma = 0.0;
    } else {
        e.beta = kPi;
        e.alpha = std::atan2(-r[3], -r[0]);
        e.gamma = 0.0;
    }
    return e;
}

Rotation compose(const Rotation& a, const Rotation& b)
{
    Rotation c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
            c[i * 3 + j] = s;
        }
    return c;
}

std::array<double, 3> apply(const Rotation& r, const std::array<double, 3>& x)
{
    return {r[0] * x[0] + r[1] * x[1] + r[2] * x[2], r[3] * x[0] + r[4] * x[1] + r[5] * x[2],
            r[6] * x[0] + r[7] * x[1] + r[8] * x[2]};
}

std::array<double, 3> unit_vector(double theta, double phi)
{
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

void angles_of(const std::array<double, 3>& x, double& theta, double& phi)
{
    double n = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    theta = std::acos(std::clamp(x[2] / n, -1.0, 1.0));
    phi = std::atan2(x[1], x[0]);
}

namespace {

void colatitudes(int L, GridKind kind, std::vector<double>& nodes, std::vector<double>& weights)
{
    if (kind == GridKind::gauss_legendre) {
        quad::Rule r = quad::gauss_legendre(L);
        nodes.resize(L);
        weights.resize(L);
        for (int j = 0; j < L; ++j) {
            // ascending colatitude
            nodes[j] = std::acos(r.nodes[L - 1 - j]);
            weights[j] = r.weights[L - 1 - j];
        }
        return;
    }
    // Equiangular nodes with Fejér's first rule in cos θ.
    int N = 2 * L;
    nodes.resize(N);
    weights.resize(N);
    for (int j = 0; j < N; ++j) {
        double th = kPi * (2.0 * j + 1.0) / (2.0 * N);
        double s = 0.0;
        for (int k = 1; k <= N / 2; ++k) s += std::cos(2.0 * k * th) / (4.0 * k * k - 1.0);
        nodes[j] = th;
        weights[j] = 2.0 / N * (1.0 - 2.0 * s);
    }
}

std::vector<double> uniform_angles(int n)
{
    std::vector<double> a(n);
    for (int i = 0; i < n; ++i) a[i] = 2.0 * kPi * i / n;
    return a;
}

}  // namespace

S2Grid S2Grid::make(int L, GridKind kind)
{
    if (L < 1) throw DomainError("S2Grid: bandlimit must be positive");
    S2Grid g;
    g.L = L;
    g.kind = kind;
    colatitudes(L, kind, g.theta, g.theta_weight);
    g.phi = uniform_angles(2 * L - 1);
    return g;
}

double S2Grid::weight(int j) const { return theta_weight[j] * 2.0 * kPi / n_phi(); }

SO3Grid SO3Grid::make(int L, GridKind kind)
{
    if (L < 1) throw DomainError("SO3Grid: bandlimit must be positive");
    SO3Grid g;
    g.L = L;
    g.kind = kind;
    colatitudes(L, kind, g.beta, g.beta_weight);
    g.alpha = uniform_angles(2 * L - 1);
    g.gamma = uniform_angles(2 * L - 1);
    return g;
}

Euler SO3Grid::angles(std::size_t idx) const
{
    std::size_t nc = gamma.size(), nb = beta.size();
    std::size_t c = idx % nc, j = (idx / nc) % nb, a = idx / (nc * nb);
    return {alpha[a], beta[j], gamma[c]};
}

double SO3Grid::weight(std::size_t idx) const
{
    std::size_t nc = gamma.size(), nb = beta.size();
    std::size_t j = (idx / nc) % nb;
    return beta_weight[j] * (2.0 * kPi / alpha.size()) * (2.0 * kPi / gamma.size());
}

}  // namespace entk::so3
