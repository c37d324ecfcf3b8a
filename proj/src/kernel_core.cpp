#include "entk/kernel_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "entk/errors.hpp"
#include "entk/quadrature.hpp"

namespace entk {

namespace {

constexpr double kSlack = 1e-12;
constexpr double kPi = std::numbers::pi;

std::string triple(double a, double b, double c)
{
    std::ostringstream os;
    os.precision(17);
    os << "(" << a << ", " << b << ", " << c << ")";
    return os.str();
}

// Panel edges for [lo, hi]: the end points plus center ± w·4^k, so panels
// are narrow where the integrand is steep and wide in the tails.
std::vector<double> breakpoints(double lo, double hi, double center, double w)
{
    std::vector<double> p{lo, hi};
    if (center > lo && center < hi) p.push_back(center);
    for (double d = w; d < 2.0 * (hi - lo); d *= 4.0)
        for (double x : {center - d, center + d})
            if (x > lo && x < hi) p.push_back(x);
    std::sort(p.begin(), p.end());
    return p;
}

// Applies the reference rule on [-1, 1] to every panel; f(node, weight).
template <class F>
void panel_rule(const quad::Rule& ref, const std::vector<double>& edges, F&& f)
{
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        double h = 0.5 * (edges[k + 1] - edges[k]), m = 0.5 * (edges[k + 1] + edges[k]);
        if (h <= 0.0) continue;
        for (std::size_t i = 0; i < ref.nodes.size(); ++i) f(m + h * ref.nodes[i], h * ref.weights[i]);
    }
}

}  // namespace

const char* nonlin_name(NonlinKind kind) { return kind == NonlinKind::relu ? "relu" : "erf"; }

NonlinKind parse_nonlin(const std::string& name)
{
    if (name == "relu") return NonlinKind::relu;
    if (name == "erf") return NonlinKind::erf;
    throw ConfigError("unknown nonlinearity '" + name + "' (expected relu or erf)");
}

double checked_cross(double k11, double k12, double k22)
{
    if (!(k11 >= -kSlack) || !(k22 >= -kSlack) || !std::isfinite(k12))
        throw InvalidKernelError("invalid kernel diagonal " + triple(k11, k12, k22));
    k11 = std::max(k11, 0.0);
    k22 = std::max(k22, 0.0);
    double bound = std::sqrt(k11 * k22);
    double slack = kSlack * std::max(1.0, bound);
    if (std::abs(k12) > bound + slack)
        throw InvalidKernelError("covariance not positive semidefinite " + triple(k11, k12, k22));
    return std::clamp(k12, -bound, bound);
}

NonlinValue nonlin_map(NonlinKind kind, double k11, double k12, double k22)
{
    k12 = checked_cross(k11, k12, k22);
    k11 = std::max(k11, 0.0);
    k22 = std::max(k22, 0.0);
    NonlinValue out;
    if (kind == NonlinKind::relu) {
        double norm = std::sqrt(k11 * k22);
        if (norm == 0.0) {
            // One argument is almost surely zero; the limit along k12 = 0 gives θ = π/2.
            out.k = 0.0;
            out.kdot = 0.25;
            return out;
        }
        double c = std::clamp(k12 / norm, -1.0, 1.0);
        double th = std::acos(c);
        out.k = norm / (2.0 * kPi) * (std::sin(th) + (kPi - th) * c);
        out.kdot = (kPi - th) / (2.0 * kPi);
        return out;
    }
    double a = 1.0 + 2.0 * k11, b = 1.0 + 2.0 * k22;
    double s = std::clamp(2.0 * k12 / std::sqrt(a * b), -1.0, 1.0);
    out.k = 2.0 / kPi * std::asin(s);
    out.kdot = 4.0 / kPi / std::sqrt(std::max(a * b - 4.0 * k12 * k12, 0.0));
    return out;
}

NonlinValue gauss_hermite_oracle(NonlinKind kind, double k11, double k12, double k22, int order)
{
    if (order < 20) throw DomainError("gauss_hermite_oracle: order must be at least 20");
    k12 = checked_cross(k11, k12, k22);
    k11 = std::max(k11, 0.0);
    k22 = std::max(k22, 0.0);

    // u = a z1, v = b z1 + c z2 with z ~ N(0, I).
    double a = std::sqrt(k11);
    double b = a > 0.0 ? k12 / a : 0.0;
    double c = std::sqrt(std::max(k22 - b * b, 0.0));
    if (a == 0.0) {
        // u ≡ 0: swap roles so the factorisation stays well defined.
        b = 0.0;
        c = std::sqrt(k22);
    }

    // Gaussian tails beyond |z| = 12 are below 1e-31.
    const double T = 12.0;
    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * kPi);
    auto phi = [&](double z) { return inv_sqrt2pi * std::exp(-0.5 * z * z); };
    const quad::Rule ref = quad::gauss_legendre(order);
    NonlinValue out;

    if (kind == NonlinKind::erf) {
        // Steep directions: erf(u) has width ~1/a in z1, E_z2[erf(v)] = erf(b z1/√(1+2c²)).
        double s1 = 1.0;
        if (a > 0.0) s1 = std::min(s1, 1.0 / (std::numbers::sqrt2 * a));
        if (b != 0.0) s1 = std::min(s1, std::sqrt(1.0 + 2.0 * c * c) / (std::numbers::sqrt2 * std::abs(b)));
        auto outer = breakpoints(-T, T, 0.0, 0.5 * s1);
        double sk = 0.0, sd = 0.0;
        panel_rule(ref, outer, [&](double z1, double w1) {
            double u = a * z1;
            double ik = 0.0, id = 0.0;
            if (c <= 1e-300) {
                double v = b * z1;
                ik = std::erf(v);
                id = std::exp(-v * v);
            } else {
                double s2 = std::min(1.0, 1.0 / (std::numbers::sqrt2 * c));
                auto inner = breakpoints(-T, T, -b * z1 / c, 0.5 * s2);
                panel_rule(ref, inner, [&](double z2, double w2) {
                    double v = b * z1 + c * z2;
                    w2 *= phi(z2);
                    ik += w2 * std::erf(v);
                    id += w2 * std::exp(-v * v);
                });
            }
            w1 *= phi(z1);
            sk += w1 * std::erf(u) * ik;
            sd += w1 * std::exp(-u * u) * id;
        });
        out.k = sk;
        // σ'(x) = (2/√π) e^{-x²}
        out.kdot = sd * (4.0 / kPi);
        return out;
    }

    // ReLU: integrate over the z1 > 0 half line (u > 0) and, inside, over the
    // half line where v > 0. The kinks sit on the integration limits.
    if (a == 0.0) {
        out.k = 0.0;
        out.kdot = 0.25;
        return out;
    }
    // For c ≪ |b| the inner integral changes on the scale c/|b| in z1; the
    // lower limit stops moving once it is clamped at -T.
    double s1 = b != 0.0 ? std::min(1.0, c / std::abs(b)) : 1.0;
    auto outer = breakpoints(0.0, T, 0.0, 0.5 * std::max(s1, 1e-12));
    if (b != 0.0 && c > 0.0 && T * c / std::abs(b) < T) outer.push_back(T * c / std::abs(b));
    std::sort(outer.begin(), outer.end());
    double sk = 0.0, sd = 0.0;
    panel_rule(ref, outer, [&](double z1, double w1) {
        double u = a * z1;
        double ik = 0.0, id = 0.0;
        if (c <= 1e-300) {
            double v = b * z1;
            if (v > 0.0) {
                ik = v;
                id = 1.0;
            }
        } else {
            double lo = std::max(-b * z1 / c, -T);
            if (lo < T) {
                panel_rule(ref, breakpoints(lo, T, lo, 1.0), [&](double z2, double w2) {
                    w2 *= phi(z2);
                    ik += w2 * std::max(b * z1 + c * z2, 0.0);
                    id += w2;
                });
            }
        }
        w1 *= phi(z1);
        sk += w1 * u * ik;
        sd += w1 * id;
    });
    out.k = sk;
    out.kdot = sd;
    return out;
}

ScalarKernel apply_nonlinearity(const ScalarKernel& s, NonlinKind kind)
{
    NonlinValue cross = nonlin_map(kind, s.k_xx, s.k_xy, s.k_yy);
    ScalarKernel out;
    out.k_xy = cross.k;
    out.theta = cross.kdot * s.theta;
    out.k_xx = nonlin_map(kind, s.k_xx, s.k_xx, s.k_xx).k;
    out.k_yy = nonlin_map(kind, s.k_yy, s.k_yy, s.k_yy).k;
    return out;
}

ScalarKernel fc_layer(const ScalarKernel& s)
{
    ScalarKernel out = s;
    out.theta = s.k_xy + s.theta;
    return out;
}

ScalarKernel flatten_input(std::span<const double> f, std::span<const double> g)
{
    if (f.size() != g.size()) throw ShapeError("flatten_input: input sizes differ");
    if (f.empty()) throw ShapeError("flatten_input: empty input");
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        sxy += f[i] * g[i];
        sxx += f[i] * f[i];
        syy += g[i] * g[i];
    }
    double n = static_cast<double>(f.size());
    return ScalarKernel{sxy / n, sxx / n, syy / n, 0.0};
}

ScalarKernel fan_in_sum(std::span<const ScalarKernel> branches)
{
    if (branches.empty()) throw DomainError("fan_in_sum: no branches");
    ScalarKernel out;
    for (const auto& b : branches) {
        out.k_xy += b.k_xy;
        out.k_xx += b.k_xx;
        out.k_yy += b.k_yy;
        out.theta += b.theta;
    }
    return out;
}

}  // namespace entk
