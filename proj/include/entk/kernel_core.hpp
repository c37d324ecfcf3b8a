#pragma once

#include <span>
#include <string>
#include <vector>

namespace entk {

enum class NonlinKind { relu, erf };

const char* nonlin_name(NonlinKind kind);
NonlinKind parse_nonlin(const std::string& name);

struct NonlinValue {
    double k = 0.0;
    double kdot = 0.0;
};

// Closed-form E[σ(u)σ(v)] and E[σ'(u)σ'(v)] for (u,v) ~ N(0, [[k11,k12],[k12,k22]]).
NonlinValue nonlin_map(NonlinKind kind, double k11, double k12, double k22);

// Quadrature estimate of the same expectations after Cholesky-factoring the
// covariance. A plain Gauss–Hermite tensor rule cannot resolve erf(u) for
// large variances or the ReLU kinks, so both integrals run over |z| <= 12 on
// Gauss–Legendre panels (order nodes each) that are split at the kinks and
// graded towards the steep regions.
NonlinValue gauss_hermite_oracle(NonlinKind kind, double k11, double k12, double k22, int order);

// Pair kernel reduced to scalars: NNGP cross value, both NNGP diagonals, NTK.
struct ScalarKernel {
    double k_xy = 0.0;
    double k_xx = 0.0;
    double k_yy = 0.0;
    double theta = 0.0;
};

ScalarKernel apply_nonlinearity(const ScalarKernel& s, NonlinKind kind);
ScalarKernel fc_layer(const ScalarKernel& s);
// Mean over every position and channel of f·f′.
ScalarKernel flatten_input(std::span<const double> f, std::span<const double> g);
ScalarKernel fan_in_sum(std::span<const ScalarKernel> branches);

// Validates and clamps a covariance triple; returns the clamped k12.
double checked_cross(double k11, double k12, double k22);

}  // namespace entk
