#pragma once

#include <vector>

namespace entk::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// ∫ f(x) e^{-x²} dx over ℝ (physicists' weight).
Rule gauss_hermite(int n);
// ∫ f(x) dx over [-1, 1].
Rule gauss_legendre(int n);
// Gauss–Legendre mapped to [a, b].
Rule gauss_legendre(int n, double a, double b);

}  // namespace entk::quad
