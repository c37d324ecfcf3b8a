#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "entk/kernel_core.hpp"

// Harmonic analysis on S² and SO(3) and the Fourier-domain kernel recursions.
//
// Conventions (fixed so that Y(Rx) = Σ_n conj(D_mn(R)) Y_n(x) holds):
//   R(α,β,γ) = Rz(α) Ry(β) Rz(γ)          (ZYZ, active)
//   D^l_mn(α,β,γ) = e^{-imα} d^l_mn(β) e^{-inγ}
//   Y^l_m(θ,φ) = sqrt((2l+1)/4π) e^{imφ} d^l_m0(θ)   (Condon–Shortley phase included)
//   f̂^l_m = ∫ f conj(Y^l_m),   f̂^l_mn = ∫ f D^l_mn
//   f(R) = Σ (2l+1)/(8π²) f̂^l_mn conj(D^l_mn(R))
// Kernels on S²×S² expand as K(x,x') = Σ K̂_{lm,l'm'} Y^l_m(x) Y^l'_m'(x').
namespace entk::so3 {

using cplx = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

constexpr double kVolume = 8.0 * 3.14159265358979323846 * 3.14159265358979323846;

enum class GridKind { gauss_legendre, driscoll_healy };
const char* grid_kind_name(GridKind k);
GridKind parse_grid_kind(const std::string& name);

// Coefficient layouts.
inline int s2_size(int L) { return L * L; }
inline int s2_index(int l, int m) { return l * l + m + l; }
inline int so3_offset(int l) { return l * (4 * l * l - 1) / 3; }
inline int so3_size(int L) { return so3_offset(L); }
inline int so3_index(int l, int m, int n) { return so3_offset(l) + (m + l) * (2 * l + 1) + (n + l); }

double wigner_d(int l, int m, int n, double beta);
cplx wigner_D(int l, int m, int n, double alpha, double beta, double gamma);
cplx sph_harm(int l, int m, double theta, double phi);

// d^l_mn(β_j) for all l < L at a list of angles, in so3_index layout.
class WignerTable {
public:
    WignerTable(int L, std::vector<double> betas);
    int bandlimit() const { return L_; }
    std::size_t angles() const { return betas_.size(); }
    double operator()(std::size_t j, int l, int m, int n) const
    {
        return values_[j * static_cast<std::size_t>(so3_size(L_)) + so3_index(l, m, n)];
    }
    const double* row(std::size_t j) const { return values_.data() + j * static_cast<std::size_t>(so3_size(L_)); }

private:
    int L_;
    std::vector<double> betas_;
    std::vector<double> values_;
};

using Rotation = std::array<double, 9>;  // row-major 3×3
struct Euler {
    double alpha = 0.0, beta = 0.0, gamma = 0.0;
};
Rotation rotation_from_euler(const Euler& e);
Euler euler_from_rotation(const Rotation& r);
Rotation compose(const Rotation& a, const Rotation& b);
std::array<double, 3> apply(const Rotation& r, const std::array<double, 3>& x);
std::array<double, 3> unit_vector(double theta, double phi);
void angles_of(const std::array<double, 3>& x, double& theta, double& phi);

struct S2Grid {
    int L = 0;  // grid band (integrates products of bands < L exactly)
    GridKind kind = GridKind::gauss_legendre;
    std::vector<double> theta, theta_weight, phi;

    static S2Grid make(int L, GridKind kind);
    int n_theta() const { return static_cast<int>(theta.size()); }
    int n_phi() const { return static_cast<int>(phi.size()); }
    std::size_t points() const { return theta.size() * phi.size(); }
    // Point (j, k) sits at index j * n_phi + k.
    double weight(int j) const;
};

struct SO3Grid {
    int L = 0;
    GridKind kind = GridKind::gauss_legendre;
    std::vector<double> alpha, beta, beta_weight, gamma;

    static SO3Grid make(int L, GridKind kind);
    std::size_t points() const { return alpha.size() * beta.size() * gamma.size(); }
    // Point (a, j, c) sits at index (a * n_beta + j) * n_gamma + c.
    Euler angles(std::size_t idx) const;
    double weight(std::size_t idx) const;
};

// Spherical harmonic transforms of one real channel; coefficient count s2_size(L), L ≤ grid.L.
std::vector<cplx> sht_forward(const S2Grid& grid, std::span<const double> values, int L);
std::vector<cplx> sht_inverse(const S2Grid& grid, std::span<const cplx> coeffs, int L);
// Coefficients of x ↦ f(R⁻¹x) given those of f.
std::vector<cplx> rotate_s2_coeffs(std::span<const cplx> coeffs, int L, const Euler& r);

// Dense transform matrices between a band-L coefficient space and an SO(3) grid.
struct SO3Basis {
    int L = 0;
    SO3Grid grid;
    MatrixXc forward;  // points × coeffs: w_R D_b(R)
    MatrixXc inverse;  // points × coeffs: (2l+1)/(8π²) conj(D_b(R))
};
std::shared_ptr<const SO3Basis> so3_basis(int L, int grid_L, GridKind kind);

VectorXc so3_forward(const SO3Basis& b, const VectorXc& values);
VectorXc so3_inverse(const SO3Basis& b, const VectorXc& coeffs);
MatrixXc so3_double_forward(const SO3Basis& b, const MatrixXc& k);
MatrixXc so3_double_inverse(const SO3Basis& b, const MatrixXc& khat);

// Pair kernel on S²×S² in coefficient form (before lifting).
struct S2Kernel {
    int L = 0;
    MatrixXc cross;  // s2_size × s2_size
    MatrixXc theta;
    double diag_x_mean = 0.0;  // (1/4π) ∫ K(f,f)(x,x) dx
    double diag_y_mean = 0.0;
};

// Multichannel coefficients: channels × s2_size(L), row-major.
struct S2Coeffs {
    int L = 0;
    int channels = 0;
    std::vector<cplx> data;
    const cplx* channel(int c) const { return data.data() + static_cast<std::size_t>(c) * s2_size(L); }
};
S2Coeffs truncate(const S2Coeffs& c, int L_new);

S2Kernel input_kernel_s2(const S2Coeffs& f, const S2Coeffs& g);

struct FourierKernel {
    int L = 0;
    MatrixXc cross;  // so3_size × so3_size
    MatrixXc theta;
    VectorXc diag_x;  // single-argument coefficients of K_{R,R}(f,f)
    VectorXc diag_y;
    bool sparse = false;           // only δ_{ll'} δ_{n,-n'} entries are nonzero
    bool right_invariant = false;  // K_{RS,R'S} = K_{R,R'}
};

// Pair kernel sampled on SO(3) grid pairs.
struct GridKernel {
    int L = 0;  // coefficient band it came from
    SO3Grid grid;
    Eigen::MatrixXd cross, theta;
    Eigen::VectorXd diag_x, diag_y;
};

FourierKernel lifting_so3_fourier(const S2Kernel& in);
FourierKernel gconv_so3_fourier(const FourierKernel& in);
ScalarKernel gpool_so3(const FourierKernel& in);
FourierKernel bandlimit_truncate(const FourierKernel& in, int L_new);

enum class NonlinPath { automatic, dense, right_invariant };
struct NonlinOptions {
    int oversample = 2;
    GridKind grid = GridKind::gauss_legendre;
    NonlinPath path = NonlinPath::automatic;
};
FourierKernel nonlinearity_so3(const FourierKernel& in, NonlinKind kind, const NonlinOptions& opt = {});

GridKernel to_grid(const FourierKernel& k, int grid_L, GridKind kind);
FourierKernel from_grid(const GridKernel& g, int L);
GridKernel apply_nonlinearity(const GridKernel& g, NonlinKind kind);

// Relative tolerance for discarding imaginary parts.
constexpr double kRealityTol = 1e-10;

namespace detail {
// sign = +1 is the lemma; other values replace the (−1)^{n−p} factor by 1 (fault injection for self tests).
FourierKernel gconv_so3_fourier_signed(const FourierKernel& in, int sign);
}

}  // namespace entk::so3
