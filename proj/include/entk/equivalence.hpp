#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "entk/kernel_core.hpp"
#include "entk/planar.hpp"

namespace entk {

// C_n acting by grid rotations about the centre, or C_n ⋉ Z_H×Z_W acting on
// the torus. Elements are enumerated in a fixed order starting at the identity.
class FiniteGroupSpec {
public:
    enum class Kind { rotations, roto_translations };

    static FiniteGroupSpec rotations(int height, int width, int n_rot);
    static FiniteGroupSpec roto_translations(int height, int width, int n_rot);

    Kind kind() const { return kind_; }
    int order() const;
    planar::Image act(int g, const planar::Image& f) const;
    // Index of the element acting as act(a, act(b, ·)).
    int compose(int a, int b) const;

private:
    Kind kind_ = Kind::rotations;
    int h_ = 0, w_ = 0, n_rot_ = 1;
    std::shared_ptr<const planar::RotoTranslationGroup> grp_;
};

std::vector<planar::Image> orbit(const planar::Image& f, const FiniteGroupSpec& group);

using PairKernel = std::function<ScalarKernel(const planar::Image&, const planar::Image&)>;

// Mean of the NNGP and NTK values over the orbit of the second argument; the
// diagonals are those of the untransformed pair.
PairKernel averaged_kernel(PairKernel base, FiniteGroupSpec group);

struct VerificationReport {
    std::string theorem;
    std::string config;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    bool conforming = true;  // hypotheses of the identity hold for this config
    bool pass = false;
};

struct Thm6Config {
    int height = 4;
    int width = 4;
    int depth = 3;
    int support = 3;
    NonlinKind nonlin = NonlinKind::relu;
    planar::Padding padding = planar::Padding::circular;
    int channels = 2;
    int trials = 20;
    std::uint64_t seed = 1;
    double tol = 1e-10;
};

// Averaged CNN kernel against the roto-translation GCNN kernel.
VerificationReport verify_thm6(const Thm6Config& cfg);

struct Thm5Config {
    int height = 3;
    int width = 3;
    int depth = 3;
    int gconv_support = 0;  // 0 = global
    NonlinKind nonlin = NonlinKind::relu;
    int channels = 2;
    int trials = 5;
    std::uint64_t seed = 2;
    double tol = 1e-10;
};

// Fully connected kernel averaged over C_4 ⋉ Z_H×Z_W against the GCNN with global filters.
VerificationReport verify_thm5(const Thm5Config& cfg);

struct Thm4Config {
    int height = 4;
    int width = 4;
    int depth = 2;
    int support = 3;
    NonlinKind nonlin = NonlinKind::relu;
    int channels = 1;
    int n_train = 4;
    int n_outputs = 2;
    int n_noise = 5;  // off-manifold noise inputs
    std::vector<double> times;  // empty: 8 log-spaced times in [1e-2, 1e3]
    double eta = 1.0;
    std::uint64_t seed = 3;
    double tol = 1e-8;
};

struct Thm4Result {
    VerificationReport report;
    std::vector<double> times;  // last entry is +inf
    std::vector<double> gaps;
};

// Orbit-augmented CNN-kernel predictor against the GCNN-kernel predictor on
// the original set, both under mean squared loss gradient flow.
Thm4Result verify_thm4(const Thm4Config& cfg);

}  // namespace entk
