#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entk/pipeline.hpp"
#include "entk/planar.hpp"

namespace entk::finite {

// Finite-width roto-translation GCNN in the NTK parametrisation: standard
// normal weights, every linear layer scaled by 1/sqrt(fan-in), no biases.
// Lifting weights are [n_out][n_in][|S|], group convolutions
// [n_out][n_in][n_rot][|S|], dense layers [n_out][n_in]. The last linear
// layer has a single output channel.
struct FiniteLayer {
    LayerType type = LayerType::dense;
    int n_in = 0;
    int n_out = 0;
    planar::FilterSupport2D support;
    NonlinKind nonlin = NonlinKind::relu;
    std::vector<double> w;
    std::vector<int> gather;  // elements × fan-in source indices (-1 = padding)
    int fan_in = 0;
};

struct FiniteParamSet {
    planar::GridGeom geom;
    int in_channels = 0;
    int width = 0;
    std::uint64_t seed = 0;
    std::vector<FiniteLayer> layers;

    std::size_t parameter_count() const;
};

FiniteParamSet init_params(const ArchitectureSpec& arch, int height, int width_px, int in_channels, int width, std::uint64_t seed);

struct ForwardCache {
    std::vector<std::vector<double>> inputs;   // activation entering each layer
    std::vector<std::vector<double>> patches;  // gathered patches of the convolution layers
    double output = 0.0;
};

double forward(const FiniteParamSet& p, const planar::Image& f, ForwardCache* cache = nullptr);

// ∂output/∂w per layer (empty for layers without weights).
using Gradients = std::vector<std::vector<double>>;
Gradients grad_params(const FiniteParamSet& p, const ForwardCache& cache);

double empirical_ntk(const Gradients& a, const Gradients& b);
std::vector<double> empirical_ntk_per_layer(const Gradients& a, const Gradients& b);

// Features φ with E_w[N(f) N(f')] = φ(f)·φ(f') over the last linear layer's weights.
std::vector<double> nngp_features(const FiniteParamSet& p, const ForwardCache& cache);

}  // namespace entk::finite
