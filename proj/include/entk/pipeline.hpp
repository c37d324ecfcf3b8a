#pragma once

#include <string>
#include <variant>
#include <vector>

#include "entk/kernel_core.hpp"
#include "entk/planar.hpp"
#include "entk/so3.hpp"

namespace entk {

enum class LayerType { lifting, gconv, nonlin, gpool, conv_cnn, sumpool_cnn, dense, fan_in_sum, flatten };

const char* layer_name(LayerType t);
LayerType parse_layer(const std::string& name);

struct Layer {
    LayerType type = LayerType::dense;
    int support = 1;  // odd square size for planar filters, 0 = global
    NonlinKind nonlin = NonlinKind::relu;
    int branches = 0;  // fan-in width

    static Layer lifting(int support) { return {LayerType::lifting, support}; }
    static Layer gconv(int support) { return {LayerType::gconv, support}; }
    static Layer conv(int support) { return {LayerType::conv_cnn, support}; }
    static Layer act(NonlinKind k) { return {LayerType::nonlin, 1, k}; }
    static Layer gpool() { return {LayerType::gpool}; }
    static Layer sumpool() { return {LayerType::sumpool_cnn}; }
    static Layer dense() { return {LayerType::dense}; }
    static Layer flatten() { return {LayerType::flatten}; }
    static Layer fan_in(int n) { return {LayerType::fan_in_sum, 1, NonlinKind::relu, n}; }
};

struct GroupParams {
    int n_rot = 4;
    planar::Padding padding = planar::Padding::circular;
    int bandlimit = 0;  // > 0 selects the SO(3) backend
    so3::GridKind grid = so3::GridKind::gauss_legendre;
    int oversample = 2;
};

struct ArchitectureSpec {
    std::vector<Layer> layers;
    GroupParams group;

    std::string describe() const;
};

enum class Backend { planar_gcnn, planar_cnn, so3_gcnn, mlp };

// Checks layer ordering and domain compatibility; returns the backend.
Backend validate(const ArchitectureSpec& arch);

struct SphericalInput {
    so3::S2Coeffs coeffs;        // used by the SO(3) backend
    std::vector<double> samples;  // raw grid samples, used by Flatten
};

using Branch = std::variant<planar::Image, SphericalInput>;

// One branch per independent sub-network; FanInSum pairs branch i with branch i.
struct PipelineInput {
    std::vector<Branch> branches;

    PipelineInput() = default;
    explicit PipelineInput(planar::Image img) { branches.emplace_back(std::move(img)); }
};

using KernelState = std::variant<ScalarKernel, planar::PlanarKernel, so3::GridKernel, so3::FourierKernel>;

KernelState apply_nonlinearity(const KernelState& s, NonlinKind kind);

// Layers up to the pooling / flatten layer (or all layers when there is none).
KernelState run_spatial(const ArchitectureSpec& arch, const Branch& a, const Branch& b);
// Full pipeline; scalar results get their diagonals from (a,a) and (b,b) runs.
KernelState run_pipeline(const ArchitectureSpec& arch, const PipelineInput& a, const PipelineInput& b);

// Evaluates pair kernels over a fixed input list, caching per-input self runs.
class KernelEvaluator {
public:
    KernelEvaluator(ArchitectureSpec arch, std::vector<PipelineInput> inputs);
    std::size_t size() const { return inputs_.size(); }
    ScalarKernel pair(std::size_t i, std::size_t j) const;
    const ArchitectureSpec& arch() const { return arch_; }

private:
    ArchitectureSpec arch_;
    std::vector<PipelineInput> inputs_;
    std::size_t pool_pos_ = 0;
    std::vector<std::vector<ScalarKernel>> self_;  // pooled self run per input and branch
};

}  // namespace entk
