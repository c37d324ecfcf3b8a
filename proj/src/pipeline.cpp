#include "entk/pipeline.hpp"

#include <sstream>

#include "entk/errors.hpp"
#include "entk/parallel.hpp"

namespace entk {

namespace {

bool is_pool(LayerType t)
{
    return t == LayerType::gpool || t == LayerType::sumpool_cnn || t == LayerType::flatten;
}

std::size_t pool_position(const ArchitectureSpec& arch)
{
    for (std::size_t i = 0; i < arch.layers.size(); ++i)
        if (is_pool(arch.layers[i].type)) return i;
    return arch.layers.size();
}

planar::FilterSupport2D make_support(int size, const planar::GridGeom& geom)
{
    if (size == 0) return planar::FilterSupport2D::whole_grid(geom);
    return planar::FilterSupport2D::centered_square(size);
}

const planar::Image& image_of(const Branch& b)
{
    if (auto p = std::get_if<planar::Image>(&b)) return *p;
    throw DomainError("planar architecture needs image inputs");
}

const SphericalInput& sphere_of(const Branch& b)
{
    if (auto p = std::get_if<SphericalInput>(&b)) return *p;
    throw DomainError("SO(3) architecture needs spherical inputs");
}

std::span<const double> flat_values(const Branch& b)
{
    if (auto p = std::get_if<planar::Image>(&b)) return p->data;
    return std::get<SphericalInput>(b).samples;
}

KernelState run_planar(const ArchitectureSpec& arch, Backend be, std::size_t stop, const Branch& a, const Branch& b)
{
    const planar::Image& fa = image_of(a);
    const planar::Image& fb = image_of(b);
    planar::GridGeom geom{fa.height, fa.width, arch.group.padding, be == Backend::planar_gcnn ? arch.group.n_rot : 1};
    planar::PlanarKernel k = planar::input_kernel_planar(fa, fb, geom);
    for (std::size_t i = 0; i < stop; ++i) {
        const Layer& L = arch.layers[i];
        switch (L.type) {
        case LayerType::lifting: k = planar::lifting_planar(k, make_support(L.support, geom)); break;
        case LayerType::gconv: k = planar::gconv_planar(k, make_support(L.support, geom)); break;
        case LayerType::conv_cnn: k = planar::cnn_conv_kernel(k, make_support(L.support, geom)); break;
        case LayerType::nonlin: k = planar::apply_nonlinearity(k, L.nonlin); break;
        case LayerType::gpool: return planar::gpool_planar(k);
        case LayerType::sumpool_cnn: return planar::sumpool_cnn(k);
        default: throw DomainError(std::string("layer not valid in the planar domain: ") + layer_name(L.type));
        }
    }
    return k;
}

KernelState run_so3(const ArchitectureSpec& arch, std::size_t stop, const Branch& a, const Branch& b)
{
    const int L = arch.group.bandlimit;
    const SphericalInput& sa = sphere_of(a);
    const SphericalInput& sb = sphere_of(b);
    if (sa.coeffs.L < L || sb.coeffs.L < L) throw DomainError("spherical input bandlimit below the architecture bandlimit");
    so3::S2Kernel in = so3::input_kernel_s2(so3::truncate(sa.coeffs, L), so3::truncate(sb.coeffs, L));
    so3::NonlinOptions opt;
    opt.oversample = arch.group.oversample;
    opt.grid = arch.group.grid;
    so3::FourierKernel k;
    bool lifted = false;
    for (std::size_t i = 0; i < stop; ++i) {
        const Layer& ly = arch.layers[i];
        switch (ly.type) {
        case LayerType::lifting:
            k = so3::lifting_so3_fourier(in);
            lifted = true;
            break;
        case LayerType::gconv: k = so3::gconv_so3_fourier(k); break;
        case LayerType::nonlin: k = so3::nonlinearity_so3(k, ly.nonlin, opt); break;
        case LayerType::gpool: return so3::gpool_so3(k);
        default: throw DomainError(std::string("layer not valid in the SO(3) domain: ") + layer_name(ly.type));
        }
    }
    if (!lifted) throw DomainError("SO(3) architecture has no lifting layer");
    return k;
}

std::vector<ScalarKernel> head_per_branch(const ArchitectureSpec& arch, std::size_t from, std::vector<ScalarKernel> states)
{
    for (std::size_t i = from; i < arch.layers.size(); ++i) {
        const Layer& L = arch.layers[i];
        switch (L.type) {
        case LayerType::dense:
            for (auto& s : states) s = fc_layer(s);
            break;
        case LayerType::nonlin:
            for (auto& s : states) s = apply_nonlinearity(s, L.nonlin);
            break;
        case LayerType::fan_in_sum: states = {fan_in_sum(states)}; break;
        default: throw DomainError(std::string("layer not valid after pooling: ") + layer_name(L.type));
        }
    }
    if (states.size() != 1) throw DomainError("multiple branches reach the output without a fan-in sum");
    return states;
}

int fan_in_width(const ArchitectureSpec& arch)
{
    for (const auto& L : arch.layers)
        if (L.type == LayerType::fan_in_sum) return L.branches;
    return 0;
}

void check_branches(const ArchitectureSpec& arch, const PipelineInput& x)
{
    int fan = fan_in_width(arch);
    if (x.branches.empty()) throw ShapeError("pipeline input has no branches");
    if (fan == 0 && x.branches.size() != 1) throw ShapeError("input has several branches but the architecture has no fan-in sum");
    if (fan > 0 && x.branches.size() > static_cast<std::size_t>(fan)) throw ShapeError("input has more branches than the fan-in width");
}

}  // namespace

const char* layer_name(LayerType t)
{
    switch (t) {
    case LayerType::lifting: return "lifting";
    case LayerType::gconv: return "gconv";
    case LayerType::nonlin: return "nonlin";
    case LayerType::gpool: return "gpool";
    case LayerType::conv_cnn: return "conv";
    case LayerType::sumpool_cnn: return "sumpool";
    case LayerType::dense: return "dense";
    case LayerType::fan_in_sum: return "fan_in_sum";
    case LayerType::flatten: return "flatten";
    }
    return "?";
}

LayerType parse_layer(const std::string& name)
{
    for (LayerType t : {LayerType::lifting, LayerType::gconv, LayerType::nonlin, LayerType::gpool, LayerType::conv_cnn,
                        LayerType::sumpool_cnn, LayerType::dense, LayerType::fan_in_sum, LayerType::flatten})
        if (name == layer_name(t)) return t;
    throw ConfigError("unknown layer type '" + name + "'");
}

std::string ArchitectureSpec::describe() const
{
    std::ostringstream os;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& L = layers[i];
        if (i) os << ", ";
        os << layer_name(L.type);
        if (L.type == LayerType::lifting || L.type == LayerType::gconv || L.type == LayerType::conv_cnn)
            os << "(" << (L.support == 0 ? std::string("global") : std::to_string(L.support)) << ")";
        if (L.type == LayerType::nonlin) os << "(" << nonlin_name(L.nonlin) << ")";
        if (L.type == LayerType::fan_in_sum) os << "(" << L.branches << ")";
    }
    return os.str();
}

Backend validate(const ArchitectureSpec& arch)
{
    if (arch.layers.empty()) throw DomainError("architecture has no layers");
    Backend be;
    switch (arch.layers.front().type) {
    case LayerType::lifting: be = arch.group.bandlimit > 0 ? Backend::so3_gcnn : Backend::planar_gcnn; break;
    case LayerType::conv_cnn: be = Backend::planar_cnn; break;
    case LayerType::flatten: be = Backend::mlp; break;
    default: throw DomainError("architecture must start with lifting, conv or flatten");
    }
    if (be == Backend::planar_gcnn && arch.group.n_rot != 1 && arch.group.n_rot != 2 && arch.group.n_rot != 4)
        throw DomainError("n_rot must be 1, 2 or 4");
    if (be == Backend::so3_gcnn && arch.group.oversample < 1) throw DomainError("oversampling factor must be at least 1");

    enum class Dom { group, translation, scalar } dom = be == Backend::planar_cnn ? Dom::translation : Dom::group;
    if (be == Backend::mlp) dom = Dom::scalar;
    int fan_ins = 0;
    for (std::size_t i = 1; i < arch.layers.size(); ++i) {
        const Layer& L = arch.layers[i];
        auto bad = [&] {
            throw DomainError("layer " + std::to_string(i) + " (" + layer_name(L.type) + ") does not fit the preceding domain");
        };
        switch (L.type) {
        case LayerType::nonlin: break;
        case LayerType::gconv:
            if (dom != Dom::group || be == Backend::planar_cnn) bad();
            break;
        case LayerType::gpool:
            if (dom != Dom::group) bad();
            dom = Dom::scalar;
            break;
        case LayerType::conv_cnn:
            if (dom != Dom::translation) bad();
            break;
        case LayerType::sumpool_cnn:
            if (dom != Dom::translation) bad();
            dom = Dom::scalar;
            break;
        case LayerType::dense:
            if (dom != Dom::scalar) bad();
            break;
        case LayerType::fan_in_sum:
            if (dom != Dom::scalar || L.branches < 1 || ++fan_ins > 1) bad();
            break;
        default: bad();
        }
    }
    for (const auto& L : arch.layers) {
        bool filter = L.type == LayerType::lifting || L.type == LayerType::gconv || L.type == LayerType::conv_cnn;
        if (!filter) continue;
        if (be == Backend::so3_gcnn && L.support != 0) throw DomainError("SO(3) layers use global filters only");
        if (L.support < 0 || (L.support > 0 && L.support % 2 == 0)) throw DomainError("filter size must be odd or 0 (global)");
    }
    return be;
}

KernelState apply_nonlinearity(const KernelState& s, NonlinKind kind)
{
    return std::visit(
        [&](const auto& v) -> KernelState {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ScalarKernel>) return entk::apply_nonlinearity(v, kind);
            else if constexpr (std::is_same_v<T, planar::PlanarKernel>) return planar::apply_nonlinearity(v, kind);
            else if constexpr (std::is_same_v<T, so3::GridKernel>) return so3::apply_nonlinearity(v, kind);
            else throw DomainError("nonlinearity needs a pointwise domain; inverse-transform Fourier kernels first");
        },
        s);
}

KernelState run_spatial(const ArchitectureSpec& arch, const Branch& a, const Branch& b)
{
    Backend be = validate(arch);
    std::size_t stop = std::min(pool_position(arch) + 1, arch.layers.size());
    switch (be) {
    case Backend::mlp: return flatten_input(flat_values(a), flat_values(b));
    case Backend::so3_gcnn: return run_so3(arch, stop, a, b);
    default: return run_planar(arch, be, stop, a, b);
    }
}

KernelState run_pipeline(const ArchitectureSpec& arch, const PipelineInput& a, const PipelineInput& b)
{
    validate(arch);
    check_branches(arch, a);
    check_branches(arch, b);
    std::size_t pos = pool_position(arch);
    if (pos == arch.layers.size()) {
        if (a.branches.size() != 1 || b.branches.size() != 1) throw ShapeError("unpooled pipelines take single-branch inputs");
        return run_spatial(arch, a.branches[0], b.branches[0]);
    }
    std::size_t nb = std::max(a.branches.size(), b.branches.size());
    std::vector<ScalarKernel> states(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        bool ha = i < a.branches.size(), hb = i < b.branches.size();
        ScalarKernel s;
        if (ha && hb) s = std::get<ScalarKernel>(run_spatial(arch, a.branches[i], b.branches[i]));
        s.k_xx = ha ? std::get<ScalarKernel>(run_spatial(arch, a.branches[i], a.branches[i])).k_xy : 0.0;
        s.k_yy = hb ? std::get<ScalarKernel>(run_spatial(arch, b.branches[i], b.branches[i])).k_xy : 0.0;
        states[i] = s;
    }
    return head_per_branch(arch, pos + 1, std::move(states)).front();
}

KernelEvaluator::KernelEvaluator(ArchitectureSpec arch, std::vector<PipelineInput> inputs)
    : arch_(std::move(arch)), inputs_(std::move(inputs))
{
    validate(arch_);
    pool_pos_ = pool_position(arch_);
    if (pool_pos_ == arch_.layers.size()) throw DomainError("KernelEvaluator needs an architecture with a pooling layer");
    for (const auto& x : inputs_) check_branches(arch_, x);
    self_.resize(inputs_.size());
    parallel_for(inputs_.size(), [&](std::size_t i) {
        const auto& br = inputs_[i].branches;
        std::vector<ScalarKernel> v(br.size());
        for (std::size_t b = 0; b < br.size(); ++b) v[b] = std::get<ScalarKernel>(run_spatial(arch_, br[b], br[b]));
        self_[i] = std::move(v);
    });
}

ScalarKernel KernelEvaluator::pair(std::size_t i, std::size_t j) const
{
    const auto& A = inputs_.at(i).branches;
    const auto& B = inputs_.at(j).branches;
    std::size_t nb = std::max(A.size(), B.size());
    std::vector<ScalarKernel> states(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        bool ha = b < A.size(), hb = b < B.size();
        ScalarKernel s;
        if (ha && hb) {
            s = i == j ? self_[i][b] : std::get<ScalarKernel>(run_spatial(arch_, A[b], B[b]));
        }
        s.k_xx = ha ? self_[i][b].k_xy : 0.0;
        s.k_yy = hb ? self_[j][b].k_xy : 0.0;
        states[b] = s;
    }
    return head_per_branch(arch_, pool_pos_ + 1, std::move(states)).front();
}

}  // namespace entk
