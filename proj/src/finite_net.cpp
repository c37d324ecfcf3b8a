#include "entk/finite_net.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "entk/errors.hpp"
#include "entk/parallel.hpp"
#include "entk/simd.hpp"

namespace entk::finite {

using planar::GridGeom;
using planar::Offset;

namespace {

int source_pixel(const GridGeom& g, int t, Offset o)
{
    int y = t / g.width + o.dy, x = t % g.width + o.dx;
    if (g.padding == planar::Padding::circular) {
        y = ((y % g.height) + g.height) % g.height;
        x = ((x % g.width) + g.width) % g.width;
    } else if (y < 0 || y >= g.height || x < 0 || x >= g.width) {
        return -1;
    }
    return y * g.width + x;
}

void build_gather(FiniteLayer& L, const GridGeom& g)
{
    const int P = g.pixels(), N = g.n_rot * P, S = L.support.size();
    const int nrt = L.type == LayerType::gconv ? g.n_rot : 1;
    L.fan_in = L.n_in * nrt * S;
    L.gather.assign(static_cast<std::size_t>(N) * L.fan_in, -1);
    for (int e = 0; e < N; ++e) {
        int r = e / P, t = e % P;
        for (int c = 0; c < L.n_in; ++c)
            for (int rt = 0; rt < nrt; ++rt)
                for (int s = 0; s < S; ++s) {
                    int px = source_pixel(g, t, planar::rotate_offset(L.support.offsets[s], r * (4 / g.n_rot)));
                    int k = (c * nrt + rt) * S + s;
                    int src = -1;
                    if (px >= 0) {
                        int row = L.type == LayerType::gconv ? ((r + rt) % g.n_rot) * P + px : px;
                        src = row * L.n_in + c;
                    }
                    L.gather[static_cast<std::size_t>(e) * L.fan_in + k] = src;
                }
    }
}

double act(NonlinKind k, double z)
{
    return k == NonlinKind::relu ? (z > 0.0 ? z : 0.0) : std::erf(z);
}

double act_deriv(NonlinKind k, double z)
{
    if (k == NonlinKind::relu) return z > 0.0 ? 1.0 : 0.0;
    return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-z * z);
}

bool is_linear(LayerType t) { return t == LayerType::lifting || t == LayerType::gconv || t == LayerType::dense; }

}  // namespace

std::size_t FiniteParamSet::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& L : layers) n += L.w.size();
    return n;
}

FiniteParamSet init_params(const ArchitectureSpec& arch, int height, int width_px, int in_channels, int width, std::uint64_t seed)
{
    if (width < 1) throw ConfigError("finite network width must be positive");
    if (in_channels < 1) throw ShapeError("input needs at least one channel");
    if (arch.layers.empty() || arch.layers.front().type != LayerType::lifting)
        throw DomainError("finite network must start with a lifting layer");
    FiniteParamSet p;
    p.geom = GridGeom{height, width_px, arch.group.padding, arch.group.n_rot};
    p.geom.validate();
    p.in_channels = in_channels;
    p.width = width;
    p.seed = seed;
    int last_linear = -1;
    for (std::size_t i = 0; i < arch.layers.size(); ++i)
        if (is_linear(arch.layers[i].type)) last_linear = static_cast<int>(i);

    enum { grp, vec } dom = grp;
    int channels = in_channels;
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const Layer& src = arch.layers[i];
        FiniteLayer L;
        L.type = src.type;
        L.nonlin = src.nonlin;
        L.n_in = channels;
        L.n_out = is_linear(src.type) ? (static_cast<int>(i) == last_linear ? 1 : width) : channels;
        switch (src.type) {
        case LayerType::lifting:
        case LayerType::gconv:
            if (dom != grp || (src.type == LayerType::lifting && i != 0) || (src.type == LayerType::gconv && i == 0))
                throw DomainError("finite network: convolution layer out of place");
            L.support = src.support == 0 ? planar::FilterSupport2D::whole_grid(p.geom) : planar::FilterSupport2D::centered_square(src.support);
            L.support.validate(p.geom);
            build_gather(L, p.geom);
            break;
        case LayerType::nonlin: break;
        case LayerType::gpool:
            if (dom != grp) throw DomainError("finite network: pooling twice");
            dom = vec;
            break;
        case LayerType::dense:
            if (dom != vec) throw DomainError("finite network: dense layer before pooling");
            L.fan_in = channels;
            break;
        default: throw DomainError(std::string("finite network: unsupported layer ") + layer_name(src.type));
        }
        if (is_linear(src.type)) {
            std::mt19937_64 rng(mix_seed(seed, i));
            std::normal_distribution<double> nd;
            L.w.resize(static_cast<std::size_t>(L.n_out) * L.fan_in);
            for (auto& v : L.w) v = nd(rng);
        }
        channels = L.n_out;
        p.layers.push_back(std::move(L));
    }
    if (dom != vec || channels != 1) throw DomainError("finite network must end in a single pooled output");
    for (std::size_t i = static_cast<std::size_t>(last_linear) + 1; i < p.layers.size(); ++i)
        if (p.layers[i].type == LayerType::nonlin) throw DomainError("finite network: nonlinearity after the last linear layer");
    return p;
}

double forward(const FiniteParamSet& p, const planar::Image& f, ForwardCache* cache)
{
    if (f.height != p.geom.height || f.width != p.geom.width || f.channels != p.in_channels)
        throw ShapeError("forward: input does not match the network geometry");
    const int P = p.geom.pixels(), N = p.geom.n_rot * P;
    // pixel-major input
    std::vector<double> x(static_cast<std::size_t>(P) * f.channels);
    for (int c = 0; c < f.channels; ++c)
        for (int t = 0; t < P; ++t) x[static_cast<std::size_t>(t) * f.channels + c] = f.data[static_cast<std::size_t>(c) * P + t];
    if (cache) {
        cache->inputs.assign(p.layers.size(), {});
        cache->patches.assign(p.layers.size(), {});
    }
    int rows = P;
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        const FiniteLayer& L = p.layers[li];
        if (cache) cache->inputs[li] = x;
        std::vector<double> y;
        switch (L.type) {
        case LayerType::lifting:
        case LayerType::gconv: {
            const int K = L.fan_in;
            std::vector<double> patch(static_cast<std::size_t>(N) * K);
            for (std::size_t i = 0; i < patch.size(); ++i) patch[i] = L.gather[i] >= 0 ? x[static_cast<std::size_t>(L.gather[i])] : 0.0;
            std::vector<double> wt(static_cast<std::size_t>(K) * L.n_out);
            double sc = 1.0 / std::sqrt(static_cast<double>(K));
            for (int o = 0; o < L.n_out; ++o)
                for (int k = 0; k < K; ++k) wt[static_cast<std::size_t>(k) * L.n_out + o] = sc * L.w[static_cast<std::size_t>(o) * K + k];
            y.assign(static_cast<std::size_t>(N) * L.n_out, 0.0);
            simd::gemm(N, L.n_out, K, patch.data(), K, wt.data(), L.n_out, y.data(), L.n_out);
            if (cache) cache->patches[li] = std::move(patch);
            rows = N;
            break;
        }
        case LayerType::nonlin:
            y.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = act(L.nonlin, x[i]);
            break;
        case LayerType::gpool:
            y.assign(static_cast<std::size_t>(L.n_in), 0.0);
            for (int e = 0; e < rows; ++e) simd::axpy(static_cast<std::size_t>(L.n_in), 1.0 / rows, x.data() + static_cast<std::size_t>(e) * L.n_in, y.data());
            rows = 1;
            break;
        case LayerType::dense: {
            y.assign(static_cast<std::size_t>(L.n_out), 0.0);
            double sc = 1.0 / std::sqrt(static_cast<double>(L.n_in));
            for (int o = 0; o < L.n_out; ++o)
                y[o] = sc * simd::dot(static_cast<std::size_t>(L.n_in), L.w.data() + static_cast<std::size_t>(o) * L.n_in, x.data());
            break;
        }
        default: throw DomainError("forward: unsupported layer");
        }
        x = std::move(y);
    }
    if (cache) cache->output = x[0];
    return x[0];
}

Gradients grad_params(const FiniteParamSet& p, const ForwardCache& cache)
{
    if (cache.inputs.size() != p.layers.size()) throw ShapeError("grad_params: cache does not belong to this network");
    const int P = p.geom.pixels(), N = p.geom.n_rot * P;
    Gradients g(p.layers.size());
    std::vector<double> dy{1.0};
    for (std::size_t li = p.layers.size(); li-- > 0;) {
        const FiniteLayer& L = p.layers[li];
        const std::vector<double>& x = cache.inputs[li];
        std::vector<double> dx(x.size(), 0.0);
        switch (L.type) {
        case LayerType::lifting:
        case LayerType::gconv: {
            const int K = L.fan_in;
            const std::vector<double>& patch = cache.patches[li];
            double sc = 1.0 / std::sqrt(static_cast<double>(K));
            std::vector<double> dyt(static_cast<std::size_t>(L.n_out) * N);
            for (int e = 0; e < N; ++e)
                for (int o = 0; o < L.n_out; ++o) dyt[static_cast<std::size_t>(o) * N + e] = sc * dy[static_cast<std::size_t>(e) * L.n_out + o];
            g[li].assign(L.w.size(), 0.0);
            simd::gemm(L.n_out, K, N, dyt.data(), N, patch.data(), K, g[li].data(), K);
            if (li > 0) {
                std::vector<double> ws(L.w.size());
                for (std::size_t i = 0; i < ws.size(); ++i) ws[i] = sc * L.w[i];
                std::vector<double> dpatch(static_cast<std::size_t>(N) * K, 0.0);
                simd::gemm(N, K, L.n_out, dy.data(), L.n_out, ws.data(), K, dpatch.data(), K);
                for (std::size_t i = 0; i < dpatch.size(); ++i)
                    if (L.gather[i] >= 0) dx[static_cast<std::size_t>(L.gather[i])] += dpatch[i];
            }
            break;
        }
        case LayerType::nonlin:
            for (std::size_t i = 0; i < x.size(); ++i) dx[i] = dy[i] * act_deriv(L.nonlin, x[i]);
            break;
        case LayerType::gpool: {
            const std::size_t rows = x.size() / static_cast<std::size_t>(L.n_in);
            for (std::size_t e = 0; e < rows; ++e)
                for (int c = 0; c < L.n_in; ++c) dx[e * L.n_in + c] = dy[c] / static_cast<double>(rows);
            break;
        }
        case LayerType::dense: {
            double sc = 1.0 / std::sqrt(static_cast<double>(L.n_in));
            g[li].assign(L.w.size(), 0.0);
            for (int o = 0; o < L.n_out; ++o) {
                simd::axpy(static_cast<std::size_t>(L.n_in), sc * dy[o], x.data(), g[li].data() + static_cast<std::size_t>(o) * L.n_in);
                simd::axpy(static_cast<std::size_t>(L.n_in), sc * dy[o], L.w.data() + static_cast<std::size_t>(o) * L.n_in, dx.data());
            }
            break;
        }
        default: throw DomainError("grad_params: unsupported layer");
        }
        dy = std::move(dx);
    }
    return g;
}

std::vector<double> empirical_ntk_per_layer(const Gradients& a, const Gradients& b)
{
    if (a.size() != b.size()) throw ShapeError("empirical_ntk: gradient sets have different layer counts");
    std::vector<double> out(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) throw ShapeError("empirical_ntk: parameter shapes differ");
        out[i] = simd::dot(a[i].size(), a[i].data(), b[i].data());
    }
    return out;
}

double empirical_ntk(const Gradients& a, const Gradients& b)
{
    double s = 0.0;
    for (double v : empirical_ntk_per_layer(a, b)) s += v;
    return s;
}

std::vector<double> nngp_features(const FiniteParamSet& p, const ForwardCache& cache)
{
    std::size_t last = p.layers.size();
    for (std::size_t i = 0; i < p.layers.size(); ++i)
        if (is_linear(p.layers[i].type)) last = i;
    const FiniteLayer& L = p.layers[last];
    if (L.type == LayerType::dense) {
        std::vector<double> phi = cache.inputs[last];
        double sc = 1.0 / std::sqrt(static_cast<double>(L.n_in));
        for (auto& v : phi) v *= sc;
        return phi;
    }
    // convolution followed by group pooling: average the patches over the group
    const std::vector<double>& patch = cache.patches[last];
    const std::size_t K = static_cast<std::size_t>(L.fan_in), rows = patch.size() / K;
    std::vector<double> phi(K, 0.0);
    for (std::size_t e = 0; e < rows; ++e) simd::axpy(K, 1.0, patch.data() + e * K, phi.data());
    double sc = 1.0 / (static_cast<double>(rows) * std::sqrt(static_cast<double>(K)));
    for (auto& v : phi) v *= sc;
    return phi;
}

}  // namespace entk::finite
