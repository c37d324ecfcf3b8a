#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <cmath>
#include <random>
#include <vector>

#include "entk/kernel_core.hpp"
#include "entk/planar.hpp"

namespace oracle {

using namespace entk;

inline planar::Image random_image(std::mt19937_64& rng, int c, int h, int w)
{
    std::normal_distribution<double> nd;
    planar::Image img(c, h, w);
    for (auto& v : img.data) v = nd(rng);
    return img;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size()) return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Kernel fields over finite-group pairs for the three input pairings
// (f,f'), (f,f), (f',f'); nonlinearities read their diagonals from the
// self pairings.
struct GroupFields {
    std::vector<double> k, th, kx, thx, ky, thy;
};

inline std::vector<double> pixel_field(const planar::Image& a, const planar::Image& b)
{
    const std::size_t P = static_cast<std::size_t>(a.height) * a.width;
    std::vector<double> k(P * P, 0.0);
    for (int c = 0; c < a.channels; ++c)
        for (std::size_t t = 0; t < P; ++t)
            for (std::size_t u = 0; u < P; ++u) k[t * P + u] += a.data[c * P + t] * b.data[c * P + u] / a.channels;
    return k;
}

inline GroupFields brute_lift(const planar::RotoTranslationGroup& grp, const planar::Image& f, const planar::Image& g,
                              const std::vector<int>& sp)
{
    GroupFields out;
    out.k = planar::brute_force_lifting(grp, pixel_field(f, g), sp);
    out.kx = planar::brute_force_lifting(grp, pixel_field(f, f), sp);
    out.ky = planar::brute_force_lifting(grp, pixel_field(g, g), sp);
    out.th = out.k;
    out.thx = out.kx;
    out.thy = out.ky;
    return out;
}

inline GroupFields brute_gconv(const planar::RotoTranslationGroup& grp, const GroupFields& in, const std::vector<int>& se)
{
    GroupFields out;
    auto lin = [&](const std::vector<double>& k, const std::vector<double>& th, std::vector<double>& ko, std::vector<double>& tho) {
        ko = planar::brute_force_group_layer(grp, k, se);
        tho = planar::brute_force_group_layer(grp, th, se);
        for (std::size_t i = 0; i < ko.size(); ++i) tho[i] += ko[i];
    };
    lin(in.k, in.th, out.k, out.th);
    lin(in.kx, in.thx, out.kx, out.thx);
    lin(in.ky, in.thy, out.ky, out.thy);
    return out;
}

inline GroupFields brute_nonlin(const GroupFields& in, NonlinKind kind)
{
    const std::size_t N = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(in.k.size()))));
    GroupFields out = in;
    auto apply = [&](const std::vector<double>& d1, const std::vector<double>& d2, const std::vector<double>& k,
                     const std::vector<double>& th, std::vector<double>& ko, std::vector<double>& tho) {
        for (std::size_t g = 0; g < N; ++g)
            for (std::size_t h = 0; h < N; ++h) {
                auto v = nonlin_map(kind, d1[g * N + g], k[g * N + h], d2[h * N + h]);
                ko[g * N + h] = v.k;
                tho[g * N + h] = v.kdot * th[g * N + h];
            }
    };
    apply(in.kx, in.ky, in.k, in.th, out.k, out.th);
    apply(in.kx, in.kx, in.kx, in.thx, out.kx, out.thx);
    apply(in.ky, in.ky, in.ky, in.thy, out.ky, out.thy);
    return out;
}

// Lifting(S), (σ, GConv(S)) × (depth-1), evaluated with the literal finite-group sums.
inline GroupFields brute_gcnn_fields(const planar::RotoTranslationGroup& grp, const planar::Image& f, const planar::Image& g,
                                     const planar::FilterSupport2D& s, int depth, NonlinKind kind)
{
    auto sp = planar::support_pixels(grp, s);
    auto se = planar::support_elements(grp, s);
    GroupFields st = brute_lift(grp, f, g, sp);
    for (int d = 1; d < depth; ++d) st = brute_gconv(grp, brute_nonlin(st, kind), se);
    return st;
}

}  // namespace oracle
