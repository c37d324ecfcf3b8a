#include <numeric>

#include "entk/errors.hpp"
#include "entk/planar.hpp"

namespace entk::planar {

namespace {

int wrap(int v, int n)
{
    int m = v % n;
    return m < 0 ? m + n : m;
}

}  // namespace

RotoTranslationGroup::RotoTranslationGroup(int height, int width, int n_rot)
    : h_(height), w_(width), n_rot_(n_rot), n_(n_rot * height * width)
{
    GridGeom{height, width, Padding::circular, n_rot}.validate();
    if (n_ > 1024) throw DomainError("RotoTranslationGroup: group order above 1024");
    const int P = h_ * w_;
    table_.resize(static_cast<std::size_t>(n_) * n_);
    for (int a = 0; a < n_; ++a) {
        int ra = a / P, ta = a % P;
        for (int b = 0; b < n_; ++b) {
            int rb = b / P, tb = b % P;
            Offset rt = rotate_offset({tb / w_, tb % w_}, ra * (4 / n_rot_));
            int row = wrap(ta / w_ + rt.dy, h_), col = wrap(ta % w_ + rt.dx, w_);
            table_[static_cast<std::size_t>(a) * n_ + b] = element((ra + rb) % n_rot_, row, col);
        }
    }
    inverse_.assign(n_, -1);
    for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b)
            if (mul(a, b) == 0) {
                inverse_[a] = b;
                break;
            }
    for (int a = 0; a < n_; ++a) {
        if (inverse_[a] < 0 || mul(inverse_[a], a) != 0) throw DomainError("RotoTranslationGroup: inverse table broken");
        if (mul(0, a) != a || mul(a, 0) != a) throw DomainError("RotoTranslationGroup: identity broken");
    }
    // The pixel action must be a homomorphism of the table.
    for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b)
            for (int x : {0, P - 1})
                if (act_pixel(mul(a, b), x) != act_pixel(a, act_pixel(b, x)))
                    throw DomainError("RotoTranslationGroup: action inconsistent with multiplication");
}

int RotoTranslationGroup::element(int r, int row, int col) const
{
    return r * h_ * w_ + wrap(row, h_) * w_ + wrap(col, w_);
}

int RotoTranslationGroup::act_pixel(int g, int pixel) const
{
    const int P = h_ * w_;
    int r = g / P, t = g % P;
    Offset x = rotate_offset({pixel / w_, pixel % w_}, r * (4 / n_rot_));
    return wrap(x.dy + t / w_, h_) * w_ + wrap(x.dx + t % w_, w_);
}

Image RotoTranslationGroup::act_image(int g, const Image& img) const
{
    if (img.height != h_ || img.width != w_) throw ShapeError("act_image: grid mismatch");
    Image out(img.channels, h_, w_);
    const std::size_t P = static_cast<std::size_t>(h_) * w_;
    for (int c = 0; c < img.channels; ++c)
        for (std::size_t y = 0; y < P; ++y)
            out.data[c * P + act_pixel(g, static_cast<int>(y))] = img.data[c * P + y];
    return out;
}

std::vector<double> brute_force_lifting(const RotoTranslationGroup& grp, std::span<const double> k0,
                                        std::span<const int> support_pixels)
{
    const std::size_t P = static_cast<std::size_t>(grp.height()) * grp.width();
    const std::size_t N = static_cast<std::size_t>(grp.order());
    if (k0.size() != P * P) throw ShapeError("brute_force_lifting: input is not a pixel-pair field");
    if (support_pixels.empty()) throw DomainError("brute_force_lifting: empty support");
    std::vector<double> out(N * N, 0.0);
    for (std::size_t g = 0; g < N; ++g)
        for (std::size_t gp = 0; gp < N; ++gp) {
            double acc = 0.0;
            for (int y : support_pixels)
                acc += k0[static_cast<std::size_t>(grp.act_pixel(static_cast<int>(g), y)) * P +
                          grp.act_pixel(static_cast<int>(gp), y)];
            out[g * N + gp] = acc / static_cast<double>(support_pixels.size());
        }
    return out;
}

std::vector<double> brute_force_group_layer(const RotoTranslationGroup& grp, std::span<const double> k,
                                            std::span<const int> support_elements)
{
    const std::size_t N = static_cast<std::size_t>(grp.order());
    if (k.size() != N * N) throw ShapeError("brute_force_group_layer: input is not a group-pair field");
    if (support_elements.empty()) throw DomainError("brute_force_group_layer: empty support");
    std::vector<double> out(N * N, 0.0);
    for (std::size_t g = 0; g < N; ++g)
        for (std::size_t gp = 0; gp < N; ++gp) {
            double acc = 0.0;
            for (int h : support_elements)
                acc += k[static_cast<std::size_t>(grp.mul(static_cast<int>(g), h)) * N +
                         grp.mul(static_cast<int>(gp), h)];
            out[g * N + gp] = acc / static_cast<double>(support_elements.size());
        }
    return out;
}

double brute_force_pool(std::span<const double> k)
{
    if (k.empty()) throw ShapeError("brute_force_pool: empty field");
    return std::accumulate(k.begin(), k.end(), 0.0) / static_cast<double>(k.size());
}

std::vector<int> support_pixels(const RotoTranslationGroup& grp, const FilterSupport2D& s)
{
    std::vector<int> out;
    for (auto o : s.offsets) out.push_back(grp.element(0, o.dy, o.dx));
    return out;
}

std::vector<int> support_elements(const RotoTranslationGroup& grp, const FilterSupport2D& s)
{
    std::vector<int> out;
    for (int r = 0; r < grp.n_rot(); ++r)
        for (auto o : s.offsets) out.push_back(grp.element(r, o.dy, o.dx));
    return out;
}

}  // namespace entk::planar
