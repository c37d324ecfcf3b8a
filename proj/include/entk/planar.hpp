#pragma once

#include <span>
#include <string>
#include <vector>

#include "entk/kernel_core.hpp"

// Kernel recursions for C_n ⋉ Z_H×Z_W acting on pixel grids.
//
// Group element g = (t, r) acts on pixel coordinates (row, col) as
// x ↦ R_r x + t, with R_1 (a, b) = (-b, a) a quarter turn counter-clockwise.
// Elements are flattened as g = r·H·W + t with t = row·W + col, which is also
// the index layout of every planar kernel field.
namespace entk::planar {

enum class Padding { circular, zero };

const char* padding_name(Padding p);
Padding parse_padding(const std::string& name);

struct GridGeom {
    int height = 0;
    int width = 0;
    Padding padding = Padding::circular;
    int n_rot = 1;

    int pixels() const { return height * width; }
    void validate() const;
    bool operator==(const GridGeom&) const = default;
};

struct Offset {
    int dy = 0;
    int dx = 0;
    bool operator==(const Offset&) const = default;
};

Offset rotate_offset(Offset o, int r);

struct FilterSupport2D {
    std::vector<Offset> offsets;
    bool global = false;

    static FilterSupport2D centered_square(int k);
    // Every offset of the torus; the whole translation group.
    static FilterSupport2D whole_grid(const GridGeom& geom);

    int size() const { return static_cast<int>(offsets.size()); }
    bool rotation_invariant(const GridGeom& geom) const;
    void validate(const GridGeom& geom) const;
};

FilterSupport2D rotate_support(const FilterSupport2D& s, int r);

// channels × height × width, row-major.
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image() = default;
    Image(int c, int h, int w) : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0.0) {}
    double& at(int c, int i, int j) { return data[(static_cast<std::size_t>(c) * height + i) * width + j]; }
    double at(int c, int i, int j) const { return data[(static_cast<std::size_t>(c) * height + i) * width + j]; }
};

// output[i][j] = input[j][h-1-i] applied r times (about the grid centre).
std::vector<double> rotate_grid(std::span<const double> field, int h, int w, int r);
Image rotate_image(const Image& img, int r);
// Circular shift: output(x) = input(x - (dy, dx)).
Image translate_image(const Image& img, int dy, int dx);

struct PlanarKernel {
    GridGeom geom;
    bool lifted = false;  // false: translation-pair domain (input / CNN layers)
    int n_r = 1;          // rotation indices carried (1 before lifting)
    std::vector<double> cross;
    std::vector<double> theta;
    std::vector<double> diag_x;
    std::vector<double> diag_y;
    // K_{gh,g'h} = K_{g,g'} for pure rotations h; lets layers fill r ≠ 0 rows by permutation.
    bool rot_right_invariant = false;

    int elements() const { return n_r * geom.pixels(); }
    double cross_at(int r, int t, int rp, int tp) const;
    double theta_at(int r, int t, int rp, int tp) const;
};

// [A_S K](t, t') = (1/|S|) Σ_{s∈S} K(t+s, t'+s); out-of-grid terms vanish under zero padding.
std::vector<double> a_operator(std::span<const double> k, const GridGeom& geom, const FilterSupport2D& support);
// K̃(t, t') = K(t, R_rot t') with coordinates taken mod the grid (circular padding only).
std::vector<double> twist_second(std::span<const double> k, const GridGeom& geom, int rot);

PlanarKernel input_kernel_planar(const Image& f, const Image& g, const GridGeom& geom);
PlanarKernel lifting_planar(const PlanarKernel& in, const FilterSupport2D& support);
PlanarKernel gconv_planar(const PlanarKernel& in, const FilterSupport2D& support, bool strict = true);
PlanarKernel cnn_conv_kernel(const PlanarKernel& in, const FilterSupport2D& support);
PlanarKernel apply_nonlinearity(const PlanarKernel& in, NonlinKind kind);

// Means over every index pair. k_xx / k_yy are the means of the diagonal
// fields; the pooled self kernels need separate (f, f) and (f', f') runs.
ScalarKernel gpool_planar(const PlanarKernel& in);
ScalarKernel sumpool_cnn(const PlanarKernel& in);

// Finite group C_n ⋉ Z_H×Z_W with circular padding, using the same element
// flattening as the kernel fields.
class RotoTranslationGroup {
public:
    RotoTranslationGroup(int height, int width, int n_rot);

    int order() const { return n_; }
    int height() const { return h_; }
    int width() const { return w_; }
    int n_rot() const { return n_rot_; }
    int element(int r, int row, int col) const;
    int rotation_of(int g) const { return g / (h_ * w_); }
    int mul(int a, int b) const { return table_[static_cast<std::size_t>(a) * n_ + b]; }
    int inv(int a) const { return inverse_[a]; }
    int identity() const { return 0; }
    // Pixel index of ρ(g) x.
    int act_pixel(int g, int pixel) const;
    // (ρ_reg(g) f)(x) = f(ρ(g)⁻¹ x), per channel.
    Image act_image(int g, const Image& img) const;

private:
    int h_, w_, n_rot_, n_;
    std::vector<int> table_;
    std::vector<int> inverse_;
};

// Literal finite sums over the group; used as the oracle for the fast layer maps.
// Lifting: K_{g,g'} = (1/|S|) Σ_{y∈S} K0(ρ(g)y, ρ(g')y) with K0 a pixel-pair field.
std::vector<double> brute_force_lifting(const RotoTranslationGroup& grp, std::span<const double> k0,
                                        std::span<const int> support_pixels);
// Group convolution: K_{g,g'} = (1/|S|) Σ_{h∈S} K_{gh,g'h}.
std::vector<double> brute_force_group_layer(const RotoTranslationGroup& grp, std::span<const double> k,
                                            std::span<const int> support_elements);
double brute_force_pool(std::span<const double> k);

// Support offsets translated to pixel indices / group elements of the finite group.
std::vector<int> support_pixels(const RotoTranslationGroup& grp, const FilterSupport2D& s);
std::vector<int> support_elements(const RotoTranslationGroup& grp, const FilterSupport2D& s);

}  // namespace entk::planar
