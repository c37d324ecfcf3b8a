#include "entk/planar.hpp"

#include <algorithm>
#include <set>

#include "entk/errors.hpp"
#include "entk/simd.hpp"

namespace entk::planar {

namespace {

// dispatch overhead dominates on rows shorter than this
constexpr int kShortRow = 16;

int wrap(int v, int n)
{
    int m = v % n;
    return m < 0 ? m + n : m;
}

int quarter_turns(int r, int n_rot) { return r * (4 / n_rot); }

// dst[i][j] += w * src[i+by][j+bx] over one H×W plane.
void accumulate_shift(double w, const double* src, double* dst, int h, int wd, int by, int bx, Padding pad)
{
    if (pad == Padding::circular) {
        int b = wrap(bx, wd);
        for (int i = 0; i < h; ++i) {
            const double* srow = src + static_cast<std::size_t>(wrap(i + by, h)) * wd;
            double* drow = dst + static_cast<std::size_t>(i) * wd;
            if (wd >= kShortRow) {
                simd::axpy(static_cast<std::size_t>(wd - b), w, srow + b, drow);
                if (b) simd::axpy(static_cast<std::size_t>(b), w, srow, drow + (wd - b));
                continue;
            }
            for (int j = 0; j < wd - b; ++j) drow[j] += w * srow[j + b];
            for (int j = 0; j < b; ++j) drow[wd - b + j] += w * srow[j];
        }
        return;
    }
    int lo = std::max(0, -bx), hi = std::min(wd, wd - bx);
    if (hi <= lo) return;
    for (int i = 0; i < h; ++i) {
        int si = i + by;
        if (si < 0 || si >= h) continue;
        simd::axpy(static_cast<std::size_t>(hi - lo), w, src + static_cast<std::size_t>(si) * wd + lo + bx,
                   dst + static_cast<std::size_t>(i) * wd + lo);
    }
}

// Pixel index of t + o, or -1 when it leaves the grid under zero padding.
int shifted_pixel(const GridGeom& g, int t, Offset o)
{
    int i = t / g.width + o.dy, j = t % g.width + o.dx;
    if (g.padding == Padding::circular) return wrap(i, g.height) * g.width + wrap(j, g.width);
    if (i < 0 || i >= g.height || j < 0 || j >= g.width) return -1;
    return i * g.width + j;
}

enum class LayerKind { lifting, gconv, cnn };

// Shared shift-and-average map behind lifting, group convolution and CNN
// convolution. out[(r,t)][(r',t')] = w Σ_{r̃} Σ_s in[(r+r̃, t+R_r s)][(r'+r̃, t'+R_r' s)]
// where the r̃ sum only exists for group convolutions.
// With a right-invariant input every r̃ term is equal and one of them is used.
void shift_map(const GridGeom& geom, LayerKind kind, int n_in, int n_out, const FilterSupport2D& support,
               std::span<const double> in, std::span<double> out, bool rows_r0_only, bool in_invariant)
{
    const int P = geom.pixels();
    const int Nin = n_in * P, Nout = n_out * P;
    const int n_sum = kind == LayerKind::gconv && !in_invariant ? n_in : 1;
    const double w = 1.0 / (static_cast<double>(support.size()) * n_sum);
    const int r_rows = rows_r0_only ? 1 : n_out;
    for (int r = 0; r < r_rows; ++r) {
        for (int rp = 0; rp < n_out; ++rp) {
            for (int rt = 0; rt < n_sum; ++rt) {
                int src_r = kind == LayerKind::gconv ? (r + rt) % n_in : 0;
                int src_rp = kind == LayerKind::gconv ? (rp + rt) % n_in : 0;
                for (const Offset& s : support.offsets) {
                    Offset a = kind == LayerKind::cnn ? s : rotate_offset(s, quarter_turns(r, geom.n_rot));
                    Offset b = kind == LayerKind::cnn ? s : rotate_offset(s, quarter_turns(rp, geom.n_rot));
                    for (int t = 0; t < P; ++t) {
                        int st = shifted_pixel(geom, t, a);
                        if (st < 0) continue;
                        const double* src = in.data() + static_cast<std::size_t>(src_r * P + st) * Nin + src_rp * P;
                        double* dst = out.data() + static_cast<std::size_t>(r * P + t) * Nout + rp * P;
                        accumulate_shift(w, src, dst, geom.height, geom.width, b.dy, b.dx, geom.padding);
                    }
                }
            }
        }
    }
}

void shift_map_diag(const GridGeom& geom, LayerKind kind, int n_in, int n_out, const FilterSupport2D& support,
                    std::span<const double> in, std::span<double> out)
{
    const int P = geom.pixels();
    const int n_sum = kind == LayerKind::gconv ? n_in : 1;
    const double w = 1.0 / (static_cast<double>(support.size()) * n_sum);
    for (int r = 0; r < n_out; ++r) {
        for (int t = 0; t < P; ++t) {
            double acc = 0.0;
            for (int rt = 0; rt < n_sum; ++rt) {
                int src_r = kind == LayerKind::gconv ? (r + rt) % n_in : 0;
                for (const Offset& s : support.offsets) {
                    Offset a = kind == LayerKind::cnn ? s : rotate_offset(s, quarter_turns(r, geom.n_rot));
                    int st = shifted_pixel(geom, t, a);
                    if (st >= 0) acc += in[src_r * P + st];
                }
            }
            out[r * P + t] = w * acc;
        }
    }
}

// Rebuild rows r ≠ 0 from K[(r,t)][(r',t')] = K[(0,t)][(r'-r,t')].
void fill_from_r0(std::vector<double>& k, int n, int P)
{
    const std::size_t N = static_cast<std::size_t>(n) * P;
    for (int r = 1; r < n; ++r)
        for (int t = 0; t < P; ++t) {
            const double* src = k.data() + static_cast<std::size_t>(t) * N;
            double* dst = k.data() + static_cast<std::size_t>(r * P + t) * N;
            for (int rp = 0; rp < n; ++rp)
                std::copy_n(src + static_cast<std::size_t>(wrap(rp - r, n)) * P, P, dst + static_cast<std::size_t>(rp) * P);
        }
}

PlanarKernel run_layer(const PlanarKernel& in, const FilterSupport2D& support, LayerKind kind, bool invariant_out)
{
    const GridGeom& geom = in.geom;
    const int n_out = kind == LayerKind::cnn ? 1 : geom.n_rot;
    const int P = geom.pixels();
    PlanarKernel out;
    out.geom = geom;
    out.lifted = kind != LayerKind::cnn;
    out.n_r = n_out;
    out.rot_right_invariant = invariant_out && n_out > 1;
    const std::size_t N = static_cast<std::size_t>(n_out) * P;
    out.cross.assign(N * N, 0.0);
    out.theta.assign(N * N, 0.0);
    out.diag_x.assign(N, 0.0);
    out.diag_y.assign(N, 0.0);
    bool r0 = out.rot_right_invariant;
    bool inv = in.rot_right_invariant;
    shift_map(geom, kind, in.n_r, n_out, support, in.cross, out.cross, r0, inv);
    shift_map(geom, kind, in.n_r, n_out, support, in.theta, out.theta, r0, inv);
    if (r0) {
        fill_from_r0(out.cross, n_out, P);
        fill_from_r0(out.theta, n_out, P);
    }
    for (std::size_t i = 0; i < N * N; ++i) out.theta[i] += out.cross[i];
    shift_map_diag(geom, kind, in.n_r, n_out, support, in.diag_x, out.diag_x);
    shift_map_diag(geom, kind, in.n_r, n_out, support, in.diag_y, out.diag_y);
    return out;
}

ScalarKernel mean_pool(const PlanarKernel& in)
{
    ScalarKernel s;
    double n = static_cast<double>(in.cross.size());
    double sk = 0.0, st = 0.0;
    for (std::size_t i = 0; i < in.cross.size(); ++i) {
        sk += in.cross[i];
        st += in.theta[i];
    }
    s.k_xy = sk / n;
    s.theta = st / n;
    double dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < in.diag_x.size(); ++i) {
        dx += in.diag_x[i];
        dy += in.diag_y[i];
    }
    s.k_xx = dx / static_cast<double>(in.diag_x.size());
    s.k_yy = dy / static_cast<double>(in.diag_y.size());
    return s;
}

}  // namespace

const char* padding_name(Padding p) { return p == Padding::circular ? "circular" : "zero"; }

Padding parse_padding(const std::string& name)
{
    if (name == "circular") return Padding::circular;
    if (name == "zero") return Padding::zero;
    throw ConfigError("unknown padding '" + name + "' (expected circular or zero)");
}

void GridGeom::validate() const
{
    if (height < 1 || width < 1) throw ShapeError("grid dimensions must be positive");
    if (n_rot != 1 && n_rot != 2 && n_rot != 4) throw DomainError("n_rot must be 1, 2 or 4");
    if (n_rot > 1 && height != width) throw DomainError("rotations require a square grid");
}

Offset rotate_offset(Offset o, int r)
{
    switch (wrap(r, 4)) {
    case 0: return o;
    case 1: return {-o.dx, o.dy};
    case 2: return {-o.dy, -o.dx};
    default: return {o.dx, -o.dy};
    }
}

FilterSupport2D FilterSupport2D::centered_square(int k)
{
    if (k < 1 || k % 2 == 0) throw DomainError("centered square support needs an odd positive size");
    FilterSupport2D s;
    int h = k / 2;
    for (int dy = -h; dy <= h; ++dy)
        for (int dx = -h; dx <= h; ++dx) s.offsets.push_back({dy, dx});
    return s;
}

FilterSupport2D FilterSupport2D::whole_grid(const GridGeom& geom)
{
    FilterSupport2D s;
    s.global = true;
    for (int dy = 0; dy < geom.height; ++dy)
        for (int dx = 0; dx < geom.width; ++dx) s.offsets.push_back({dy, dx});
    return s;
}

bool FilterSupport2D::rotation_invariant(const GridGeom& geom) const
{
    auto key = [&](Offset o) {
        if (geom.padding == Padding::circular) return std::pair{wrap(o.dy, geom.height), wrap(o.dx, geom.width)};
        return std::pair{o.dy, o.dx};
    };
    std::set<std::pair<int, int>> base;
    for (auto o : offsets) base.insert(key(o));
    for (int r = 1; r < geom.n_rot; ++r) {
        std::set<std::pair<int, int>> rot;
        for (auto o : offsets) rot.insert(key(rotate_offset(o, quarter_turns(r, geom.n_rot))));
        if (rot != base) return false;
    }
    return true;
}

void FilterSupport2D::validate(const GridGeom& geom) const
{
    if (offsets.empty()) throw DomainError("filter support is empty");
    if (global && geom.padding != Padding::circular) throw DomainError("global support requires circular padding");
    if (global) return;
    for (auto o : offsets)
        if (2 * std::abs(o.dy) >= geom.height + 1 || 2 * std::abs(o.dx) >= geom.width + 1)
            throw DomainError("filter support does not fit inside the grid");
}

FilterSupport2D rotate_support(const FilterSupport2D& s, int r)
{
    FilterSupport2D out = s;
    for (auto& o : out.offsets) o = rotate_offset(o, r);
    return out;
}

std::vector<double> rotate_grid(std::span<const double> field, int h, int w, int r)
{
    if (field.size() != static_cast<std::size_t>(h) * w) throw ShapeError("rotate_grid: field size mismatch");
    int q = wrap(r, 4);
    if (q != 0 && h != w) throw DomainError("rotate_grid: non-square grid");
    std::vector<double> cur(field.begin(), field.end()), next(cur.size());
    for (int step = 0; step < q; ++step) {
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < h; ++j) next[i * h + j] = cur[j * h + (h - 1 - i)];
        cur.swap(next);
    }
    return cur;
}

Image rotate_image(const Image& img, int r)
{
    Image out(img.channels, img.height, img.width);
    std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
    for (int c = 0; c < img.channels; ++c) {
        auto rot = rotate_grid(std::span<const double>(img.data.data() + c * plane, plane), img.height, img.width, r);
        std::copy(rot.begin(), rot.end(), out.data.begin() + c * plane);
    }
    return out;
}

Image translate_image(const Image& img, int dy, int dx)
{
    Image out(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c)
        for (int i = 0; i < img.height; ++i)
            for (int j = 0; j < img.width; ++j)
                out.at(c, wrap(i + dy, img.height), wrap(j + dx, img.width)) = img.at(c, i, j);
    return out;
}

double PlanarKernel::cross_at(int r, int t, int rp, int tp) const
{
    std::size_t N = static_cast<std::size_t>(elements());
    return cross[static_cast<std::size_t>(r * geom.pixels() + t) * N + rp * geom.pixels() + tp];
}

double PlanarKernel::theta_at(int r, int t, int rp, int tp) const
{
    std::size_t N = static_cast<std::size_t>(elements());
    return theta[static_cast<std::size_t>(r * geom.pixels() + t) * N + rp * geom.pixels() + tp];
}

std::vector<double> a_operator(std::span<const double> k, const GridGeom& geom, const FilterSupport2D& support)
{
    const std::size_t P = static_cast<std::size_t>(geom.pixels());
    if (k.size() != P * P) throw ShapeError("a_operator: field is not a pixel-pair field");
    if (support.offsets.empty()) throw DomainError("a_operator: empty support");
    std::vector<double> out(P * P, 0.0);
    const double w = 1.0 / support.size();
    for (const Offset& s : support.offsets)
        for (std::size_t t = 0; t < P; ++t) {
            int st = shifted_pixel(geom, static_cast<int>(t), s);
            if (st < 0) continue;
            accumulate_shift(w, k.data() + st * P, out.data() + t * P, geom.height, geom.width, s.dy, s.dx, geom.padding);
        }
    return out;
}

std::vector<double> twist_second(std::span<const double> k, const GridGeom& geom, int rot)
{
    if (geom.padding != Padding::circular) throw DomainError("twist_second: circular padding required");
    if (geom.height != geom.width && wrap(rot, 4) != 0) throw DomainError("twist_second: non-square grid");
    const int P = geom.pixels();
    if (k.size() != static_cast<std::size_t>(P) * P) throw ShapeError("twist_second: field size mismatch");
    std::vector<int> perm(P);
    for (int t = 0; t < P; ++t) {
        Offset o = rotate_offset({t / geom.width, t % geom.width}, rot);
        perm[t] = wrap(o.dy, geom.height) * geom.width + wrap(o.dx, geom.width);
    }
    std::vector<double> out(k.size());
    for (int t = 0; t < P; ++t)
        for (int tp = 0; tp < P; ++tp)
            out[static_cast<std::size_t>(t) * P + tp] = k[static_cast<std::size_t>(t) * P + perm[tp]];
    return out;
}

PlanarKernel input_kernel_planar(const Image& f, const Image& g, const GridGeom& geom)
{
    geom.validate();
    if (f.channels != g.channels || f.height != g.height || f.width != g.width)
        throw ShapeError("input_kernel_planar: input shapes differ");
    if (f.height != geom.height || f.width != geom.width) throw ShapeError("input_kernel_planar: grid mismatch");
    if (f.channels < 1) throw ShapeError("input_kernel_planar: no channels");
    const std::size_t P = static_cast<std::size_t>(geom.pixels());
    PlanarKernel k;
    k.geom = geom;
    k.cross.assign(P * P, 0.0);
    k.theta.assign(P * P, 0.0);
    k.diag_x.assign(P, 0.0);
    k.diag_y.assign(P, 0.0);
    const double w = 1.0 / f.channels;
    for (int c = 0; c < f.channels; ++c) {
        const double* fc = f.data.data() + c * P;
        const double* gc = g.data.data() + c * P;
        for (std::size_t t = 0; t < P; ++t) {
            simd::axpy(P, w * fc[t], gc, k.cross.data() + t * P);
            k.diag_x[t] += w * fc[t] * fc[t];
            k.diag_y[t] += w * gc[t] * gc[t];
        }
    }
    return k;
}

PlanarKernel lifting_planar(const PlanarKernel& in, const FilterSupport2D& support)
{
    in.geom.validate();
    if (in.lifted) throw DomainError("lifting_planar: input already carries rotation indices");
    support.validate(in.geom);
    return run_layer(in, support, LayerKind::lifting, support.rotation_invariant(in.geom));
}

PlanarKernel gconv_planar(const PlanarKernel& in, const FilterSupport2D& support, bool strict)
{
    in.geom.validate();
    if (!in.lifted) throw DomainError("gconv_planar: input has no rotation indices (lift first)");
    support.validate(in.geom);
    bool inv = support.rotation_invariant(in.geom);
    if (strict && !inv) throw DomainError("gconv_planar: support is not rotation invariant");
    return run_layer(in, support, LayerKind::gconv, inv && in.rot_right_invariant);
}

PlanarKernel cnn_conv_kernel(const PlanarKernel& in, const FilterSupport2D& support)
{
    if (in.lifted) throw DomainError("cnn_conv_kernel: input carries rotation indices");
    support.validate(in.geom);
    return run_layer(in, support, LayerKind::cnn, false);
}

PlanarKernel apply_nonlinearity(const PlanarKernel& in, NonlinKind kind)
{
    PlanarKernel out = in;
    const int P = in.geom.pixels();
    const std::size_t N = static_cast<std::size_t>(in.elements());
    const int rows = in.rot_right_invariant ? P : static_cast<int>(N);
    for (int g = 0; g < rows; ++g)
        for (std::size_t gp = 0; gp < N; ++gp) {
            std::size_t idx = static_cast<std::size_t>(g) * N + gp;
            NonlinValue v = nonlin_map(kind, in.diag_x[g], in.cross[idx], in.diag_y[gp]);
            out.cross[idx] = v.k;
            out.theta[idx] = v.kdot * in.theta[idx];
        }
    if (in.rot_right_invariant) {
        fill_from_r0(out.cross, in.n_r, P);
        fill_from_r0(out.theta, in.n_r, P);
    }
    for (std::size_t g = 0; g < N; ++g) {
        out.diag_x[g] = nonlin_map(kind, in.diag_x[g], in.diag_x[g], in.diag_x[g]).k;
        out.diag_y[g] = nonlin_map(kind, in.diag_y[g], in.diag_y[g], in.diag_y[g]).k;
    }
    return out;
}

ScalarKernel gpool_planar(const PlanarKernel& in)
{
    if (!in.lifted) throw DomainError("gpool_planar: input has no rotation indices");
    return mean_pool(in);
}

ScalarKernel sumpool_cnn(const PlanarKernel& in)
{
    if (in.lifted) throw DomainError("sumpool_cnn: input carries rotation indices");
    return mean_pool(in);
}

}  // namespace entk::planar
