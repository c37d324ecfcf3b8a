#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "entk/data.hpp"
#include "entk/errors.hpp"
#include "entk/parallel.hpp"

namespace entk::data {

namespace {

bool parse_double(const std::string& s, double& v)
{
    std::size_t used = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == s.size() && std::isfinite(v);
}

std::array<double, 3> sub(const std::array<double, 3>& a, const std::array<double, 3>& b)
{
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

double norm(const std::array<double, 3>& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

const char* symbol_of(int z)
{
    switch (z) {
    case 1: return "H";
    case 6: return "C";
    case 7: return "N";
    case 8: return "O";
    case 9: return "F";
    }
    return "?";
}

}  // namespace

int atomic_number(const std::string& symbol)
{
    for (int z : kElements)
        if (symbol == symbol_of(z)) return z;
    return 0;
}

std::vector<Molecule> load_xyz(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");
    std::vector<Molecule> out;
    std::string line;
    long lineno = 0;
    auto next = [&](std::string& l) {
        if (!std::getline(is, l)) return false;
        ++lineno;
        if (!l.empty() && l.back() == '\r') l.pop_back();
        return true;
    };
    while (next(line)) {
        std::stringstream head(line);
        std::string tok, extra;
        if (!(head >> tok)) continue;  // blank separator
        if (head >> extra) throw ParseError(path, lineno, "expected an atom count");
        long count = 0;
        try {
            std::size_t used = 0;
            count = std::stol(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError(path, lineno, "expected an atom count, got '" + tok + "'");
        }
        if (count < 1 || count > kMaxAtoms) throw ParseError(path, lineno, "atom count must be in [1, 29]");
        Molecule m;
        if (!next(line)) throw ParseError(path, lineno, "missing comment line");
        std::stringstream cs(line);
        std::string label;
        if (!(cs >> label) || !parse_double(label, m.energy)) throw ParseError(path, lineno, "comment line must start with the energy");
        for (long a = 0; a < count; ++a) {
            if (!next(line)) throw ParseError(path, lineno, "file ends inside a molecule");
            std::stringstream ls(line);
            std::string el, xs[3];
            if (!(ls >> el >> xs[0] >> xs[1] >> xs[2])) throw ParseError(path, lineno, "expected 'element x y z'");
            Atom at;
            at.element = el;
            at.z = atomic_number(el);
            if (at.z == 0) throw ParseError(path, lineno, "unknown element '" + el + "'");
            for (int k = 0; k < 3; ++k)
                if (!parse_double(xs[k], at.pos[k])) throw ParseError(path, lineno, "malformed coordinate '" + xs[k] + "'");
            m.atoms.push_back(at);
        }
        out.push_back(std::move(m));
    }
    return out;
}

void write_xyz(const std::string& path, const std::vector<Molecule>& mols)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << std::setprecision(17);
    for (const auto& m : mols) {
        os << m.atoms.size() << '\n' << m.energy << '\n';
        for (const auto& a : m.atoms) os << a.element << ' ' << a.pos[0] << ' ' << a.pos[1] << ' ' << a.pos[2] << '\n';
    }
    if (!os) throw IoError("write to '" + path + "' failed");
}

double beta_constant()
{
    double c = std::cos(std::numbers::pi / 4.0) - 1.0;
    return c * c / std::log(20.0);
}

MoleculeFeatures featurize_molecule(const Molecule& m, const so3::S2Grid& grid)
{
    if (m.atoms.empty()) throw DomainError("featurize_molecule: molecule has no atoms");
    if (m.atoms.size() > static_cast<std::size_t>(kMaxAtoms)) throw DomainError("featurize_molecule: more than 29 atoms");
    const double inv_beta = 1.0 / beta_constant();
    const std::size_t P = grid.points();
    std::vector<std::array<double, 3>> x(P);
    for (int j = 0; j < grid.n_theta(); ++j)
        for (int k = 0; k < grid.n_phi(); ++k) x[static_cast<std::size_t>(j) * grid.n_phi() + k] = so3::unit_vector(grid.theta[j], grid.phi[k]);

    MoleculeFeatures out;
    out.padding = kMaxAtoms - static_cast<int>(m.atoms.size());
    for (std::size_t i = 0; i < m.atoms.size(); ++i) {
        AtomSignal s;
        s.values.assign(kChannels * P, 0.0);
        for (std::size_t j = 0; j < m.atoms.size(); ++j) {
            if (j == i) continue;
            auto r = sub(m.atoms[j].pos, m.atoms[i].pos);
            double d = norm(r);
            if (!(d >= 1e-8)) throw DegenerateGeometryError("featurize_molecule: atoms " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
            int e = static_cast<int>(std::find(kElements.begin(), kElements.end(), m.atoms[j].z) - kElements.begin());
            if (e >= static_cast<int>(kElements.size())) throw DomainError("featurize_molecule: unsupported element");
            std::array<double, 3> u{r[0] / d, r[1] / d, r[2] / d};
            for (int pi = 0; pi < 2; ++pi) {
                double amp = m.atoms[i].z * m.atoms[j].z / std::pow(d, kPowers[pi]);
                double* dst = s.values.data() + static_cast<std::size_t>(e * 2 + pi) * P;
                for (std::size_t p = 0; p < P; ++p) {
                    double c = u[0] * x[p][0] + u[1] * x[p][1] + u[2] * x[p][2] - 1.0;
                    dst[p] += amp * std::exp(-inv_beta * c * c);
                }
            }
        }
        out.atoms.push_back(std::move(s));
    }
    return out;
}

std::vector<double> normalize_channels(std::vector<MoleculeFeatures>& set)
{
    std::vector<double> ss(kChannels, 0.0);
    std::vector<std::size_t> cnt(kChannels, 0);
    for (const auto& f : set)
        for (const auto& a : f.atoms) {
            std::size_t P = a.values.size() / kChannels;
            for (int c = 0; c < kChannels; ++c) {
                for (std::size_t p = 0; p < P; ++p) ss[c] += a.values[c * P + p] * a.values[c * P + p];
                cnt[c] += P;
            }
        }
    std::vector<double> scale(kChannels, 1.0);
    for (int c = 0; c < kChannels; ++c) {
        double rms = cnt[c] ? std::sqrt(ss[c] / static_cast<double>(cnt[c])) : 0.0;
        scale[c] = rms > 0.0 ? 1.0 / rms : 1.0;
    }
    for (auto& f : set) apply_channel_scale(f, scale);
    return scale;
}

void apply_channel_scale(MoleculeFeatures& f, const std::vector<double>& scale)
{
    if (scale.size() != static_cast<std::size_t>(kChannels)) throw ShapeError("channel scale has the wrong length");
    for (auto& a : f.atoms) {
        std::size_t P = a.values.size() / kChannels;
        for (int c = 0; c < kChannels; ++c)
            for (std::size_t p = 0; p < P; ++p) a.values[c * P + p] *= scale[c];
    }
}

PipelineInput molecule_input(const MoleculeFeatures& f, const so3::S2Grid& grid, int L)
{
    PipelineInput in;
    const std::size_t P = grid.points();
    for (const auto& a : f.atoms) {
        if (a.values.size() != kChannels * P) throw ShapeError("molecule_input: signal does not match the grid");
        SphericalInput s;
        s.coeffs.L = L;
        s.coeffs.channels = kChannels;
        s.coeffs.data.reserve(static_cast<std::size_t>(kChannels) * so3::s2_size(L));
        for (int c = 0; c < kChannels; ++c) {
            auto co = so3::sht_forward(grid, std::span<const double>(a.values.data() + c * P, P), L);
            s.coeffs.data.insert(s.coeffs.data.end(), co.begin(), co.end());
        }
        s.samples = a.values;
        in.branches.emplace_back(std::move(s));
    }
    return in;
}

Molecule rotate_molecule(const Molecule& m, const so3::Rotation& r)
{
    Molecule out = m;
    for (auto& a : out.atoms) a.pos = so3::apply(r, a.pos);
    return out;
}

void canonical_order(Molecule& m)
{
    std::array<double, 3> c{};
    for (const auto& a : m.atoms)
        for (int k = 0; k < 3; ++k) c[k] += a.pos[k] / static_cast<double>(m.atoms.size());
    std::stable_sort(m.atoms.begin(), m.atoms.end(), [&](const Atom& a, const Atom& b) {
        if (a.z != b.z) return a.z > b.z;
        return norm(sub(a.pos, c)) < norm(sub(b.pos, c));
    });
}

so3::Rotation random_rotation(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    double q[4], n = 0.0;
    for (double& v : q) {
        v = nd(rng);
        n += v * v;
    }
    n = std::sqrt(n);
    double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
    return {1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
            2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
            2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y)};
}

namespace {

// Morse pair term scaled by the nuclear charges plus a bond-angle term.
double synth_energy(const Molecule& m)
{
    const std::size_t n = m.atoms.size();
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double r = norm(sub(m.atoms[i].pos, m.atoms[j].pos));
            double s = std::sqrt(static_cast<double>(m.atoms[i].z * m.atoms[j].z));
            double x = std::exp(-1.5 * (r - 1.3));
            e += s * (x * x - 2.0 * x);
        }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) {
                if (j == i || k == i) continue;
                auto a = sub(m.atoms[j].pos, m.atoms[i].pos), b = sub(m.atoms[k].pos, m.atoms[i].pos);
                double ra = norm(a), rb = norm(b);
                if (ra > 2.0 || rb > 2.0) continue;
                double c = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (ra * rb);
                e += 0.5 * (c + 0.33) * (c + 0.33);
            }
    return e;
}

}  // namespace

std::vector<Molecule> synth_molecules(int n, std::uint64_t seed, int min_atoms, int max_atoms)
{
    if (n < 0 || min_atoms < 1 || max_atoms < min_atoms || max_atoms > kMaxAtoms) throw ConfigError("synth_molecules: invalid sizes");
    std::vector<Molecule> out(static_cast<std::size_t>(n));
    parallel_for(out.size(), [&](std::size_t idx) {
        std::mt19937_64 rng(mix_seed(seed, idx));
        std::uniform_int_distribution<int> count(min_atoms, max_atoms);
        std::discrete_distribution<int> elem({4.0, 3.0, 1.0, 1.0, 0.5});
        std::uniform_real_distribution<double> bond(1.0, 1.6);
        std::normal_distribution<double> nd;
        Molecule m;
        int na = count(rng);
        while (static_cast<int>(m.atoms.size()) < na) {
            Atom a;
            a.z = kElements[elem(rng)];
            a.element = symbol_of(a.z);
            if (!m.atoms.empty()) {
                std::uniform_int_distribution<std::size_t> pick(0, m.atoms.size() - 1);
                const Atom& anchor = m.atoms[pick(rng)];
                std::array<double, 3> d{nd(rng), nd(rng), nd(rng)};
                double dn = norm(d);
                double r = bond(rng);
                for (int k = 0; k < 3; ++k) a.pos[k] = anchor.pos[k] + r * d[k] / dn;
                bool clash = false;
                for (const auto& b : m.atoms) clash = clash || norm(sub(a.pos, b.pos)) < 0.95;
                if (clash) continue;
            }
            m.atoms.push_back(a);
        }
        m.energy = synth_energy(m);
        m = rotate_molecule(m, random_rotation(mix_seed(seed ^ 0x5bd1e995ull, idx)));
        canonical_order(m);
        out[idx] = std::move(m);
    });
    return out;
}

}  // namespace entk::data
