#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "entk/pipeline.hpp"
#include "entk/planar.hpp"
#include "entk/so3.hpp"

namespace entk::data {

// ENTK1 tensor files: "ENTK1", u8 rank, u64 dims, float64 payload, all little-endian.
struct Tensor {
    std::vector<std::uint64_t> dims;
    std::vector<double> data;

    std::size_t size() const;
};

void write_tensor(const std::string& path, const Tensor& t);
// Reads ENTK1, or CSV (rank 2, rank 1 for a single column) when the magic is absent.
Tensor read_tensor(const std::string& path);
void write_csv(const std::string& path, const Tensor& t);
Tensor read_csv(const std::string& path);

struct Atom {
    std::string element;
    int z = 0;
    std::array<double, 3> pos{};
};

struct Molecule {
    std::vector<Atom> atoms;
    double energy = 0.0;
};

constexpr int kMaxAtoms = 29;
// Atomic numbers of the supported elements, in channel order.
constexpr std::array<int, 5> kElements{1, 6, 7, 8, 9};
constexpr std::array<int, 2> kPowers{2, 6};
constexpr int kChannels = 10;

int atomic_number(const std::string& symbol);  // 0 when unsupported
// Standard XYZ frames; the first token of each comment line is the energy.
std::vector<Molecule> load_xyz(const std::string& path);
void write_xyz(const std::string& path, const std::vector<Molecule>& mols);

// Smearing width: exp(-(cos(π/4) - 1)²/β) = 0.05.
double beta_constant();

struct AtomSignal {
    int channels = kChannels;
    std::vector<double> values;  // channel-major, channels × grid points
};

struct MoleculeFeatures {
    std::vector<AtomSignal> atoms;
    int padding = 0;  // atoms missing up to kMaxAtoms
};

// Channel (element e, power p) of atom i at x:
//   Σ_{j≠i, z_j = z_e} z_i z_e / |r_ij|^p · exp(-((r̂_ij·x) - 1)²/β),  r_ij = r_j - r_i.
MoleculeFeatures featurize_molecule(const Molecule& m, const so3::S2Grid& grid);
// Divides every channel by its RMS over all atoms and grid points of the set (zero channels stay zero).
std::vector<double> normalize_channels(std::vector<MoleculeFeatures>& set);
void apply_channel_scale(MoleculeFeatures& f, const std::vector<double>& scale);

// One branch per atom carrying the band-L coefficients and raw samples.
PipelineInput molecule_input(const MoleculeFeatures& f, const so3::S2Grid& grid, int L);

Molecule rotate_molecule(const Molecule& m, const so3::Rotation& r);
// Sort atoms by atomic number (descending), then distance to the centroid.
void canonical_order(Molecule& m);
// Small random molecules with a smooth rotation-invariant energy and random orientation.
std::vector<Molecule> synth_molecules(int n, std::uint64_t seed, int min_atoms = 3, int max_atoms = 8);
so3::Rotation random_rotation(std::uint64_t seed);

struct ImageDataset {
    std::vector<planar::Image> images;
    std::vector<int> labels;
};

// Class prototypes depend on seed only; stream selects an independent draw of
// samples (use different streams for train and test). Every sample is its
// class prototype at a random circular shift and quarter-turn pose plus noise.
ImageDataset synth_rotclass_dataset(int n_per_class, int classes, int height, int width, std::uint64_t seed,
                                    std::uint64_t stream = 0, double noise = 1.0);

}  // namespace entk::data
