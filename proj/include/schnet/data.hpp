#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "schnet/model.hpp"
#include "schnet/tensor.hpp"

namespace schnet::data {

struct Conformation {
    std::vector<int> atomic_numbers;
    Tensor positions;                   // [n x 3] Angstrom
    std::optional<double> energy;       // kcal/mol
    std::optional<Tensor> forces;       // [n x 3] kcal/mol/Angstrom
    std::string molecule_id;

    std::size_t n_atoms() const { return atomic_numbers.size(); }
};

struct Dataset {
    std::vector<Conformation> frames;
    std::string provenance;

    std::size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
};

// Element symbol <-> atomic number. Throws on unknown symbols.
int symbol_to_z(const std::string& symbol);
const std::string& z_to_symbol(int z);

// Extended XYZ. Line 1: atom count; line 2: key=value pairs with a
// required energy= key on labeled frames; then one line per atom:
// symbol x y z [fx fy fz].
Dataset parse_extxyz(const std::string& path);
void write_extxyz(const std::string& path, const Dataset& ds);

enum class SplitMode { random, molecule_wise };

struct SplitSpec {
    SplitMode mode = SplitMode::random;
    std::size_t n_train = 0;
    std::size_t n_val = 0;
    std::uint64_t seed = 0;
};

struct Split {
    Dataset train, val, test;
};

Split split(const Dataset& ds, const SplitSpec& spec);

struct MiniBatch {
    std::vector<int> atomic_numbers;       // concatenated
    Tensor positions;                      // [total_atoms x 3]
    std::vector<std::int64_t> mol_index;   // per-atom molecule slot
    std::vector<std::size_t> atom_counts;  // per molecule
    std::vector<double> energies;          // per molecule, empty if unlabeled
    Tensor forces;                         // [total_atoms x 3], empty if unlabeled
    bool has_energies = false;
    bool has_forces = false;

    std::size_t n_molecules() const { return atom_counts.size(); }
    std::size_t n_atoms() const { return atomic_numbers.size(); }
};

MiniBatch make_batch(const Dataset& ds, const std::vector<std::size_t>& indices);

// Deterministic shuffled epoch: returns batches covering every frame once.
std::vector<MiniBatch> batch_iter(const Dataset& ds, std::size_t batch_size,
                                  std::uint64_t shuffle_seed);

// Pairwise Morse potential used as desk-scale ground truth:
// E = sum_{i<j} D_e ((1 - exp(-a (r - r_e)))^2 - 1).
struct MorsePair {
    int z1 = 0, z2 = 0;
    double well_depth = 1.0;      // D_e, kcal/mol
    double stiffness = 1.0;       // a, 1/Angstrom
    double equilibrium = 1.0;     // r_e, Angstrom
};

struct SyntheticOracle {
    std::vector<MorsePair> pairs;
    MorsePair defaults{0, 0, 50.0, 1.5, 1.2};

    const MorsePair& lookup(int z1, int z2) const;
    double energy(const std::vector<int>& z, const Tensor& positions) const;
    Tensor forces(const std::vector<int>& z, const Tensor& positions) const;
};

Dataset generate_synthetic(const SyntheticOracle& oracle,
                           const Conformation& tmpl, std::size_t n_frames,
                           double displacement_scale, std::uint64_t seed);

// Population mean/std of the training energies; std clamped to 1 when the
// energies are constant.
Normalizer normalizer_fit(const Dataset& train);

}  // namespace schnet::data
