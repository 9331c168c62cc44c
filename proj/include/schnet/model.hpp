#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "schnet/graph.hpp"
#include "schnet/tensor.hpp"

namespace schnet {

struct ModelConfig {
    std::size_t n_features = 64;
    std::size_t n_interactions = 3;
    double rbf_min = 0.0;       // Angstrom
    double rbf_spacing = 0.1;   // Angstrom
    std::size_t rbf_count = 300;
    double rbf_gamma = 10.0;    // 1/Angstrom^2
    std::size_t max_atomic_number = 100;
    bool include_self_pairs = false;

    void validate() const;
    std::vector<double> rbf_centers() const;
};

// Label standardization. Energies map through (E - mean) / std; forces
// scale by 1/std only (the mean shift has zero gradient).
struct Normalizer {
    double mean = 0.0;
    double std_dev = 1.0;

    double normalize_energy(double e) const { return (e - mean) / std_dev; }
    double denormalize_energy(double e) const { return e * std_dev + mean; }
};

// All ordered interaction pairs within each molecule of a (possibly
// batched) system. Indices are global row indices into the concatenated
// position array.
struct PairList {
    std::vector<std::int64_t> first;   // receiving atom i
    std::vector<std::int64_t> second;  // neighbor atom j

    std::size_t size() const { return first.size(); }
};

// Complete pair list (no cutoff) from per-atom molecule ids.
PairList build_pairs(const std::vector<std::int64_t>& mol_index,
                     bool include_self_pairs);

struct Param {
    std::string name;
    Tensor value;
};

class SchNetModel {
public:
    SchNetModel(ModelConfig config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    std::vector<Param>& params() { return params_; }
    const std::vector<Param>& params() const { return params_; }
    std::size_t param_count() const;

    Normalizer normalizer;

    struct Forward {
        ad::Variable energies;   // [n_molecules x 1], normalized units
        ad::Variable positions;  // leaf, [n_atoms x 3]
        std::vector<ad::Variable> param_vars;  // leaves, params() order
    };

    // Builds the full network on g for a concatenated batch of molecules.
    // mol_index maps each atom to its molecule slot in [0, n_molecules).
    Forward forward(ad::Graph& g, const std::vector<int>& atomic_numbers,
                    const Tensor& positions,
                    const std::vector<std::int64_t>& mol_index,
                    std::size_t n_molecules) const;

    // Single-molecule convenience API; energies in kcal/mol, forces in
    // kcal/mol/Angstrom (denormalized).
    double predict_energy(const std::vector<int>& atomic_numbers,
                          const Tensor& positions) const;
    std::pair<double, Tensor> predict_energy_forces(
        const std::vector<int>& atomic_numbers, const Tensor& positions) const;

    // Filter response W(d) of one interaction block on a distance grid;
    // result is [d_values.size() x n_features].
    Tensor sample_filters(std::size_t block, const std::vector<double>& d_values) const;

private:
    ModelConfig config_;
    std::vector<Param> params_;

    const Tensor& param(const std::string& name) const;
    ad::Variable filter_network(ad::Graph& g, ad::Variable expanded,
                                const std::vector<ad::Variable>& pv,
                                std::size_t block) const;
    std::size_t param_index(const std::string& name) const;
};

}  // namespace schnet
