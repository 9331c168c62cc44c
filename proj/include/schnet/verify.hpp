#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "schnet/data.hpp"
#include "schnet/model.hpp"

namespace schnet::verify {

// Any conservative potential with analytic forces; lets the harness run on
// the trained model and on analytic test fixtures alike.
struct ForceField {
    virtual ~ForceField() = default;
    virtual double energy(const std::vector<int>& z, const Tensor& r) const = 0;
    virtual std::pair<double, Tensor> energy_forces(const std::vector<int>& z,
                                                    const Tensor& r) const = 0;
};

struct ModelField final : ForceField {
    const SchNetModel* model;
    explicit ModelField(const SchNetModel& m) : model(&m) {}
    double energy(const std::vector<int>& z, const Tensor& r) const override {
        return model->predict_energy(z, r);
    }
    std::pair<double, Tensor> energy_forces(const std::vector<int>& z,
                                            const Tensor& r) const override {
        return model->predict_energy_forces(z, r);
    }
};

// Random isometries: rotations uniform over SO(3) via normalized
// quaternions, plus reflections, translations and atom permutations.
class IsometrySampler {
public:
    explicit IsometrySampler(std::uint64_t seed) : rng_(seed) {}

    std::array<double, 9> rotation();
    std::array<double, 9> rotoreflection();
    std::array<double, 3> translation(double max_norm);
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::mt19937_64 rng_;
    double uniform01();
    double gauss();
};

Tensor apply_linear(const Tensor& positions, const std::array<double, 9>& q);
Tensor apply_translation(const Tensor& positions, const std::array<double, 3>& t);

struct CheckRecord {
    std::string check;
    std::size_t trial;
    double metric;
    double tolerance;
    bool pass;
};

struct Report {
    std::vector<CheckRecord> records;

    bool all_pass() const;
    double worst(const std::string& check) const;
    void write_csv(const std::string& path) const;
};

struct InvarianceTolerances {
    double energy_rel = 1e-8;        // rotation/translation, x (1 + |E|)
    double permutation = 1e-10;
    double force_equivariance = 1e-6;
    double net_force = 1e-8;
};

// Rotation/translation/permutation invariance of the energy, force
// equivariance and zero net force, over random trials.
Report check_invariances(const ForceField& field,
                         const std::vector<data::Conformation>& molecules,
                         std::size_t n_trials, std::uint64_t seed,
                         const InvarianceTolerances& tol = {});

// Worst relative error of analytic forces against central differences of
// the energy with step h.
double check_force_consistency(const ForceField& field,
                               const data::Conformation& conf, double h);

// Midpoint-rule work integral along the straight-line path between two
// conformations; returns |E(end) - E(start) + sum F . dr| at m and 2m steps.
std::pair<double, double> check_work_integral(const ForceField& field,
                                              const std::vector<int>& z,
                                              const Tensor& r_start,
                                              const Tensor& r_end,
                                              std::size_t m);

struct MdState {
    Tensor positions;    // [n x 3]
    Tensor velocities;   // [n x 3], reduced units
    double mass = 1.0;
    double dt = 1e-3;
    std::size_t step = 0;
    std::vector<double> total_energy;  // kinetic + potential per step
    std::vector<double> kinetic_energy;
};

// Standard velocity-Verlet integration; throws on non-finite forces,
// naming the failing step.
MdState velocity_verlet(const ForceField& field, const std::vector<int>& z,
                        MdState state, std::size_t n_steps);

// Random small molecule for property suites: 2-4 element types, positions
// scattered so no two atoms coincide.
data::Conformation random_molecule(std::mt19937_64& rng, std::size_t n_atoms);

}  // namespace schnet::verify
