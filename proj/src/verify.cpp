#include "schnet/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace schnet::verify {

double IsometrySampler::uniform01() {
    return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
}

double IsometrySampler::gauss() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::array<double, 9> IsometrySampler::rotation() {
    // Normalized Gaussian quaternion is uniform over SO(3).
    double q[4];
    double n = 0.0;
    for (double& x : q) {
        x = gauss();
        n += x * x;
    }
    n = std::sqrt(n);
    for (double& x : q) x /= n;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
            2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)};
}

std::array<double, 9> IsometrySampler::rotoreflection() {
    std::array<double, 9> q = rotation();
    for (std::size_t k = 0; k < 3; ++k) q[k * 3 + 2] = -q[k * 3 + 2];
    return q;
}

std::array<double, 3> IsometrySampler::translation(double max_norm) {
    std::array<double, 3> t;
    double n2 = 0.0;
    for (double& x : t) {
        x = gauss();
        n2 += x * x;
    }
    const double r = uniform01() * max_norm / std::max(std::sqrt(n2), 1e-300);
    for (double& x : t) x *= r;
    return t;
}

std::vector<std::size_t> IsometrySampler::permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng_() % i;
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

Tensor apply_linear(const Tensor& positions, const std::array<double, 9>& q) {
    Tensor out(positions.shape);
    for (std::size_t i = 0; i < positions.shape[0]; ++i)
        for (std::size_t r = 0; r < 3; ++r)
            out(i, r) = q[r * 3 + 0] * positions(i, 0) +
                        q[r * 3 + 1] * positions(i, 1) +
                        q[r * 3 + 2] * positions(i, 2);
    return out;
}

Tensor apply_translation(const Tensor& positions, const std::array<double, 3>& t) {
    Tensor out = positions;
    for (std::size_t i = 0; i < positions.shape[0]; ++i)
        for (std::size_t r = 0; r < 3; ++r) out(i, r) += t[r];
    return out;
}

bool Report::all_pass() const {
    return std::all_of(records.begin(), records.end(),
                       [](const CheckRecord& r) { return r.pass; });
}

double Report::worst(const std::string& check) const {
    double w = 0.0;
    for (const auto& r : records)
        if (r.check == check) w = std::max(w, r.metric);
    return w;
}

void Report::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "check,trial,metric,tolerance,pass\n";
    for (const auto& r : records)
        out << r.check << "," << r.trial << "," << r.metric << ","
            << r.tolerance << "," << (r.pass ? 1 : 0) << "\n";
}

Report check_invariances(const ForceField& field,
                         const std::vector<data::Conformation>& molecules,
                         std::size_t n_trials, std::uint64_t seed,
                         const InvarianceTolerances& tol) {
    Report report;
    if (n_trials == 0 || molecules.empty()) return report;
    IsometrySampler iso(seed);
    for (std::size_t trial = 0; trial < n_trials; ++trial) {
        const data::Conformation& c = molecules[trial % molecules.size()];
        const auto& z = c.atomic_numbers;
        const Tensor& r = c.positions;
        auto [e0, f0] = field.energy_forces(z, r);
        const double escale = 1.0 + std::abs(e0);

        auto q = (trial % 2 == 0) ? iso.rotation() : iso.rotoreflection();
        const double e_rot = field.energy(z, apply_linear(r, q));
        report.records.push_back({"rotation_invariance", trial,
                                  std::abs(e_rot - e0) / escale, tol.energy_rel,
                                  std::abs(e_rot - e0) <= tol.energy_rel * escale});

        const double e_tr =
            field.energy(z, apply_translation(r, iso.translation(100.0)));
        report.records.push_back({"translation_invariance", trial,
                                  std::abs(e_tr - e0) / escale, tol.energy_rel,
                                  std::abs(e_tr - e0) <= tol.energy_rel * escale});

        auto perm = iso.permutation(z.size());
        std::vector<int> zp(z.size());
        Tensor rp(r.shape);
        for (std::size_t i = 0; i < z.size(); ++i) {
            zp[i] = z[perm[i]];
            for (std::size_t k = 0; k < 3; ++k) rp(i, k) = r(perm[i], k);
        }
        auto [e_perm, f_perm] = field.energy_forces(zp, rp);
        double perm_dev = std::abs(e_perm - e0);
        for (std::size_t i = 0; i < z.size(); ++i)
            for (std::size_t k = 0; k < 3; ++k)
                perm_dev = std::max(perm_dev,
                                    std::abs(f_perm(i, k) - f0(perm[i], k)));
        report.records.push_back({"permutation_invariance", trial, perm_dev,
                                  tol.permutation, perm_dev <= tol.permutation});

        auto [e_q, f_q] = field.energy_forces(z, apply_linear(r, q));
        const Tensor qf0 = apply_linear(f0, q);
        double equiv = 0.0;
        for (std::size_t k = 0; k < f_q.size(); ++k)
            equiv = std::max(equiv, std::abs(f_q.data[k] - qf0.data[k]));
        report.records.push_back({"force_equivariance", trial, equiv,
                                  tol.force_equivariance,
                                  equiv <= tol.force_equivariance});

        double net[3] = {0, 0, 0};
        for (std::size_t i = 0; i < z.size(); ++i)
            for (std::size_t k = 0; k < 3; ++k) net[k] += f0(i, k);
        const double net_norm = std::max({std::abs(net[0]), std::abs(net[1]),
                                          std::abs(net[2])});
        report.records.push_back(
            {"net_force", trial, net_norm, tol.net_force, net_norm <= tol.net_force});
    }
    return report;
}

double check_force_consistency(const ForceField& field,
                               const data::Conformation& conf, double h) {
    if (h <= 0.0) throw std::invalid_argument("check_force_consistency: h > 0");
    const auto& z = conf.atomic_numbers;
    auto [e0, f] = field.energy_forces(z, conf.positions);
    (void)e0;
    double fmax = 0.0;
    for (double v : f.data) fmax = std::max(fmax, std::abs(v));
    if (fmax == 0.0) return 0.0;  // isolated atom: forces exactly zero
    double worst = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t k = 0; k < 3; ++k) {
            Tensor rp = conf.positions;
            rp(i, k) += h;
            Tensor rm = conf.positions;
            rm(i, k) -= h;
            const double fd = -(field.energy(z, rp) - field.energy(z, rm)) /
                              (2.0 * h);
            worst = std::max(worst, std::abs(fd - f(i, k)) / fmax);
        }
    return worst;
}

namespace {
double work_residual(const ForceField& field, const std::vector<int>& z,
                     const Tensor& r_start, const Tensor& r_end, std::size_t m) {
    const double e_start = field.energy(z, r_start);
    const double e_end = field.energy(z, r_end);
    double work = 0.0;
    const std::size_t n = r_start.size();
    for (std::size_t k = 0; k < m; ++k) {
        const double tm = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
        Tensor mid(r_start.shape);
        for (std::size_t i = 0; i < n; ++i)
            mid.data[i] = (1.0 - tm) * r_start.data[i] + tm * r_end.data[i];
        auto [e, f] = field.energy_forces(z, mid);
        (void)e;
        for (std::size_t i = 0; i < n; ++i)
            work += f.data[i] * (r_end.data[i] - r_start.data[i]) /
                    static_cast<double>(m);
    }
    return std::abs(e_end - e_start + work);
}
}  // namespace

std::pair<double, double> check_work_integral(const ForceField& field,
                                              const std::vector<int>& z,
                                              const Tensor& r_start,
                                              const Tensor& r_end,
                                              std::size_t m) {
    if (m == 0) throw std::invalid_argument("check_work_integral: m >= 1");
    bool zero_length = r_start.data == r_end.data;
    if (zero_length) return {0.0, 0.0};
    return {work_residual(field, z, r_start, r_end, m),
            work_residual(field, z, r_start, r_end, 2 * m)};
}

MdState velocity_verlet(const ForceField& field, const std::vector<int>& z,
                        MdState state, std::size_t n_steps) {
    if (state.dt <= 0.0) throw std::invalid_argument("velocity_verlet: dt > 0");
    const std::size_t n = state.positions.size();
    auto check_finite = [&](const Tensor& f, std::size_t step) {
        for (double v : f.data)
            if (!std::isfinite(v))
                throw std::runtime_error("velocity_verlet: non-finite force at step " +
                                         std::to_string(step));
    };
    auto [e, f] = field.energy_forces(z, state.positions);
    check_finite(f, state.step);
    const double inv_m = 1.0 / state.mass;
    for (std::size_t s = 0; s < n_steps; ++s) {
        for (std::size_t i = 0; i < n; ++i)
            state.positions.data[i] += state.velocities.data[i] * state.dt +
                                       0.5 * f.data[i] * inv_m * state.dt *
                                           state.dt;
        auto [e_new, f_new] = field.energy_forces(z, state.positions);
        check_finite(f_new, state.step + 1);
        for (std::size_t i = 0; i < n; ++i)
            state.velocities.data[i] +=
                0.5 * (f.data[i] + f_new.data[i]) * inv_m * state.dt;
        e = e_new;
        f = f_new;
        ++state.step;
        double ke = 0.0;
        for (double v : state.velocities.data) ke += 0.5 * state.mass * v * v;
        state.kinetic_energy.push_back(ke);
        state.total_energy.push_back(ke + e);
    }
    return state;
}

data::Conformation random_molecule(std::mt19937_64& rng, std::size_t n_atoms) {
    static const int kTypes[4] = {1, 6, 7, 8};
    data::Conformation c;
    c.positions = Tensor({n_atoms, 3});
    auto u = [&rng]() {
        return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    };
    for (std::size_t i = 0; i < n_atoms; ++i) {
        c.atomic_numbers.push_back(kTypes[rng() % 4]);
        for (std::size_t k = 0; k < 3; ++k)
            c.positions(i, k) = 4.0 * u() - 2.0 +
                                1.5 * static_cast<double>(i);  // spread atoms out
    }
    return c;
}

}  // namespace schnet::verify
