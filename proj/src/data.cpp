#include "schnet/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace schnet::data {

namespace {

const std::array<std::string, 119> kSymbols = {
    "X",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
    "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
    "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
    "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
    "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
    "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
    "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am",
    "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh",
    "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

[[noreturn]] void parse_fail(const std::string& path, std::size_t line,
                             const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::map<std::string, std::string> parse_kv(const std::string& line) {
    std::map<std::string, std::string> kv;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string val = tok.substr(eq + 1);
        if (!val.empty() && val.front() == '"' && val.back() != '"') {
            // quoted value containing spaces
            std::string rest;
            while (ss >> rest) {
                val += " " + rest;
                if (rest.back() == '"') break;
            }
        }
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
            val = val.substr(1, val.size() - 2);
        kv[tok.substr(0, eq)] = val;
    }
    return kv;
}

}  // namespace

int symbol_to_z(const std::string& symbol) {
    for (std::size_t z = 1; z < kSymbols.size(); ++z)
        if (kSymbols[z] == symbol) return static_cast<int>(z);
    throw std::invalid_argument("unknown element symbol: " + symbol);
}

const std::string& z_to_symbol(int z) {
    if (z < 1 || static_cast<std::size_t>(z) >= kSymbols.size())
        throw std::invalid_argument("atomic number out of range: " +
                                    std::to_string(z));
    return kSymbols[static_cast<std::size_t>(z)];
}

Dataset parse_extxyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Dataset ds;
    ds.provenance = path;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() && in.peek() == EOF) break;
        std::size_t n = 0;
        try {
            n = std::stoul(line);
        } catch (const std::exception&) {
            parse_fail(path, lineno, "expected atom count, got '" + line + "'");
        }
        if (!std::getline(in, line))
            parse_fail(path, lineno + 1, "missing comment line");
        ++lineno;
        auto kv = parse_kv(line);
        Conformation c;
        if (auto it = kv.find("energy"); it != kv.end())
            c.energy = std::stod(it->second);
        if (auto it = kv.find("molecule_id"); it != kv.end())
            c.molecule_id = it->second;
        c.positions = Tensor({n, 3});
        bool any_forces = false;
        Tensor forces({n, 3});
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::getline(in, line))
                parse_fail(path, lineno + 1, "unexpected end of frame");
            ++lineno;
            std::istringstream ss(line);
            std::string sym;
            double x, y, z;
            if (!(ss >> sym >> x >> y >> z))
                parse_fail(path, lineno, "malformed atom line '" + line + "'");
            c.atomic_numbers.push_back(symbol_to_z(sym));
            c.positions(i, 0) = x;
            c.positions(i, 1) = y;
            c.positions(i, 2) = z;
            double fx, fy, fz;
            if (ss >> fx >> fy >> fz) {
                any_forces = true;
                forces(i, 0) = fx;
                forces(i, 1) = fy;
                forces(i, 2) = fz;
            }
            for (double v : {x, y, z})
                if (!std::isfinite(v)) parse_fail(path, lineno, "non-finite coordinate");
        }
        if (any_forces) c.forces = std::move(forces);
        ds.frames.push_back(std::move(c));
    }
    return ds;
}

void write_extxyz(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    for (const auto& c : ds.frames) {
        out << c.n_atoms() << "\n";
        if (c.energy) out << "energy=" << *c.energy << " ";
        if (!c.molecule_id.empty()) out << "molecule_id=" << c.molecule_id << " ";
        out << "Properties=species:S:1:pos:R:3";
        if (c.forces) out << ":forces:R:3";
        out << "\n";
        for (std::size_t i = 0; i < c.n_atoms(); ++i) {
            out << z_to_symbol(c.atomic_numbers[i]) << " " << c.positions(i, 0)
                << " " << c.positions(i, 1) << " " << c.positions(i, 2);
            if (c.forces)
                out << " " << (*c.forces)(i, 0) << " " << (*c.forces)(i, 1)
                    << " " << (*c.forces)(i, 2);
            out << "\n";
        }
    }
}

Split split(const Dataset& ds, const SplitSpec& spec) {
    if (spec.n_train + spec.n_val > ds.size())
        throw std::invalid_argument("split: n_train + n_val exceeds dataset size");
    std::mt19937_64 rng(spec.seed);
    Split out;
    if (spec.mode == SplitMode::random) {
        std::vector<std::size_t> order(ds.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t k = 0; k < order.size(); ++k) {
            const Conformation& c = ds.frames[order[k]];
            if (k < spec.n_train)
                out.train.frames.push_back(c);
            else if (k < spec.n_train + spec.n_val)
                out.val.frames.push_back(c);
            else
                out.test.frames.push_back(c);
        }
    } else {
        // Assign whole molecule_ids to partitions; greedy fill by shuffled
        // id order so that no id spans two partitions.
        std::vector<std::string> ids;
        std::map<std::string, std::vector<std::size_t>> by_id;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const std::string& id = ds.frames[i].molecule_id;
            if (!by_id.count(id)) ids.push_back(id);
            by_id[id].push_back(i);
        }
        std::shuffle(ids.begin(), ids.end(), rng);
        std::size_t assigned_train = 0, assigned_val = 0;
        for (const auto& id : ids) {
            const auto& members = by_id[id];
            Dataset* dst;
            if (assigned_train < spec.n_train) {
                dst = &out.train;
                assigned_train += members.size();
            } else if (assigned_val < spec.n_val) {
                dst = &out.val;
                assigned_val += members.size();
            } else {
                dst = &out.test;
            }
            for (auto i : members) dst->frames.push_back(ds.frames[i]);
        }
    }
    return out;
}

MiniBatch make_batch(const Dataset& ds, const std::vector<std::size_t>& indices) {
    MiniBatch b;
    b.has_energies = true;
    b.has_forces = true;
    std::size_t total = 0;
    for (auto i : indices) total += ds.frames[i].n_atoms();
    b.positions = Tensor({total, 3});
    b.forces = Tensor({total, 3});
    std::size_t row = 0;
    std::int64_t mol = 0;
    for (auto i : indices) {
        const Conformation& c = ds.frames[i];
        b.atom_counts.push_back(c.n_atoms());
        if (c.energy)
            b.energies.push_back(*c.energy);
        else
            b.has_energies = false;
        if (!c.forces) b.has_forces = false;
        for (std::size_t a = 0; a < c.n_atoms(); ++a, ++row) {
            b.atomic_numbers.push_back(c.atomic_numbers[a]);
            b.mol_index.push_back(mol);
            for (std::size_t k = 0; k < 3; ++k) {
                b.positions(row, k) = c.positions(a, k);
                if (c.forces) b.forces(row, k) = (*c.forces)(a, k);
            }
        }
        ++mol;
    }
    return b;
}

std::vector<MiniBatch> batch_iter(const Dataset& ds, std::size_t batch_size,
                                  std::uint64_t shuffle_seed) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<MiniBatch> out;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
        const std::size_t end = std::min(begin + batch_size, order.size());
        out.push_back(make_batch(
            ds, std::vector<std::size_t>(order.begin() + begin,
                                         order.begin() + end)));
    }
    return out;
}

const MorsePair& SyntheticOracle::lookup(int z1, int z2) const {
    for (const auto& p : pairs)
        if ((p.z1 == z1 && p.z2 == z2) || (p.z1 == z2 && p.z2 == z1)) return p;
    return defaults;
}

double SyntheticOracle::energy(const std::vector<int>& z,
                               const Tensor& positions) const {
    const std::size_t n = z.size();
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double r2 = 0.0;
            for (std::size_t k = 0; k < 3; ++k) {
                const double d = positions(i, k) - positions(j, k);
                r2 += d * d;
            }
            const double r = std::sqrt(r2);
            const MorsePair& m = lookup(z[i], z[j]);
            const double u = 1.0 - std::exp(-m.stiffness * (r - m.equilibrium));
            e += m.well_depth * (u * u - 1.0);
        }
    return e;
}

Tensor SyntheticOracle::forces(const std::vector<int>& z,
                               const Tensor& positions) const {
    const std::size_t n = z.size();
    Tensor f({n, 3});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double diff[3];
            double r2 = 0.0;
            for (std::size_t k = 0; k < 3; ++k) {
                diff[k] = positions(i, k) - positions(j, k);
                r2 += diff[k] * diff[k];
            }
            const double r = std::sqrt(r2);
            if (r == 0.0) continue;
            const MorsePair& m = lookup(z[i], z[j]);
            const double ex = std::exp(-m.stiffness * (r - m.equilibrium));
            // dE/dr = 2 D_e a (1 - e^{-a(r-r_e)}) e^{-a(r-r_e)}
            const double dedr = 2.0 * m.well_depth * m.stiffness * (1.0 - ex) * ex;
            for (std::size_t k = 0; k < 3; ++k) {
                const double g = dedr * diff[k] / r;  // dE/dr_i
                f(i, k) -= g;
                f(j, k) += g;
            }
        }
    return f;
}

Dataset generate_synthetic(const SyntheticOracle& oracle,
                           const Conformation& tmpl, std::size_t n_frames,
                           double displacement_scale, std::uint64_t seed) {
    if (displacement_scale < 0.0)
        throw std::invalid_argument("displacement_scale must be >= 0");
    std::mt19937_64 rng(seed);
    // Box-Muller keeps frame generation bit-reproducible across standard
    // library implementations.
    auto gauss = [&rng]() {
        const double u1 =
            (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
        const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    };
    Dataset ds;
    ds.provenance = "synthetic seed=" + std::to_string(seed);
    for (std::size_t f = 0; f < n_frames; ++f) {
        Conformation c;
        c.atomic_numbers = tmpl.atomic_numbers;
        c.molecule_id = tmpl.molecule_id.empty() ? "synthetic" : tmpl.molecule_id;
        c.positions = tmpl.positions;
        for (double& v : c.positions.data) v += displacement_scale * gauss();
        c.energy = oracle.energy(c.atomic_numbers, c.positions);
        c.forces = oracle.forces(c.atomic_numbers, c.positions);
        ds.frames.push_back(std::move(c));
    }
    return ds;
}

Normalizer normalizer_fit(const Dataset& train) {
    if (train.empty()) throw std::invalid_argument("normalizer_fit: empty dataset");
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : train.frames) {
        if (!c.energy)
            throw std::invalid_argument("normalizer_fit: unlabeled conformation");
        sum += *c.energy;
        ++n;
    }
    Normalizer norm;
    norm.mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (const auto& c : train.frames) {
        const double d = *c.energy - norm.mean;
        var += d * d;
    }
    var /= static_cast<double>(n);  // population variance
    norm.std_dev = var > 0.0 ? std::sqrt(var) : 1.0;
    return norm;
}

}  // namespace schnet::data
