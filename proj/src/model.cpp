#include "schnet/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace schnet {

using ad::Variable;

void ModelConfig::validate() const {
    if (n_features < 1) throw std::invalid_argument("n_features must be >= 1");
    if (n_interactions < 1)
        throw std::invalid_argument("n_interactions must be >= 1");
    if (rbf_count < 2) throw std::invalid_argument("rbf_count must be >= 2");
    if (rbf_spacing <= 0.0)
        throw std::invalid_argument("rbf_spacing must be positive");
    if (rbf_gamma <= 0.0) throw std::invalid_argument("rbf_gamma must be positive");
    if (max_atomic_number < 1)
        throw std::invalid_argument("max_atomic_number must be >= 1");
}

std::vector<double> ModelConfig::rbf_centers() const {
    std::vector<double> mu(rbf_count);
    for (std::size_t k = 0; k < rbf_count; ++k)
        mu[k] = rbf_min + static_cast<double>(k) * rbf_spacing;
    return mu;
}

PairList build_pairs(const std::vector<std::int64_t>& mol_index,
                     bool include_self_pairs) {
    PairList pl;
    const std::size_t n = mol_index.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (mol_index[i] != mol_index[j]) continue;
            if (i == j && !include_self_pairs) continue;
            pl.first.push_back(static_cast<std::int64_t>(i));
            pl.second.push_back(static_cast<std::int64_t>(j));
        }
    return pl;
}

namespace {

// Portable uniform double in (-bound, bound); avoids the
// implementation-defined std::uniform_real_distribution.
double uniform_sym(std::mt19937_64& rng, double bound) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
    return (2.0 * u - 1.0) * bound;
}

Tensor random_tensor(std::mt19937_64& rng, std::vector<std::size_t> shape,
                     double bound) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = uniform_sym(rng, bound);
    return t;
}

Variable rbf_expand(ad::Graph& g, Variable d, const ModelConfig& cfg) {
    const std::size_t p = d.value().size();
    const std::size_t k = cfg.rbf_count;
    Variable dmat = broadcast_cols(d, k);
    Variable centers = broadcast_rows(
        g.constant(Tensor({k}, cfg.rbf_centers())), p);
    return exp(scale(square(sub(dmat, centers)), -cfg.rbf_gamma));
}

}  // namespace

SchNetModel::SchNetModel(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
    config_.validate();
    std::mt19937_64 rng(seed);
    const std::size_t f = config_.n_features;
    const std::size_t k = config_.rbf_count;
    const std::size_t h = std::max<std::size_t>(1, f / 2);

    auto dense = [&](const std::string& name, std::size_t in, std::size_t out) {
        params_.push_back({name + ".weight",
                           random_tensor(rng, {in, out}, 1.0 / std::sqrt(in))});
        params_.push_back({name + ".bias", Tensor::zeros({out})});
    };

    params_.push_back({"embedding",
                       random_tensor(rng, {config_.max_atomic_number, f},
                                     1.0 / std::sqrt(f))});
    for (std::size_t b = 0; b < config_.n_interactions; ++b) {
        const std::string p = "block" + std::to_string(b) + ".";
        dense(p + "atomwise_in", f, f);
        dense(p + "filter1", k, f);
        dense(p + "filter2", f, f);
        dense(p + "atomwise_mid", f, f);
        dense(p + "atomwise_out", f, f);
    }
    dense("head1", f, h);
    dense("head2", h, 1);
}

std::size_t SchNetModel::param_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

const Tensor& SchNetModel::param(const std::string& name) const {
    return params_[param_index(name)].value;
}

std::size_t SchNetModel::param_index(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return i;
    throw std::out_of_range("unknown parameter: " + name);
}

Variable SchNetModel::filter_network(ad::Graph& g, Variable expanded,
                                     const std::vector<Variable>& pv,
                                     std::size_t block) const {
    const std::string p = "block" + std::to_string(block) + ".";
    Variable h = ssp(linear(expanded, pv[param_index(p + "filter1.weight")],
                            pv[param_index(p + "filter1.bias")]));
    return ssp(linear(h, pv[param_index(p + "filter2.weight")],
                      pv[param_index(p + "filter2.bias")]));
}

SchNetModel::Forward SchNetModel::forward(
    ad::Graph& g, const std::vector<int>& atomic_numbers, const Tensor& positions,
    const std::vector<std::int64_t>& mol_index, std::size_t n_molecules) const {
    const std::size_t n = atomic_numbers.size();
    if (positions.rank() != 2 || positions.shape[0] != n || positions.shape[1] != 3)
        throw std::invalid_argument("forward: positions must be [n x 3]");
    if (mol_index.size() != n)
        throw std::invalid_argument("forward: one molecule id per atom required");
    for (double v : positions.data)
        if (!std::isfinite(v))
            throw std::invalid_argument("forward: non-finite position");
    std::vector<std::int64_t> emb_idx(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int z = atomic_numbers[i];
        if (z < 1 || static_cast<std::size_t>(z) > config_.max_atomic_number)
            throw std::out_of_range("atomic number " + std::to_string(z) +
                                    " outside embedding table [1," +
                                    std::to_string(config_.max_atomic_number) + "]");
        emb_idx[i] = z - 1;
    }

    Forward fw;
    fw.param_vars.reserve(params_.size());
    for (const auto& p : params_) fw.param_vars.push_back(g.leaf(p.value, true));
    const auto& pv = fw.param_vars;
    fw.positions = g.leaf(positions, true);

    PairList pairs = build_pairs(mol_index, config_.include_self_pairs);

    Variable x = gather_rows(pv[param_index("embedding")], emb_idx);

    // Interatomic distances live on the graph so that forces flow back to
    // the position leaf.
    Variable ri = gather_rows(fw.positions, pairs.first);
    Variable rj = gather_rows(fw.positions, pairs.second);
    Variable dist = l2_norm_rows(sub(ri, rj));
    Variable expanded = rbf_expand(g, dist, config_);

    for (std::size_t b = 0; b < config_.n_interactions; ++b) {
        const std::string p = "block" + std::to_string(b) + ".";
        Variable xa = linear(x, pv[param_index(p + "atomwise_in.weight")],
                             pv[param_index(p + "atomwise_in.bias")]);
        Variable w = filter_network(g, expanded, pv, b);
        // cfconv: out_i = sum_j x_j o W(d_ij), feature-wise product.
        Variable messages = mul(gather_rows(xa, pairs.second), w);
        Variable conv = segment_sum(messages, pairs.first, n);
        Variable v = ssp(linear(conv, pv[param_index(p + "atomwise_mid.weight")],
                                pv[param_index(p + "atomwise_mid.bias")]));
        v = linear(v, pv[param_index(p + "atomwise_out.weight")],
                   pv[param_index(p + "atomwise_out.bias")]);
        x = add(x, v);
    }

    Variable h = ssp(linear(x, pv[param_index("head1.weight")],
                            pv[param_index("head1.bias")]));
    Variable atom_energy = linear(h, pv[param_index("head2.weight")],
                                  pv[param_index("head2.bias")]);
    fw.energies = segment_sum(atom_energy, mol_index, n_molecules);
    return fw;
}

double SchNetModel::predict_energy(const std::vector<int>& atomic_numbers,
                                   const Tensor& positions) const {
    ad::Graph g;
    std::vector<std::int64_t> mol(atomic_numbers.size(), 0);
    Forward fw = forward(g, atomic_numbers, positions, mol, 1);
    return normalizer.denormalize_energy(fw.energies.value().data[0]);
}

std::pair<double, Tensor> SchNetModel::predict_energy_forces(
    const std::vector<int>& atomic_numbers, const Tensor& positions) const {
    ad::Graph g;
    std::vector<std::int64_t> mol(atomic_numbers.size(), 0);
    Forward fw = forward(g, atomic_numbers, positions, mol, 1);
    Variable e = sum_all(fw.energies);
    ad::GradientMap gm = ad::backward(e, {fw.positions}, false);
    const Tensor& de = gm.at(fw.positions).value();
    Tensor forces = de;
    for (double& v : forces.data) v *= -normalizer.std_dev;
    return {normalizer.denormalize_energy(e.value().data[0]), forces};
}

Tensor SchNetModel::sample_filters(std::size_t block,
                                   const std::vector<double>& d_values) const {
    if (block >= config_.n_interactions)
        throw std::out_of_range("block index out of range");
    ad::Graph g;
    std::vector<Variable> pv;
    pv.reserve(params_.size());
    for (const auto& p : params_) pv.push_back(g.leaf(p.value, false));
    Variable d = g.constant(Tensor({d_values.size()}, d_values));
    Variable expanded = rbf_expand(g, d, config_);
    return filter_network(g, expanded, pv, block).value();
}

}  // namespace schnet
