#include "schnet/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace schnet::train {

using ad::Variable;

double LrSchedule::at(std::size_t step) const {
    if (staircase) {
        const auto k = static_cast<double>(step / decay_every);
        return base_lr * std::pow(decay_ratio, k);
    }
    return base_lr * std::pow(decay_ratio,
                              static_cast<double>(step) /
                                  static_cast<double>(decay_every));
}

void AdamState::init(const std::vector<Param>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
        m.push_back(Tensor::zeros(p.value.shape));
        v.push_back(Tensor::zeros(p.value.shape));
    }
    t = 0;
}

void EmaState::init(const std::vector<Param>& params) {
    shadow.clear();
    for (const auto& p : params) shadow.push_back(p.value);
}

void EmaState::update(const std::vector<Param>& params) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& s = shadow[i].data;
        const auto& w = params[i].value.data;
        for (std::size_t k = 0; k < s.size(); ++k)
            s[k] = decay * s[k] + (1.0 - decay) * w[k];
    }
}

Variable batch_loss(ad::Graph& g, const SchNetModel& model,
                    const SchNetModel::Forward& fw,
                    const data::MiniBatch& batch, const LossConfig& cfg) {
    const std::size_t b = batch.n_molecules();
    if (!batch.has_energies)
        throw std::invalid_argument("batch_loss: energies missing from batch");
    const Normalizer& norm = model.normalizer;

    Tensor elab({b, 1});
    for (std::size_t i = 0; i < b; ++i)
        elab.data[i] = norm.normalize_energy(batch.energies[i]);
    Variable ediff = sub(fw.energies, g.constant(elab));
    const double ew = cfg.train_forces ? cfg.rho : 1.0;
    Variable eterm = scale(sum_all(square(ediff)), ew / static_cast<double>(b));
    if (!cfg.train_forces) return eterm;

    if (!batch.has_forces)
        throw std::invalid_argument("batch_loss: forces missing from batch");
    Variable esum = sum_all(fw.energies);
    ad::GradientMap gm = ad::backward(esum, {fw.positions}, true);
    Variable de_dr = gm.at(fw.positions);

    Tensor flab = batch.forces;
    for (double& x : flab.data) x /= norm.std_dev;
    // F_i - F_hat_i = F_i + dE/dr_i
    Variable residual = add(g.constant(flab), de_dr);
    Variable per_atom = sum_over_cols(square(residual));

    Tensor w({batch.n_atoms()});
    for (std::size_t i = 0; i < batch.n_atoms(); ++i)
        w.data[i] =
            1.0 / static_cast<double>(
                      batch.atom_counts[static_cast<std::size_t>(batch.mol_index[i])]);
    Variable fterm = scale(sum_all(mul(per_atom, g.constant(w))),
                           1.0 / static_cast<double>(b));
    return add(eterm, fterm);
}

void adam_step(std::vector<Param>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamConfig& cfg, double lr) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].value.data;
        const auto& g = grads[i].data;
        auto& m = state.m[i].data;
        auto& v = state.v[i].data;
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (!std::isfinite(g[k]))
                throw std::runtime_error("adam_step: non-finite gradient in " +
                                         params[i].name);
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p[k] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

Metrics evaluate(const SchNetModel& model, const data::Dataset& ds) {
    if (ds.empty()) throw std::invalid_argument("evaluate: empty dataset");
    Metrics out;
    out.has_forces = true;
    double esum = 0.0, fsum = 0.0;
    std::size_t fcount = 0;
    for (const auto& c : ds.frames) {
        if (!c.energy) throw std::invalid_argument("evaluate: unlabeled frame");
        auto [e, f] = model.predict_energy_forces(c.atomic_numbers, c.positions);
        esum += std::abs(e - *c.energy);
        if (c.forces) {
            for (std::size_t k = 0; k < f.size(); ++k)
                fsum += std::abs(f.data[k] - c.forces->data[k]);
            fcount += f.size();
        } else {
            out.has_forces = false;
        }
    }
    out.energy_mae = esum / static_cast<double>(ds.size());
    out.force_mae = fcount ? fsum / static_cast<double>(fcount) : 0.0;
    if (!fcount) out.has_forces = false;
    return out;
}

namespace {

double selection_value(const Metrics& m, const TrainConfig& cfg) {
    switch (cfg.selection) {
        case SelectionMetric::energy: return m.energy_mae;
        case SelectionMetric::force: return m.force_mae;
        case SelectionMetric::combined:
            return m.has_forces ? cfg.loss.rho * m.energy_mae + m.force_mae
                                : m.energy_mae;
    }
    return m.energy_mae;
}

void copy_into_params(std::vector<Param>& params,
                      const std::vector<Tensor>& src) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i].value = src[i];
}

std::vector<Tensor> snapshot(const std::vector<Param>& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p.value);
    return out;
}

}  // namespace

TrainResult train(SchNetModel& model, const data::Dataset& train_ds,
                  const data::Dataset& val_ds, const TrainConfig& cfg,
                  TrainState* state) {
    if (train_ds.empty()) throw std::invalid_argument("train: empty training set");
    TrainState local;
    TrainState& st = state ? *state : local;
    const bool resuming = st.initialized;
    if (resuming && !st.raw_params.empty())
        copy_into_params(model.params(), st.raw_params);
    if (!st.initialized) {
        if (cfg.fit_normalizer) model.normalizer = data::normalizer_fit(train_ds);
        st.adam.init(model.params());
        st.ema.decay = cfg.ema_decay;
        st.ema.init(model.params());
        st.initialized = true;
    }

    std::ofstream csv;
    if (!cfg.metrics_csv.empty()) {
        csv.open(cfg.metrics_csv, resuming ? std::ios::app : std::ios::out);
        if (!csv) throw std::runtime_error("cannot write " + cfg.metrics_csv);
        if (!resuming)
            csv << "step,lr,train_loss,val_energy_mae,val_force_mae,wall_time_s\n";
        csv.precision(17);
    }

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result;
    std::size_t cursor = 0;
    bool stop = false;

    auto run_eval = [&](double train_loss_val) {
        if (val_ds.empty()) return;
        std::vector<Tensor> raw = snapshot(model.params());
        copy_into_params(model.params(), st.ema.shadow);
        Metrics m = evaluate(model, val_ds);
        copy_into_params(model.params(), raw);
        result.final_val = m;
        const double metric = selection_value(m, cfg);
        if (metric < st.best_metric) {
            st.best_metric = metric;
            st.best_params = st.ema.shadow;
            st.evals_since_improvement = 0;
        } else {
            st.evals_since_improvement += 1;
        }
        if (csv.is_open()) {
            const double wall =
                cfg.log_wall_time
                    ? std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count()
                    : 0.0;
            csv << st.step << "," << cfg.schedule.at(st.step) << ","
                << train_loss_val << "," << m.energy_mae << "," << m.force_mae
                << "," << wall << "\n";
        }
        if (st.evals_since_improvement >= cfg.patience) {
            result.early_stopped = true;
            stop = true;
        }
    };

    for (std::size_t epoch = 0; !stop && st.step < cfg.max_steps; ++epoch) {
        auto batches = data::batch_iter(
            train_ds, cfg.batch_size,
            cfg.seed + 0x9e3779b97f4a7c15ULL * (epoch + 1));
        for (auto& batch : batches) {
            if (cursor < st.step) {  // resume fast-forward
                ++cursor;
                continue;
            }
            ad::Graph g;
            auto fw = model.forward(g, batch.atomic_numbers, batch.positions,
                                    batch.mol_index, batch.n_molecules());
            Variable loss = batch_loss(g, model, fw, batch, cfg.loss);
            const double loss_val = loss.value().data[0];
            bool step_failed = !std::isfinite(loss_val);
            if (!step_failed) {
                ad::GradientMap gm = ad::backward(loss, fw.param_vars, false);
                std::vector<Tensor> grads;
                grads.reserve(fw.param_vars.size());
                for (const auto& pv : fw.param_vars)
                    grads.push_back(gm.at(pv).value());
                try {
                    adam_step(model.params(), grads, st.adam, cfg.adam,
                              cfg.schedule.at(st.step));
                } catch (const std::runtime_error&) {
                    step_failed = true;
                }
            }
            if (step_failed) {
                result.diverged = true;
                st.raw_params = snapshot(model.params());
                if (!st.best_params.empty())
                    copy_into_params(model.params(), st.best_params);
                result.steps = st.step;
                return result;
            }
            st.ema.update(model.params());
            ++st.step;
            ++cursor;
            result.last_train_loss = loss_val;
            if (st.step % cfg.eval_interval == 0 || st.step >= cfg.max_steps)
                run_eval(loss_val);
            if (stop || st.step >= cfg.max_steps) {
                stop = true;
                break;
            }
        }
    }

    st.raw_params = snapshot(model.params());
    if (!st.best_params.empty())
        copy_into_params(model.params(), st.best_params);
    else
        copy_into_params(model.params(), st.ema.shadow);
    result.steps = st.step;
    return result;
}

namespace {
constexpr char kStateMagic[8] = {'S', 'C', 'H', 'N', 'E', 'T', 'T', 'S'};

void write_blob(std::ofstream& out, const std::vector<Tensor>& ts) {
    for (const auto& t : ts)
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
}

void read_blob(std::ifstream& in, std::vector<Tensor>& ts) {
    for (auto& t : ts)
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
}
}  // namespace

void save_train_state(const std::string& path, const SchNetModel& model,
                      const TrainState& state) {
    nlohmann::json header;
    header["version"] = 1;
    header["step"] = state.step;
    header["adam_t"] = state.adam.t;
    header["ema_decay"] = state.ema.decay;
    header["best_metric"] = std::isfinite(state.best_metric)
                                ? nlohmann::json(state.best_metric)
                                : nlohmann::json();
    header["evals_since_improvement"] = state.evals_since_improvement;
    header["has_best"] = !state.best_params.empty();
    header["has_raw"] = !state.raw_params.empty();
    header["normalizer"] = {{"mean", model.normalizer.mean},
                            {"std", model.normalizer.std_dev}};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const std::string htext = header.dump();
    const std::uint64_t hlen = htext.size();
    out.write(kStateMagic, sizeof(kStateMagic));
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(htext.data(), static_cast<std::streamsize>(hlen));
    write_blob(out, snapshot(model.params()));
    write_blob(out, state.adam.m);
    write_blob(out, state.adam.v);
    write_blob(out, state.ema.shadow);
    if (!state.best_params.empty()) write_blob(out, state.best_params);
    if (!state.raw_params.empty()) write_blob(out, state.raw_params);
    if (!out) throw std::runtime_error("write failed for " + path);
}

TrainState load_train_state(const std::string& path, SchNetModel& model) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::string(magic, 8) != std::string(kStateMagic, 8))
        throw std::runtime_error(path + ": not a training state file");
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    nlohmann::json header = nlohmann::json::parse(htext);

    TrainState st;
    st.step = header.at("step");
    if (!header.at("best_metric").is_null())
        st.best_metric = header.at("best_metric").get<double>();
    st.evals_since_improvement = header.at("evals_since_improvement");
    st.adam.init(model.params());
    st.adam.t = header.at("adam_t");
    st.ema.decay = header.at("ema_decay");
    st.ema.init(model.params());
    model.normalizer.mean = header.at("normalizer").at("mean");
    model.normalizer.std_dev = header.at("normalizer").at("std");

    std::vector<Tensor> pvals = snapshot(model.params());
    read_blob(in, pvals);
    copy_into_params(model.params(), pvals);
    read_blob(in, st.adam.m);
    read_blob(in, st.adam.v);
    read_blob(in, st.ema.shadow);
    if (header.at("has_best").get<bool>()) {
        st.best_params = snapshot(model.params());
        read_blob(in, st.best_params);
    }
    if (header.at("has_raw").get<bool>()) {
        st.raw_params = snapshot(model.params());
        read_blob(in, st.raw_params);
    }
    if (!in) throw std::runtime_error(path + ": truncated training state");
    st.initialized = true;
    return st;
}

}  // namespace schnet::train
