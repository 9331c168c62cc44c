// Batch front end: dataset generation, training, evaluation, prediction,
// molecular dynamics, physics verification and filter export.
//
// Exit codes: 0 success, 2 usage/config error, 3 numeric failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "schnet/checkpoint.hpp"
#include "schnet/data.hpp"
#include "schnet/model.hpp"
#include "schnet/training.hpp"
#include "schnet/verify.hpp"

using namespace schnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value run configuration. Every default is the published
// training protocol value where one exists.
struct RunConfig {
    ModelConfig model;
    train::TrainConfig trainer;
    data::SplitSpec split_spec{data::SplitMode::random, 0, 1000, 0};

    void set(const std::string& key, const std::string& value);
    void load_file(const std::string& path);
    void apply_overrides(const std::vector<std::string>& kvs);
    std::string dump() const;
};

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected boolean, got '" + v + "'");
}

template <typename T>
T parse_num(const std::string& v, const std::string& key) {
    std::istringstream in(v);
    T out;
    in >> out;
    if (!in || !in.eof())
        throw ConfigError("config key '" + key + "': bad value '" + v + "'");
    return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "n_features") model.n_features = parse_num<std::size_t>(value, key);
    else if (key == "n_interactions") model.n_interactions = parse_num<std::size_t>(value, key);
    else if (key == "rbf_min") model.rbf_min = parse_num<double>(value, key);
    else if (key == "rbf_spacing") model.rbf_spacing = parse_num<double>(value, key);
    else if (key == "rbf_count") model.rbf_count = parse_num<std::size_t>(value, key);
    else if (key == "rbf_gamma") model.rbf_gamma = parse_num<double>(value, key);
    else if (key == "max_atomic_number") model.max_atomic_number = parse_num<std::size_t>(value, key);
    else if (key == "include_self_pairs") model.include_self_pairs = parse_bool(value, key);
    else if (key == "rho") trainer.loss.rho = parse_num<double>(value, key);
    else if (key == "train_forces") trainer.loss.train_forces = parse_bool(value, key);
    else if (key == "lr") trainer.schedule.base_lr = parse_num<double>(value, key);
    else if (key == "lr_decay") trainer.schedule.decay_ratio = parse_num<double>(value, key);
    else if (key == "lr_decay_every") trainer.schedule.decay_every = parse_num<std::size_t>(value, key);
    else if (key == "lr_staircase") trainer.schedule.staircase = parse_bool(value, key);
    else if (key == "ema_decay") { trainer.ema_decay = parse_num<double>(value, key); }
    else if (key == "batch_size") trainer.batch_size = parse_num<std::size_t>(value, key);
    else if (key == "max_steps") trainer.max_steps = parse_num<std::size_t>(value, key);
    else if (key == "eval_interval") trainer.eval_interval = parse_num<std::size_t>(value, key);
    else if (key == "patience") trainer.patience = parse_num<std::size_t>(value, key);
    else if (key == "seed") trainer.seed = parse_num<std::uint64_t>(value, key);
    else if (key == "log_wall_time") trainer.log_wall_time = parse_bool(value, key);
    else if (key == "selection") {
        if (value == "combined") trainer.selection = train::SelectionMetric::combined;
        else if (value == "energy") trainer.selection = train::SelectionMetric::energy;
        else if (value == "force") trainer.selection = train::SelectionMetric::force;
        else throw ConfigError("config key 'selection': expected combined|energy|force");
    } else if (key == "n_train") split_spec.n_train = parse_num<std::size_t>(value, key);
    else if (key == "n_val") split_spec.n_val = parse_num<std::size_t>(value, key);
    else if (key == "split_seed") split_spec.seed = parse_num<std::uint64_t>(value, key);
    else if (key == "split_mode") {
        if (value == "random") split_spec.mode = data::SplitMode::random;
        else if (value == "molecule_wise") split_spec.mode = data::SplitMode::molecule_wise;
        else throw ConfigError("config key 'split_mode': expected random|molecule_wise");
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected key=value");
        auto strip = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        set(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
}

void RunConfig::apply_overrides(const std::vector<std::string>& kvs) {
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        set(kv.substr(0, eq), kv.substr(eq + 1));
    }
}

std::string RunConfig::dump() const {
    std::ostringstream out;
    out.precision(17);
    out << "n_features=" << model.n_features << "\n"
        << "n_interactions=" << model.n_interactions << "\n"
        << "rbf_min=" << model.rbf_min << "\n"
        << "rbf_spacing=" << model.rbf_spacing << "\n"
        << "rbf_count=" << model.rbf_count << "\n"
        << "rbf_gamma=" << model.rbf_gamma << "\n"
        << "max_atomic_number=" << model.max_atomic_number << "\n"
        << "include_self_pairs=" << (model.include_self_pairs ? "true" : "false") << "\n"
        << "rho=" << trainer.loss.rho << "\n"
        << "train_forces=" << (trainer.loss.train_forces ? "true" : "false") << "\n"
        << "lr=" << trainer.schedule.base_lr << "\n"
        << "lr_decay=" << trainer.schedule.decay_ratio << "\n"
        << "lr_decay_every=" << trainer.schedule.decay_every << "\n"
        << "lr_staircase=" << (trainer.schedule.staircase ? "true" : "false") << "\n"
        << "ema_decay=" << trainer.ema_decay << "\n"
        << "batch_size=" << trainer.batch_size << "\n"
        << "max_steps=" << trainer.max_steps << "\n"
        << "eval_interval=" << trainer.eval_interval << "\n"
        << "patience=" << trainer.patience << "\n"
        << "selection="
        << (trainer.selection == train::SelectionMetric::combined   ? "combined"
            : trainer.selection == train::SelectionMetric::energy ? "energy"
                                                                  : "force")
        << "\n"
        << "seed=" << trainer.seed << "\n"
        << "log_wall_time=" << (trainer.log_wall_time ? "true" : "false") << "\n"
        << "n_train=" << split_spec.n_train << "\n"
        << "n_val=" << split_spec.n_val << "\n"
        << "split_mode="
        << (split_spec.mode == data::SplitMode::random ? "random" : "molecule_wise")
        << "\n"
        << "split_seed=" << split_spec.seed << "\n";
    return out.str();
}

std::string make_run_dir(const std::string& root, std::uint64_t seed) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::tm tmv{};
#ifdef _WIN32
    gmtime_s(&tmv, &t);
#else
    gmtime_r(&t, &tmv);
#endif
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tmv);
    std::string dir = root + "/run-" + stamp + "-seed" + std::to_string(seed);
    // never clobber an earlier run from the same second
    std::string candidate = dir;
    for (int k = 1; std::filesystem::exists(candidate); ++k)
        candidate = dir + "." + std::to_string(k);
    std::filesystem::create_directories(candidate);
    return candidate;
}

void check_supported_atoms(const data::Dataset& ds, const ModelConfig& mc) {
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (int z : ds.frames[i].atomic_numbers)
            if (z < 1 || static_cast<std::size_t>(z) > mc.max_atomic_number)
                throw ConfigError("frame " + std::to_string(i) +
                                  ": atomic number " + std::to_string(z) +
                                  " outside the embedding range [1, " +
                                  std::to_string(mc.max_atomic_number) + "]");
}

int cmd_train(const RunConfig& cfg_in, const std::string& data_path,
              const std::string& out_root) {
    RunConfig cfg = cfg_in;
    cfg.model.validate();
    data::Dataset ds = data::parse_extxyz(data_path);
    if (ds.empty()) throw ConfigError("training dataset is empty");
    check_supported_atoms(ds, cfg.model);

    data::SplitSpec spec = cfg.split_spec;
    if (spec.n_train == 0) {
        // default: hold out n_val frames (clamped) and train on the rest
        spec.n_val = std::min(spec.n_val, ds.size() / 5);
        spec.n_train = ds.size() - spec.n_val;
    }
    data::Split sp = data::split(ds, spec);

    const std::string run_dir = make_run_dir(out_root, cfg.trainer.seed);
    cfg.trainer.metrics_csv = run_dir + "/metrics.csv";
    {
        std::ofstream out(run_dir + "/config.txt");
        out << cfg.dump();
    }

    SchNetModel model(cfg.model, cfg.trainer.seed);
    train::TrainState state;
    train::TrainResult r =
        train::train(model, sp.train, sp.val, cfg.trainer, &state);
    save_checkpoint(run_dir + "/model.ckpt", model);
    train::save_train_state(run_dir + "/train_state.bin", model, state);

    std::cout << "run_dir " << run_dir << "\n"
              << "steps " << r.steps << "\n"
              << "train_loss " << r.last_train_loss << "\n";
    if (!sp.val.empty())
        std::cout << "val_energy_mae " << r.final_val.energy_mae << "\n"
                  << "val_force_mae " << r.final_val.force_mae << "\n";
    if (r.early_stopped) std::cout << "early_stopped 1\n";
    if (r.diverged) throw NumericError("training diverged at step " +
                                       std::to_string(r.steps));
    return kExitOk;
}

int cmd_eval(const std::string& ckpt, const std::string& data_path,
             const std::string& baseline, const std::string& csv_out) {
    data::Dataset ds = data::parse_extxyz(data_path);
    if (ds.empty()) throw ConfigError("evaluation dataset is empty");
    for (const auto& f : ds.frames)
        if (!f.energy) throw ConfigError("evaluation requires energy labels");

    train::Metrics m;
    if (baseline == "mean") {
        double mean = 0.0;
        for (const auto& f : ds.frames) mean += *f.energy;
        mean /= static_cast<double>(ds.size());
        for (const auto& f : ds.frames)
            m.energy_mae += std::abs(*f.energy - mean);
        m.energy_mae /= static_cast<double>(ds.size());
        m.has_forces = false;
    } else if (!baseline.empty()) {
        throw ConfigError("unknown baseline '" + baseline + "'");
    } else {
        SchNetModel model = load_checkpoint(ckpt);
        check_supported_atoms(ds, model.config());
        m = train::evaluate(model, ds);
        if (!m.has_forces)
            std::cerr << "warning: no force labels, reporting energy MAE only\n";
    }
    std::cout.precision(12);
    std::cout << "energy_mae " << m.energy_mae << "\n";
    if (m.has_forces) std::cout << "force_mae " << m.force_mae << "\n";
    if (!csv_out.empty()) {
        std::ofstream out(csv_out);
        if (!out) throw ConfigError("cannot write " + csv_out);
        out.precision(17);
        out << "energy_mae,force_mae,has_forces\n"
            << m.energy_mae << "," << m.force_mae << "," << (m.has_forces ? 1 : 0)
            << "\n";
    }
    return kExitOk;
}

int cmd_predict(const std::string& ckpt, const std::string& in_path,
                const std::string& out_path) {
    SchNetModel model = load_checkpoint(ckpt);
    data::Dataset ds = data::parse_extxyz(in_path);
    check_supported_atoms(ds, model.config());
    for (auto& f : ds.frames) {
        auto [e, forces] = model.predict_energy_forces(f.atomic_numbers, f.positions);
        f.energy = e;
        f.forces = std::move(forces);
    }
    data::write_extxyz(out_path, ds);
    std::cout << "wrote " << ds.size() << " frames to " << out_path << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& ckpt, std::uint64_t seed,
               std::size_t n_molecules, std::size_t n_trials,
               const std::string& csv_out) {
    SchNetModel model = ckpt.empty() ? SchNetModel(ModelConfig{}, seed)
                                     : load_checkpoint(ckpt);
    verify::ModelField field(model);

    std::mt19937_64 rng(seed + 1);
    std::vector<data::Conformation> mols;
    for (std::size_t i = 0; i < n_molecules; ++i)
        mols.push_back(verify::random_molecule(rng, 3 + i % 6));

    verify::Report rep = verify::check_invariances(field, mols, n_trials, seed);
    const double fd_tol = 1e-5;
    for (std::size_t i = 0; i < std::min<std::size_t>(mols.size(), 10); ++i) {
        const double err = verify::check_force_consistency(field, mols[i], 1e-4);
        rep.records.push_back(
            {"force_vs_finite_difference", i, err, fd_tol, err <= fd_tol});
    }

    std::map<std::string, std::pair<double, bool>> by_check;
    for (const auto& r : rep.records) {
        auto& e = by_check.try_emplace(r.check, 0.0, true).first->second;
        e.first = std::max(e.first, r.metric);
        e.second = e.second && r.pass;
    }
    std::cout.precision(6);
    for (const auto& [name, agg] : by_check)
        std::cout << name << " worst " << std::scientific << agg.first << " "
                  << (agg.second ? "PASS" : "FAIL") << "\n";
    if (!csv_out.empty()) rep.write_csv(csv_out);
    if (!rep.all_pass()) throw NumericError("verification checks failed");
    std::cout << "all checks passed\n";
    return kExitOk;
}

int cmd_md(const std::string& ckpt, const std::string& init_path,
           std::size_t n_steps, double dt, std::size_t stride,
           const std::string& traj_out, const std::string& energy_csv) {
    SchNetModel model = load_checkpoint(ckpt);
    data::Dataset init = data::parse_extxyz(init_path);
    if (init.empty()) throw ConfigError("empty initial-conformation file");
    check_supported_atoms(init, model.config());
    const data::Conformation& c0 = init.frames[0];
    verify::ModelField field(model);

    data::Dataset traj;
    std::ofstream csv;
    if (!energy_csv.empty()) {
        csv.open(energy_csv);
        if (!csv) throw ConfigError("cannot write " + energy_csv);
        csv.precision(17);
        csv << "step,kinetic,total\n";
    }
    auto emit = [&](std::size_t step, const Tensor& r, double ke, double te) {
        data::Conformation f = c0;
        f.positions = r;
        f.forces.reset();
        f.energy = te - ke;
        traj.frames.push_back(std::move(f));
        if (csv.is_open()) csv << step << "," << ke << "," << te << "\n";
    };

    if (dt == 0.0) {
        // frozen clock: the trajectory is the initial frame repeated
        const double e0 = field.energy(c0.atomic_numbers, c0.positions);
        for (std::size_t s = 0; s <= n_steps; s += std::max<std::size_t>(stride, 1))
            emit(s, c0.positions, 0.0, e0);
    } else {
        verify::MdState st;
        st.positions = c0.positions;
        st.velocities = Tensor::zeros(c0.positions.shape);
        st.dt = dt;
        emit(0, st.positions, 0.0, field.energy(c0.atomic_numbers, c0.positions));
        try {
            while (st.step < n_steps) {
                const std::size_t chunk = std::min(stride, n_steps - st.step);
                st = verify::velocity_verlet(field, c0.atomic_numbers,
                                             std::move(st), chunk);
                emit(st.step, st.positions, st.kinetic_energy.back(),
                     st.total_energy.back());
            }
        } catch (const std::runtime_error& e) {
            throw NumericError(e.what());
        }
    }
    data::write_extxyz(traj_out, traj);
    std::cout << "wrote " << traj.size() << " frames to " << traj_out << "\n";
    return kExitOk;
}

int cmd_export_filters(const std::string& ckpt, const std::string& out_path,
                       double d_max, double d_step) {
    SchNetModel model = load_checkpoint(ckpt);
    std::vector<double> grid;
    for (double d = 0.0; d <= d_max + 1e-12; d += d_step) grid.push_back(d);
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot write " + out_path);
    out.precision(17);
    out << "block,channel,d,value\n";
    for (std::size_t b = 0; b < model.config().n_interactions; ++b) {
        Tensor w = model.sample_filters(b, grid);
        for (std::size_t ch = 0; ch < model.config().n_features; ++ch)
            for (std::size_t q = 0; q < grid.size(); ++q)
                out << b << "," << ch << "," << grid[q] << "," << w(q, ch) << "\n";
    }
    std::cout << "wrote " << model.config().n_interactions << " blocks x "
              << model.config().n_features << " channels to " << out_path << "\n";
    return kExitOk;
}

int cmd_gen_synthetic(const std::string& out_path, std::size_t n_frames,
                      double displacement, std::uint64_t seed,
                      const std::string& template_path, double well_depth,
                      double stiffness, double equilibrium) {
    data::Conformation tmpl;
    if (template_path.empty()) {
        // bent triatomic, comfortably inside the default radial grid
        tmpl.atomic_numbers = {1, 8, 1};
        tmpl.positions = Tensor({3, 3}, {0, 0, 0, 1.1, 0, 0, 1.5, 1.0, 0});
        tmpl.molecule_id = "triatomic";
    } else {
        data::Dataset t = data::parse_extxyz(template_path);
        if (t.empty()) throw ConfigError("empty template file");
        tmpl = t.frames[0];
    }
    data::SyntheticOracle oracle;
    oracle.defaults.well_depth = well_depth;
    oracle.defaults.stiffness = stiffness;
    oracle.defaults.equilibrium = equilibrium;
    data::Dataset ds =
        data::generate_synthetic(oracle, tmpl, n_frames, displacement, seed);
    data::write_extxyz(out_path, ds);
    std::cout << "wrote " << ds.size() << " frames to " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SchNet-style molecular energy and force model"};
    app.require_subcommand(1);

    std::string config_path, data_path, out_root = "runs";
    std::vector<std::string> overrides;
    std::string ckpt, in_path, out_path, baseline, csv_out;
    std::uint64_t seed = 0;
    std::size_t n_molecules = 100, n_trials = 100;
    std::size_t md_steps = 1000, stride = 10;
    double dt = 1e-3;
    std::string traj_out = "trajectory.xyz", energy_csv;
    std::size_t n_frames = 100;
    double displacement = 0.1;
    std::string template_path;
    double well_depth = 50.0, stiffness = 1.5, equilibrium = 1.2;
    double d_max = 10.0, d_step = 0.05;
    double rho = -1.0;
    int train_forces_flag = -1;
    bool has_seed_flag = false;

    auto add_config_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--set", overrides,
                        "config override key=value (repeatable)");
    };

    auto* t = app.add_subcommand("train", "train a model");
    add_config_flags(t);
    t->add_option("--data", data_path, "labeled extended-XYZ dataset")->required();
    t->add_option("--out", out_root, "run-directory root");
    t->add_option("--rho", rho, "energy term weight in the combined loss");
    t->add_flag("--train-forces,!--no-train-forces", train_forces_flag,
                "include the force term in the loss");
    t->add_option("--seed", seed, "training seed")->each([&](const std::string&) {
        has_seed_flag = true;
    });

    auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
    e->add_option("--checkpoint", ckpt, "model checkpoint");
    e->add_option("--data", data_path, "labeled extended-XYZ dataset")->required();
    e->add_option("--baseline", baseline, "mean: constant mean-energy predictor");
    e->add_option("--csv", csv_out, "write metrics CSV here");

    auto* p = app.add_subcommand("predict", "write energies and forces for a file");
    p->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    p->add_option("--in", in_path, "input extended-XYZ")->required();
    p->add_option("--out", out_path, "output extended-XYZ")->required();

    auto* v = app.add_subcommand("verify", "physics invariance checks");
    v->add_option("--checkpoint", ckpt, "model checkpoint (default: fresh random weights)");
    v->add_option("--seed", seed, "seed for molecules and isometries");
    v->add_option("--molecules", n_molecules, "number of random molecules");
    v->add_option("--trials", n_trials, "number of isometry trials");
    v->add_option("--csv", csv_out, "write the per-trial report here");

    auto* m = app.add_subcommand("md", "velocity-Verlet dynamics on the model");
    m->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    m->add_option("--init", in_path, "initial conformation (extended-XYZ)")->required();
    m->add_option("--steps", md_steps, "number of integration steps");
    m->add_option("--dt", dt, "time step (0 freezes the system)");
    m->add_option("--stride", stride, "frames written every this many steps");
    m->add_option("--traj", traj_out, "trajectory output path");
    m->add_option("--energies", energy_csv, "per-frame energy CSV");

    auto* x = app.add_subcommand("export-filters",
                                 "sample W(d) for every block and channel");
    x->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    x->add_option("--out", out_path, "output CSV")->required();
    x->add_option("--d-max", d_max, "largest sampled distance");
    x->add_option("--d-step", d_step, "distance grid spacing");

    auto* g = app.add_subcommand("gen-synthetic",
                                 "generate a Morse-labeled dataset");
    g->add_option("--out", out_path, "output extended-XYZ")->required();
    g->add_option("--frames", n_frames, "number of frames");
    g->add_option("--displacement", displacement, "Gaussian displacement scale");
    g->add_option("--seed", seed, "generation seed");
    g->add_option("--template", template_path,
                  "template conformation (default: bent triatomic)");
    g->add_option("--well-depth", well_depth, "Morse D_e");
    g->add_option("--stiffness", stiffness, "Morse a");
    g->add_option("--equilibrium", equilibrium, "Morse r_e");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (t->parsed()) {
            RunConfig cfg;
            if (!config_path.empty()) cfg.load_file(config_path);
            cfg.apply_overrides(overrides);
            if (rho >= 0.0) cfg.trainer.loss.rho = rho;
            if (train_forces_flag >= 0)
                cfg.trainer.loss.train_forces = train_forces_flag > 0;
            if (has_seed_flag) cfg.trainer.seed = seed;
            return cmd_train(cfg, data_path, out_root);
        }
        if (e->parsed()) {
            if (baseline.empty() && ckpt.empty())
                throw ConfigError("eval needs --checkpoint or --baseline");
            return cmd_eval(ckpt, data_path, baseline, csv_out);
        }
        if (p->parsed()) return cmd_predict(ckpt, in_path, out_path);
        if (v->parsed())
            return cmd_verify(ckpt, seed, n_molecules, n_trials, csv_out);
        if (m->parsed())
            return cmd_md(ckpt, in_path, md_steps, dt, stride, traj_out, energy_csv);
        if (x->parsed()) return cmd_export_filters(ckpt, out_path, d_max, d_step);
        if (g->parsed())
            return cmd_gen_synthetic(out_path, n_frames, displacement, seed,
                                     template_path, well_depth, stiffness,
                                     equilibrium);
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitConfig;
    } catch (const NumericError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
