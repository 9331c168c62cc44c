#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "schnet/data.hpp"
#include "schnet/model.hpp"
#include "schnet/training.hpp"

using namespace schnet;
using namespace schnet::train;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.n_features = 8;
    c.n_interactions = 1;
    c.rbf_count = 16;
    c.rbf_spacing = 0.4;
    c.max_atomic_number = 4;
    return c;
}

data::Conformation triatomic() {
    data::Conformation c;
    c.atomic_numbers = {1, 2, 1};
    c.positions = Tensor({3, 3}, {0, 0, 0, 1.1, 0, 0, 0.4, 1.0, 0});
    c.molecule_id = "tri";
    return c;
}

double loss_value(const SchNetModel& model, const data::MiniBatch& batch,
                  const LossConfig& cfg) {
    ad::Graph g;
    auto fw = model.forward(g, batch.atomic_numbers, batch.positions,
                            batch.mol_index, batch.n_molecules());
    return batch_loss(g, model, fw, batch, cfg).value().data[0];
}

}  // namespace

TEST_CASE("loss hand values") {
    SchNetModel model(tiny_config(), 5);
    model.normalizer = Normalizer{};  // identity

    data::Dataset ds;
    data::Conformation atom;
    atom.atomic_numbers = {2};
    atom.positions = Tensor({1, 3});
    // isolated atom: model forces are exactly zero, so errors are what we
    // plant in the labels
    const double e_pred = model.predict_energy(atom.atomic_numbers, atom.positions);

    SUBCASE("perfect predictions give zero loss") {
        atom.energy = e_pred;
        atom.forces = Tensor({1, 3});
        ds.frames = {atom};
        auto b = data::make_batch(ds, {0});
        CHECK(loss_value(model, b, LossConfig{}) == doctest::Approx(0.0));
    }
    SUBCASE("rho-weighted combination, hand evaluation") {
        atom.energy = e_pred - 2.0;                 // energy error 2.0
        atom.forces = Tensor({1, 3}, {0.5, 0, 0});  // force error 0.5
        ds.frames = {atom};
        auto b = data::make_batch(ds, {0});
        CHECK(loss_value(model, b, LossConfig{0.01, true}) ==
              doctest::Approx(0.01 * 4.0 + 0.25).epsilon(1e-12));
    }
    SUBCASE("train_forces=false keeps only the energy term") {
        atom.energy = e_pred - 2.0;
        ds.frames = {atom};
        auto b = data::make_batch(ds, {0});
        CHECK(loss_value(model, b, LossConfig{0.01, false}) ==
              doctest::Approx(4.0).epsilon(1e-12));
        // missing forces only matters when the force term is on
        CHECK_THROWS_AS(loss_value(model, b, LossConfig{0.01, true}),
                        std::invalid_argument);
    }
}

TEST_CASE("parameter gradients of the combined loss match finite differences") {
    // The decisive double-backward test: d(loss)/d(theta) with the force
    // term needs gradients of gradients.
    SchNetModel model(tiny_config(), 77);
    REQUIRE(model.param_count() <= 500);

    data::SyntheticOracle oracle;
    data::Dataset ds = data::generate_synthetic(oracle, triatomic(), 2, 0.08, 3);
    model.normalizer = data::normalizer_fit(ds);
    auto batch = data::make_batch(ds, {0, 1});
    LossConfig lcfg{0.01, true};

    ad::Graph g;
    auto fw = model.forward(g, batch.atomic_numbers, batch.positions,
                            batch.mol_index, batch.n_molecules());
    ad::Variable loss = batch_loss(g, model, fw, batch, lcfg);
    ad::GradientMap gm = ad::backward(loss, fw.param_vars, false);

    const double h = 1e-4;
    double gmax = 1e-6;
    for (const auto& pv : fw.param_vars)
        for (double v : gm.at(pv).value().data) gmax = std::max(gmax, std::abs(v));

    for (std::size_t pi = 0; pi < model.params().size(); ++pi) {
        const Tensor& grad = gm.at(fw.param_vars[pi]).value();
        for (std::size_t k = 0; k < grad.size(); ++k) {
            double& theta = model.params()[pi].value.data[k];
            const double saved = theta;
            theta = saved + h;
            const double lp = loss_value(model, batch, lcfg);
            theta = saved - h;
            const double lm = loss_value(model, batch, lcfg);
            theta = saved;
            const double fd = (lp - lm) / (2 * h);
            CHECK(std::abs(grad.data[k] - fd) / gmax < 1e-4);
        }
    }
}

TEST_CASE("batched loss equals the mean of per-molecule losses") {
    SchNetModel model(tiny_config(), 13);
    data::SyntheticOracle oracle;
    data::Dataset ds = data::generate_synthetic(oracle, triatomic(), 5, 0.06, 8);
    model.normalizer = data::normalizer_fit(ds);
    LossConfig lcfg{0.01, true};

    auto batch = data::make_batch(ds, {0, 1, 2, 3, 4});
    const double batched = loss_value(model, batch, lcfg);
    double mean = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
        mean += loss_value(model, data::make_batch(ds, {i}), lcfg);
    mean /= 5.0;
    CHECK(std::abs(batched - mean) < 1e-10);

    // per-molecule energies from a batched forward equal unbatched forwards
    ad::Graph g;
    auto fw = model.forward(g, batch.atomic_numbers, batch.positions,
                            batch.mol_index, batch.n_molecules());
    for (std::size_t i = 0; i < 5; ++i) {
        const double single = model.normalizer.normalize_energy(
            model.predict_energy(ds.frames[i].atomic_numbers,
                                 ds.frames[i].positions));
        CHECK(std::abs(fw.energies.value().data[i] - single) < 1e-12);
    }
}

TEST_CASE("adam update rule") {
    SUBCASE("first step moves by ~lr against the gradient sign") {
        std::vector<Param> params{{"w", Tensor({1}, {1.0})}};
        AdamState st;
        st.init(params);
        adam_step(params, {Tensor({1}, {0.5})}, st, AdamConfig{}, 1e-3);
        // bias correction makes mhat/sqrt(vhat) = sign(g) up to eps
        CHECK(params[0].value.data[0] ==
              doctest::Approx(1.0 - 1e-3).epsilon(1e-7));
        CHECK(st.t == 1);
    }
    SUBCASE("zero gradients leave parameters unchanged") {
        std::vector<Param> params{{"w", Tensor({2}, {3.0, -4.0})}};
        AdamState st;
        st.init(params);
        for (int i = 0; i < 10; ++i)
            adam_step(params, {Tensor({2}, {0.0, 0.0})}, st, AdamConfig{}, 1e-3);
        CHECK(params[0].value.data == std::vector<double>{3.0, -4.0});
    }
    SUBCASE("equal gradients produce identical updates") {
        std::vector<Param> params{{"w", Tensor({2}, {1.0, 1.0})}};
        AdamState st;
        st.init(params);
        adam_step(params, {Tensor({2}, {0.3, 0.3})}, st, AdamConfig{}, 1e-2);
        CHECK(params[0].value.data[0] == params[0].value.data[1]);
    }
    SUBCASE("non-finite gradient names the parameter") {
        std::vector<Param> params{{"embedding", Tensor({1}, {1.0})}};
        AdamState st;
        st.init(params);
        CHECK_THROWS_WITH_AS(
            adam_step(params, {Tensor({1}, {std::nan("")})}, st, AdamConfig{},
                      1e-3),
            doctest::Contains("embedding"), std::runtime_error);
    }
}

TEST_CASE("learning rate schedule") {
    LrSchedule s;  // defaults 1e-3, 0.96, 100k
    CHECK(s.at(0) == 1e-3);
    CHECK(s.at(99999) == 1e-3);
    CHECK(s.at(100000) == doctest::Approx(9.6e-4).epsilon(1e-12));
    CHECK(s.at(250000) == doctest::Approx(1e-3 * 0.96 * 0.96).epsilon(1e-12));
    LrSchedule c = s;
    c.staircase = false;
    CHECK(c.at(50000) == doctest::Approx(1e-3 * std::pow(0.96, 0.5)));
}

TEST_CASE("EMA shadow weights") {
    std::vector<Param> params{{"w", Tensor({1}, {1.0})}};
    EmaState ema;
    ema.decay = 0.99;
    ema.init(params);
    ema.shadow[0].data[0] = 0.0;
    ema.update(params);
    CHECK(ema.shadow[0].data[0] == doctest::Approx(0.01));
    ema.update(params);
    ema.update(params);
    CHECK(ema.shadow[0].data[0] ==
          doctest::Approx(1.0 - 0.99 * 0.99 * 0.99).epsilon(1e-12));

    SUBCASE("decay=0 tracks the raw weights exactly") {
        EmaState e0;
        e0.decay = 0.0;
        e0.init(params);
        params[0].value.data[0] = 7.5;
        e0.update(params);
        CHECK(e0.shadow[0].data[0] == 7.5);
    }
    SUBCASE("decay=1 freezes the initial weights") {
        EmaState e1;
        e1.decay = 1.0;
        e1.init(params);
        const double init = e1.shadow[0].data[0];
        params[0].value.data[0] = -3.0;
        e1.update(params);
        CHECK(e1.shadow[0].data[0] == init);
    }
}

TEST_CASE("training overfits a small synthetic task") {
    data::SyntheticOracle oracle;
    data::Dataset ds = data::generate_synthetic(oracle, triatomic(), 10, 0.08, 42);
    ModelConfig mc = tiny_config();
    mc.n_features = 16;
    mc.rbf_spacing = 0.1;
    mc.rbf_count = 64;
    SchNetModel model(mc, 11);
    TrainConfig cfg;
    cfg.batch_size = 10;
    cfg.max_steps = 5000;
    cfg.eval_interval = 10000;  // no early stopping in this smoke test
    cfg.schedule.base_lr = 3e-3;
    cfg.seed = 1;
    TrainResult r = train::train(model, ds, data::Dataset{}, cfg);
    CHECK_FALSE(r.diverged);
    CHECK(r.steps == 5000);
    CHECK(r.last_train_loss < 1e-3);
}

TEST_CASE("lr=0 leaves the model constant") {
    data::SyntheticOracle oracle;
    data::Dataset ds = data::generate_synthetic(oracle, triatomic(), 4, 0.05, 2);
    SchNetModel model(tiny_config(), 3);
    model.normalizer = data::normalizer_fit(ds);  // train() refits to the same ds
    std::vector<std::vector<double>> before;
    for (auto& p : model.params()) before.push_back(p.value.data);
    TrainConfig cfg;
    cfg.schedule.base_lr = 0.0;
    cfg.batch_size = 4;
    cfg.max_steps = 20;
    cfg.eval_interval = 5;
    cfg.seed = 9;
    Metrics m0 = evaluate(model, ds);
    train::train(model, ds, ds, cfg);
    // Adam moves by lr*sign(g), so lr=0 freezes the raw weights; the EMA
    // shadow can drift by ulps, so compare at the metric level too.
    for (std::size_t i = 0; i < before.size(); ++i)
        for (std::size_t k = 0; k < before[i].size(); ++k)
            CHECK(model.params()[i].value.data[k] ==
                  doctest::Approx(before[i][k]).epsilon(1e-13));
    Metrics m1 = evaluate(model, ds);
    CHECK(m1.energy_mae == doctest::Approx(m0.energy_mae).epsilon(1e-10));
}

TEST_CASE("resume from a serialized state is bit-exact") {
    data::SyntheticOracle oracle;
    data::Dataset ds = data::generate_synthetic(oracle, triatomic(), 8, 0.07, 6);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.eval_interval = 1000000;
    cfg.seed = 4;

    ModelConfig mc = tiny_config();
    SchNetModel one_shot(mc, 21);
    cfg.max_steps = 60;
    train::train(one_shot, ds, data::Dataset{}, cfg);

    SchNetModel two_stage(mc, 21);
    cfg.max_steps = 30;
    TrainState st;
    train::train(two_stage, ds, data::Dataset{}, cfg, &st);
    const std::string path = "test_training_state.bin";
    save_train_state(path, two_stage, st);

    SchNetModel resumed(mc, 999);  // different init, fully overwritten by load
    TrainState st2 = load_train_state(path, resumed);
    cfg.max_steps = 60;
    train::train(resumed, ds, data::Dataset{}, cfg, &st2);
    std::remove(path.c_str());

    for (std::size_t i = 0; i < one_shot.params().size(); ++i)
        CHECK(resumed.params()[i].value.data == one_shot.params()[i].value.data);
}

TEST_CASE("divergence aborts and reports") {
    data::SyntheticOracle oracle;
    data::Dataset ds = data::generate_synthetic(oracle, triatomic(), 4, 0.05, 2);
    SchNetModel model(tiny_config(), 3);
    TrainConfig cfg;
    cfg.schedule.base_lr = 1e200;  // guaranteed overflow
    cfg.batch_size = 4;
    cfg.max_steps = 200;
    cfg.eval_interval = 1000000;
    TrainResult r = train::train(model, ds, data::Dataset{}, cfg);
    CHECK(r.diverged);
    CHECK(r.steps < 200);
}

TEST_CASE("evaluate computes MAEs and ignores dataset order") {
    data::SyntheticOracle oracle;
    data::Dataset ds = data::generate_synthetic(oracle, triatomic(), 6, 0.05, 13);
    SchNetModel model(tiny_config(), 8);
    model.normalizer = data::normalizer_fit(ds);
    Metrics m = evaluate(model, ds);
    CHECK(m.has_forces);
    CHECK(m.energy_mae > 0.0);
    data::Dataset rev = ds;
    std::reverse(rev.frames.begin(), rev.frames.end());
    Metrics m2 = evaluate(model, rev);
    CHECK(m.energy_mae == doctest::Approx(m2.energy_mae).epsilon(1e-14));
    CHECK(m.force_mae == doctest::Approx(m2.force_mae).epsilon(1e-14));
}
