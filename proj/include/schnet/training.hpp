#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "schnet/data.hpp"
#include "schnet/graph.hpp"
#include "schnet/model.hpp"

namespace schnet::train {

// Combined objective weight: rho * ||E - E_hat||^2 + mean_i ||F_i - F_hat_i||^2.
// With train_forces=false only the energy term remains (rho treated as 1).
struct LossConfig {
    double rho = 0.01;
    bool train_forces = true;
};

struct LrSchedule {
    double base_lr = 1e-3;
    double decay_ratio = 0.96;
    std::size_t decay_every = 100000;
    bool staircase = true;

    double at(std::size_t step) const;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Tensor> m, v;
    std::size_t t = 0;

    void init(const std::vector<Param>& params);
};

struct EmaState {
    double decay = 0.99;
    std::vector<Tensor> shadow;

    void init(const std::vector<Param>& params);
    void update(const std::vector<Param>& params);
};

enum class SelectionMetric { combined, energy, force };

struct TrainConfig {
    LossConfig loss;
    LrSchedule schedule;
    AdamConfig adam;
    double ema_decay = 0.99;
    std::size_t batch_size = 32;
    std::size_t max_steps = 100000;
    std::size_t eval_interval = 1000;
    std::size_t patience = 25;
    SelectionMetric selection = SelectionMetric::combined;
    std::uint64_t seed = 0;
    std::string metrics_csv;      // empty disables the log
    bool log_wall_time = true;    // false writes 0, keeping the CSV reproducible
    bool fit_normalizer = true;
};

struct Metrics {
    double energy_mae = 0.0;
    double force_mae = 0.0;
    bool has_forces = false;
};

struct TrainState {
    AdamState adam;
    EmaState ema;
    std::size_t step = 0;
    double best_metric = std::numeric_limits<double>::infinity();
    std::size_t evals_since_improvement = 0;
    std::vector<Tensor> best_params;  // EMA weights at the best evaluation
    std::vector<Tensor> raw_params;   // live weights, kept for exact resume
    bool initialized = false;
};

struct TrainResult {
    std::size_t steps = 0;
    Metrics final_val;
    double last_train_loss = 0.0;
    bool diverged = false;
    bool early_stopped = false;
};

// Scalar training loss for a batch; labels are normalized with the model's
// normalizer. The force residual is built with create_graph so the result
// stays differentiable w.r.t. the parameters.
ad::Variable batch_loss(ad::Graph& g, const SchNetModel& model,
                        const SchNetModel::Forward& fw,
                        const data::MiniBatch& batch, const LossConfig& cfg);

// Bias-corrected Adam update, in place. Throws on non-finite gradients,
// naming the offending parameter.
void adam_step(std::vector<Param>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamConfig& cfg, double lr);

Metrics evaluate(const SchNetModel& model, const data::Dataset& ds);

// Full protocol: Adam + staircase decay + EMA shadow weights + validation
// early stopping. On return the model carries the best EMA weights.
TrainResult train(SchNetModel& model, const data::Dataset& train_ds,
                  const data::Dataset& val_ds, const TrainConfig& cfg,
                  TrainState* state = nullptr);

void save_train_state(const std::string& path, const SchNetModel& model,
                      const TrainState& state);
TrainState load_train_state(const std::string& path, SchNetModel& model);

}  // namespace schnet::train
