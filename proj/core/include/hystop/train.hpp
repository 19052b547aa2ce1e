#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hystop/adam.hpp"
#include "hystop/dataset.hpp"
#include "hystop/models.hpp"
#include "hystop/tape.hpp"

namespace hystop {

/// Batch loss per the training objective: sqrt of the summed squared error
/// over every element of the batch (no mean reduction).
Var l2_loss(Tape& tape, Var pred, Var target);
double l2_loss_value(const Tensor& pred, const Tensor& target);

/// Model-ready tensors for one dataset part. FNO/U-FNO read inputs [N,2,L];
/// DeepONet reads inputs as the branch matrix [N,L+1] plus the shared trunk.
struct ModelData {
    Tensor inputs;
    Tensor trunk;   // [L, 1] for DeepONet, empty otherwise
    Tensor targets; // [N, L]

    int count() const { return inputs.ndim() ? inputs.shape[0] : 0; }
};

ModelData assemble_for(ModelKind kind, const NormalizedDataset& ds);

struct TrainConfig {
    int epochs = 300;       // paper defaults: 300 (FNO/U-FNO), 6000 (DeepONet)
    double lr = 1e-3;
    int batch_size = 0;     // 0 = full batch
    int chunk = 12;         // tape granularity; no effect on results
    uint64_t seed = 0;
    int checkpoint_every = 0; // epochs between resume checkpoints, 0 = none
    bool early_stopping = false;
    int patience = 100;
    std::string out_dir;      // when set, resume checkpoints land here
    std::string resume_from;  // optional resume checkpoint path
};

struct TrainReport {
    std::vector<double> loss; // one entry per epoch
    std::vector<double> val_loss; // empty without a validation split
    double final_train_loss = 0.0;
    double wall_seconds = 0.0;
    uint64_t seed = 0;
    std::string config_hash;
    int best_epoch = -1; // epoch of the kept parameters (-1 = final)
};

/// Runs Adam on the l2 loss. Full-batch by default: each epoch accumulates
/// the exact gradient of sqrt(SSE) over the training set (chunked tapes,
/// grads rescaled by 1/(2 sqrt(SSE))), then takes one Adam step. With a
/// validation part the lowest-val-loss parameters are restored at the end.
/// Deterministic for a fixed (seed, config, dataset).
TrainReport fit(ModelParams& mp, const ModelData& train, const ModelData& val,
                const TrainConfig& cfg);

struct Evaluation {
    std::vector<double> sample_l2; // per-sample training-objective values
    Tensor predictions;            // [N, L], normalized units
};

Evaluation evaluate(ModelParams& mp, const ModelData& data, int chunk = 16);

std::string train_report_json(const TrainReport& report);
std::string loss_curve_csv(const TrainReport& report);

/// FNV-1a over a canonical serialization; stable artifact naming.
std::string fnv1a_hex(const std::string& bytes);

} // namespace hystop
