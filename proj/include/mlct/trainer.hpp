#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mlct/clustering.hpp"
#include "mlct/net.hpp"
#include "mlct/schedule.hpp"

namespace mlct {

struct TrainConfig {
    double omega = 4.0;      // guidance scale
    double gamma = 0.995;    // EMA rate
    TimeGrid grid;
    double lr = 1e-4;
    double lr_final = 1.0;   // cosine-decay floor as a fraction of lr
    int steps = 20000;
    int batch = 64;
    double huber_c = 0.0;    // <= 0 selects 0.00054 * sqrt(n*d)
    uint64_t seed = 0;
    bool use_clustering = true;
    bool clamp_targets = true;  // off only for the unconstrained-latent ablation
    int log_every = 50;

    void validate() const;
};

// Online/EMA parameter pair plus everything needed to evaluate S_psi.
struct ConsistencyModel {
    BackboneConfig backbone;
    ModelParams online;   // psi
    ModelParams target;   // psi^-
    ClusterDictionary dict;
    bool has_dict = false;
    double eta = 0.5;
};

// Uniform draw of an adjacent grid pair; returns (t_i, t_prev) with t_prev < t_i.
std::pair<double, double> sample_adjacent_pair(const TimeGrid& grid,
                                               std::mt19937_64& rng);

// (1 + omega) x_eps - omega * uncond_pred, clamped elementwise to [-1, 1].
Mat simulate_cfg_target(const Mat& x_eps, const Mat& uncond_pred, double omega,
                        bool clamp = true);
// Spec-facing overload that evaluates the unconditional branch itself.
Mat simulate_cfg_target(const Mat& x_eps, const Mat& x_t, double t, double omega,
                        const ConsistencyModel& model);

// sqrt(||a - b||^2 + c^2) - c over whole arrays.
double pseudo_huber(const Mat& a, const Mat& b, double c);

struct StepStats {
    double consistency_loss = 0.0;
    double uncond_loss = 0.0;
    double grad_norm = 0.0;
};

// One full inner-loop iteration: perturb, CFG trajectory simulation, solver
// estimate, two-term loss, AdamW on psi, EMA onto psi^-.
StepStats consistency_train_step(ConsistencyModel& model, const Mat& x_eps,
                                 const Mat& cond, AdamWState& opt,
                                 const NoiseSchedule& schedule,
                                 const TrainConfig& cfg, std::mt19937_64& rng);

struct TrainRecord {
    long step;
    double consistency_loss;
    double uncond_loss;
    double grad_norm;
    double wall_ms;
};

// Full stage-2 loop over precomputed latents. latents: items x (n*d),
// cond_rows: items x d_c (fixed class embeddings).
std::vector<TrainRecord> train_consistency(ConsistencyModel& model,
                                           const Mat& latents,
                                           const Mat& cond_rows,
                                           const NoiseSchedule& schedule,
                                           const TrainConfig& cfg);

}  // namespace mlct
