#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "mlct/net.hpp"
#include "mlct/schedule.hpp"

namespace mlct {

// Posterior mean E[x_eps | x_t] for a finite dataset under the VP kernel,
// log-sum-exp stabilized. At t=0 returns the nearest dataset point.
Mat exact_denoiser(const Mat& x_t, double t, const std::vector<Mat>& dataset,
                   const NoiseSchedule& schedule);

using Denoiser = std::function<Mat(const Mat& x_t, double t)>;

// Euler integration of the probability-flow ODE from T down to epsilon on a
// grid uniform in log-SNR. Starts from a unit Gaussian draw.
Mat pf_ode_euler_sample(const Denoiser& denoiser, const NoiseSchedule& schedule,
                        int steps, int dim, double epsilon, double T,
                        std::mt19937_64& rng);

// Conventional x_eps-prediction diffusion model on the same latents; the
// many-step reference the consistency model is compared against.
struct ScoreBaseline {
    BackboneConfig backbone;
    ModelParams params;
};

struct BaselineTrainConfig {
    int steps = 3000;
    int batch = 32;
    double lr = 1e-3;
    uint64_t seed = 0;
    int log_every = 50;
};

struct BaselineLogEntry {
    long step;
    double loss;
};

std::vector<BaselineLogEntry> train_score_baseline(ScoreBaseline& model,
                                                   const Mat& latents,
                                                   const Mat& cond_rows,
                                                   const TimeGrid& grid,
                                                   const NoiseSchedule& schedule,
                                                   const BaselineTrainConfig& cfg);

// x_eps prediction of the trained baseline (raw backbone head).
Mat baseline_predict(const ScoreBaseline& model, const Mat& x_t, double t,
                     const Mat& cond_row);

}  // namespace mlct
