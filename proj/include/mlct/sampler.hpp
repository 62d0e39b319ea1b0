#pragma once

#include <cstdint>
#include <vector>

#include "mlct/codec.hpp"
#include "mlct/trainer.hpp"

namespace mlct {

// Ascending sub-grid tau_1 < ... < tau_nfe = T picked at evenly spaced
// indices of the full grid.
std::vector<double> select_nfe_times(const TimeGrid& grid, int nfe);

struct SampleResult {
    Mat latent;    // 1 x (n*d), in [-1,1] when clamped
    Mat decoded;   // frames x J
    int evals = 0; // network function evaluations
};

struct SampleOptions {
    int nfe = 4;
    int frames = 48;
    uint64_t seed = 0;
    bool reuse_noise = false;  // literal pseudocode variant: one z for all re-noises
    bool clamp = true;         // off only for the unconstrained-latent ablation
};

// Few-step inference: denoise -> clamp -> re-noise over the chosen sub-grid,
// then decode. The dictionary is queried once, before the loop.
SampleResult sample(const ConsistencyModel& model, const Mat& cond_row,
                    const ModelParams& codec, const CodecConfig& codec_cfg,
                    const NoiseSchedule& schedule, const TimeGrid& grid,
                    const SampleOptions& opt);

}  // namespace mlct
