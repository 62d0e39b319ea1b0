#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlct/autodiff.hpp"
#include "mlct/net.hpp"

namespace mlct {

// Toy motion item: F frames of J per-frame velocity channels.
struct MotionSequence {
    uint32_t id = 0;
    uint16_t label = 0;
    Mat data;  // F x J
    int frames() const { return static_cast<int>(data.rows()); }
    int channels() const { return static_cast<int>(data.cols()); }
};

struct CodecConfig {
    int n = 4;          // latent tokens
    int d = 16;         // token dimension
    int level = 256;    // quantization level l; entries of z lie on {-1..j/l..1}
    int channels = 3;   // J
    int width = 96;     // hidden width of encoder/decoder MLPs
    int pos_dim = 16;   // decoder frame-position encoding size
    int f_min = 16;
    int f_max = 96;
    double lambda_j = 1e-3;
    bool quantize = true;   // ablation switch: false trains on raw z_e
    int latent_dim() const { return n * d; }
};

ModelParams init_codec(const CodecConfig& cfg, uint64_t seed);

// Taped encoder: F x J frames -> 1 x (n*d) pre-activation latent.
ad::Var encode_taped(ad::Tape& tape, const TapedParams& tp,
                     const CodecConfig& cfg, ad::Var frames);

// Taped quantizer: z_m = round(l * tanh(z_e)) / l, STE backward.
ad::Var quantize_taped(ad::Tape& tape, ad::Var z_e, int level);

// Taped decoder: 1 x (n*d) latent -> F x J reconstruction.
ad::Var decode_taped(ad::Tape& tape, const TapedParams& tp,
                     const CodecConfig& cfg, ad::Var latent, int frames);

// Non-taped conveniences with a frozen codec.
Mat encode(const ModelParams& params, const CodecConfig& cfg, const Mat& frames);
Mat quantize(const Mat& z_e, int level);
Mat decode(const ModelParams& params, const CodecConfig& cfg, const Mat& latent,
           int frames);
// Full encode -> (optional) quantize path used by stage 2 and sampling.
Mat encode_latent(const ModelParams& params, const CodecConfig& cfg,
                  const Mat& frames);

// Velocities -> positions: cumulative sum along the frame axis.
Mat joint_transform(const Mat& velocities);

// smoothL1(x, x_hat) + lambda_j * smoothL1(J(x), J(x_hat))
double recon_loss(const Mat& x, const Mat& x_hat, double lambda_j);

struct CodecTrainConfig {
    int steps = 2000;
    int batch = 16;
    double lr = 1e-3;
    uint64_t seed = 0;
    int log_every = 50;
};

struct TrainLogEntry {
    long step;
    double loss;
};

// Stage 1: encode -> quantize -> decode -> reconstruction + joint loss -> AdamW.
// Throws on NaN loss.
std::vector<TrainLogEntry> train_codec(ModelParams& params,
                                       const std::vector<MotionSequence>& corpus,
                                       const CodecConfig& cfg,
                                       const CodecTrainConfig& tcfg);

}  // namespace mlct
