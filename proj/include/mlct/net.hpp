#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "mlct/autodiff.hpp"
#include "mlct/schedule.hpp"

namespace mlct {

// Named parameter arrays. std::map keeps iteration order deterministic,
// which checkpointing and the optimizer rely on.
struct ModelParams {
    std::map<std::string, Mat> arrays;
    uint64_t seed = 0;
    uint32_t version = 1;

    bool same_shapes(const ModelParams& other) const;
    bool all_finite() const;
};

struct AdamWState {
    std::map<std::string, Mat> m;
    std::map<std::string, Mat> v;
    long step = 0;
};

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// Decoupled weight-decay adaptive update. Throws if any gradient is non-finite.
void adamw_step(ModelParams& params, const std::map<std::string, Mat>& grads,
                AdamWState& state, const AdamWConfig& cfg);

// target <- gamma * target + (1 - gamma) * online, elementwise.
void ema_update(ModelParams& target, const ModelParams& online, double gamma);

// Residual MLP backbone with U-shaped long skips. Time embedding is
// sinusoidal, projected and summed with the condition embedding before
// every block; an optional clustering representation is affinely mapped
// and added to each block input.
struct BackboneConfig {
    int in_dim = 64;       // flattened latent n*d
    int width = 256;
    int blocks = 6;
    int time_dim = 64;
    int cond_dim = 32;
    int cluster_dim = 0;   // 0 disables the fusion path
};

// Fresh backbone parameters; final layer zero-initialized so the model
// starts as the pure skip path.
ModelParams init_backbone(const BackboneConfig& cfg, uint64_t seed);

// Per-row sinusoidal embedding of scalar times.
Mat time_embedding(const Eigen::VectorXd& t, int dim);

// Taped forward. x_t: B x in_dim, cond: B x cond_dim (constant rows),
// cluster_ref: optional taped B x cluster_dim. `params` must be registered
// on the tape first with register_params; the returned Var is the raw head.
struct TapedParams {
    std::map<std::string, ad::Var> vars;
};
TapedParams register_params(ad::Tape& tape, const ModelParams& params,
                            bool requires_grad);

ad::Var backbone_forward(ad::Tape& tape, const TapedParams& tp,
                         const BackboneConfig& cfg, ad::Var x_t,
                         const Eigen::VectorXd& t, ad::Var cond,
                         std::optional<ad::Var> cluster_ref);

// c_skip(t) x_t + c_out(t) raw, rows scaled per-item.
ad::Var consistency_head(ad::Tape& tape, ad::Var x_t, ad::Var raw,
                         const Eigen::VectorXd& t, double eta = 0.5);

// Convenience non-taped evaluation of the full consistency model.
Mat consistency_apply(const ModelParams& params, const BackboneConfig& cfg,
                      const Mat& x_t, const Eigen::VectorXd& t, const Mat& cond,
                      const Mat* cluster_ref = nullptr, double eta = 0.5);

// Collect gradients off a tape into arrays aligned with the params.
std::map<std::string, Mat> collect_grads(const ad::Tape& tape,
                                         const TapedParams& tp,
                                         const ModelParams& params);

}  // namespace mlct
