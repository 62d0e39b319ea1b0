#include "mlct/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mlct/rng.hpp"

namespace mlct {

void TrainConfig::validate() const {
    if (omega < 0.0) throw std::invalid_argument("TrainConfig: omega < 0");
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("TrainConfig: gamma outside [0,1]");
    if (grid.times.size() < 2)
        throw std::invalid_argument("TrainConfig: grid needs >= 2 points");
    if (!(lr_final >= 0.0 && lr_final <= 1.0))
        throw std::invalid_argument("TrainConfig: lr_final outside [0,1]");
}

std::pair<double, double> sample_adjacent_pair(const TimeGrid& grid,
                                               std::mt19937_64& rng) {
    if (grid.times.size() < 2)
        throw std::invalid_argument("sample_adjacent_pair: grid too small");
    std::uniform_int_distribution<size_t> pick(1, grid.times.size() - 1);
    size_t i = pick(rng);
    return {grid.times[i], grid.times[i - 1]};
}

Mat simulate_cfg_target(const Mat& x_eps, const Mat& uncond_pred, double omega,
                        bool clamp) {
    if (x_eps.rows() != uncond_pred.rows() || x_eps.cols() != uncond_pred.cols())
        throw std::invalid_argument("simulate_cfg_target: shape mismatch");
    Mat out = (1.0 + omega) * x_eps - omega * uncond_pred;
    if (clamp) out = out.cwiseMax(-1.0).cwiseMin(1.0);
    return out;
}

Mat simulate_cfg_target(const Mat& x_eps, const Mat& x_t, double t, double omega,
                        const ConsistencyModel& model) {
    Eigen::VectorXd tv = Eigen::VectorXd::Constant(x_t.rows(), t);
    Mat null_rows = model.online.arrays.at("null.c").replicate(x_t.rows(), 1);
    Mat uncond = consistency_apply(model.online, model.backbone, x_t, tv,
                                   null_rows, nullptr, model.eta);
    return simulate_cfg_target(x_eps, uncond, omega, true);
}

double pseudo_huber(const Mat& a, const Mat& b, double c) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("pseudo_huber: shape mismatch");
    if (!(c > 0.0)) throw std::invalid_argument("pseudo_huber: c <= 0");
    return std::sqrt((a - b).squaredNorm() + c * c) - c;
}

namespace {

double resolve_huber_c(const TrainConfig& cfg, int dim) {
    return cfg.huber_c > 0.0 ? cfg.huber_c : 0.00054 * std::sqrt(double(dim));
}

Mat gaussian(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    Mat z(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) z(i, j) = dist(rng);
    return z;
}

}  // namespace

StepStats consistency_train_step(ConsistencyModel& model, const Mat& x_eps,
                                 const Mat& cond, AdamWState& opt,
                                 const NoiseSchedule& schedule,
                                 const TrainConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    const int B = static_cast<int>(x_eps.rows());
    const int D = static_cast<int>(x_eps.cols());
    const double c_h = resolve_huber_c(cfg, D);

    // per-item adjacent pairs and noise
    Eigen::VectorXd t_i(B), t_prev(B), inv_delta(B);
    for (int b = 0; b < B; ++b) {
        auto [ti, tp] = sample_adjacent_pair(cfg.grid, rng);
        t_i(b) = ti;
        t_prev(b) = tp;
        inv_delta(b) = 1.0 / (ti - tp);
    }
    Mat z = gaussian(B, D, rng);
    Mat x_t(B, D);
    for (int b = 0; b < B; ++b)
        x_t.row(b) = schedule.alpha(t_i(b)) * x_eps.row(b) +
                     schedule.sigma(t_i(b)) * z.row(b);

    ad::Tape tape;
    TapedParams tp = register_params(tape, model.online, true);
    ad::Var x_t_v = tape.leaf(x_t);
    ad::Var x_eps_v = tape.leaf(x_eps);
    ad::Var cond_v = tape.leaf(cond);

    // conditional branch, with clustering guidance when enabled
    std::optional<ad::Var> cluster_ref;
    if (cfg.use_clustering && model.has_dict)
        cluster_ref = query_taped(tape, cond_v, model.dict, tp.vars.at("dict.A.W"),
                                  tp.vars.at("dict.A.b"));
    ad::Var raw_c = backbone_forward(tape, tp, model.backbone, x_t_v, t_i, cond_v,
                                     cluster_ref);
    ad::Var s_cond = consistency_head(tape, x_t_v, raw_c, t_i, model.eta);

    // unconditional branch: learned null embedding, no clustering guidance
    ad::Var null_rows = tape.broadcast_rows(tp.vars.at("null.c"), B);
    ad::Var raw_u = backbone_forward(tape, tp, model.backbone, x_t_v, t_i,
                                     null_rows, std::nullopt);
    ad::Var s_uncond = consistency_head(tape, x_t_v, raw_u, t_i, model.eta);

    // detached solver target: CFG trajectory simulation + one DPM-Solver++ step
    Mat x_eps_phi = simulate_cfg_target(x_eps, tape.value(s_uncond), cfg.omega,
                                        cfg.clamp_targets);
    Mat x_tilde(B, D);
    for (int b = 0; b < B; ++b) {
        Mat row = dpmpp_step(x_t.row(b), t_i(b), t_prev(b), x_eps_phi.row(b),
                             schedule);
        x_tilde.row(b) = row;
    }
    Mat cluster_tgt;
    const Mat* cluster_tgt_ptr = nullptr;
    if (cfg.use_clustering && model.has_dict) {
        cluster_tgt = query(cond, model.dict, model.target.arrays.at("dict.A.W"),
                            model.target.arrays.at("dict.A.b"));
        cluster_tgt_ptr = &cluster_tgt;
    }
    Mat s_target = consistency_apply(model.target, model.backbone, x_tilde,
                                     t_prev, cond, cluster_tgt_ptr, model.eta);

    ad::Var loss_cons = tape.pseudo_huber_rows(s_cond, tape.leaf(s_target), c_h,
                                               inv_delta);
    ad::Var loss_unc = tape.pseudo_huber_rows(s_uncond, x_eps_v, c_h,
                                              Eigen::VectorXd::Ones(B));
    ad::Var total = tape.add(loss_cons, loss_unc);

    StepStats stats;
    stats.consistency_loss = tape.value(loss_cons)(0, 0);
    stats.uncond_loss = tape.value(loss_unc)(0, 0);
    double loss = tape.value(total)(0, 0);
    if (!std::isfinite(loss))
        throw std::runtime_error("consistency_train_step: non-finite loss");

    tape.backward(total);
    auto grads = collect_grads(tape, tp, model.online);
    double gn2 = 0.0;
    for (const auto& [name, g] : grads) gn2 += g.squaredNorm();
    stats.grad_norm = std::sqrt(gn2);

    AdamWConfig ocfg;
    ocfg.lr = cfg.lr;
    adamw_step(model.online, grads, opt, ocfg);
    ema_update(model.target, model.online, cfg.gamma);
    return stats;
}

std::vector<TrainRecord> train_consistency(ConsistencyModel& model,
                                           const Mat& latents,
                                           const Mat& cond_rows,
                                           const NoiseSchedule& schedule,
                                           const TrainConfig& cfg) {
    cfg.validate();
    if (latents.rows() == 0)
        throw std::invalid_argument("train_consistency: empty latent set");
    if (latents.rows() != cond_rows.rows())
        throw std::invalid_argument("train_consistency: latents/conditions misaligned");
    auto rng = make_rng(cfg.seed, "cm-train");
    std::uniform_int_distribution<int> pick(0, static_cast<int>(latents.rows()) - 1);
    AdamWState opt;
    std::vector<TrainRecord> log;
    auto start = std::chrono::steady_clock::now();
    for (int step = 0; step < cfg.steps; ++step) {
        Mat x_eps(cfg.batch, latents.cols());
        Mat cond(cfg.batch, cond_rows.cols());
        for (int b = 0; b < cfg.batch; ++b) {
            int i = pick(rng);
            x_eps.row(b) = latents.row(i);
            cond.row(b) = cond_rows.row(i);
        }
        TrainConfig step_cfg = cfg;
        if (cfg.lr_final < 1.0 && cfg.steps > 1) {
            double u = 0.5 * (1.0 + std::cos(M_PI * step / double(cfg.steps - 1)));
            step_cfg.lr = cfg.lr * (cfg.lr_final + (1.0 - cfg.lr_final) * u);
        }
        StepStats s;
        try {
            s = consistency_train_step(model, x_eps, cond, opt, schedule, step_cfg, rng);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("train_consistency: aborted at step " +
                                     std::to_string(step) + ": " + e.what());
        }
        if (step % cfg.log_every == 0 || step == cfg.steps - 1) {
            double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
            log.push_back({step, s.consistency_loss, s.uncond_loss, s.grad_norm, ms});
        }
    }
    return log;
}

}  // namespace mlct
