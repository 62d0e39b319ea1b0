#include "mlct/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mlct/rng.hpp"

namespace mlct {

Mat exact_denoiser(const Mat& x_t, double t, const std::vector<Mat>& dataset,
                   const NoiseSchedule& schedule) {
    if (dataset.empty()) throw std::invalid_argument("exact_denoiser: empty dataset");
    double a = schedule.alpha(t);
    double s = schedule.sigma(t);
    if (s == 0.0) {
        // sigma=0: posterior collapses to the nearest dataset point
        size_t best = 0;
        double bd = std::numeric_limits<double>::max();
        for (size_t j = 0; j < dataset.size(); ++j) {
            double d = (x_t - a * dataset[j]).squaredNorm();
            if (d < bd) { bd = d; best = j; }
        }
        return dataset[best];
    }
    std::vector<double> logw(dataset.size());
    double m = -std::numeric_limits<double>::max();
    for (size_t j = 0; j < dataset.size(); ++j) {
        logw[j] = -(x_t - a * dataset[j]).squaredNorm() / (2.0 * s * s);
        m = std::max(m, logw[j]);
    }
    double z = 0.0;
    for (double lw : logw) z += std::exp(lw - m);
    Mat out = Mat::Zero(x_t.rows(), x_t.cols());
    for (size_t j = 0; j < dataset.size(); ++j)
        out += (std::exp(logw[j] - m) / z) * dataset[j];
    return out;
}

Mat pf_ode_euler_sample(const Denoiser& denoiser, const NoiseSchedule& schedule,
                        int steps, int dim, double epsilon, double T,
                        std::mt19937_64& rng) {
    if (steps < 10) throw std::invalid_argument("pf_ode_euler_sample: steps < 10");

    // invert lambda(t) (strictly decreasing) by bisection
    auto t_of_lambda = [&](double lam) {
        double lo = epsilon, hi = T;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (schedule.log_snr(mid) > lam)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    double lam_T = schedule.log_snr(T);
    double lam_eps = schedule.log_snr(epsilon);

    std::normal_distribution<double> dist;
    Mat x(1, dim);
    for (int j = 0; j < dim; ++j) x(0, j) = dist(rng);

    double t = T;
    for (int i = 1; i <= steps; ++i) {
        double lam_next = lam_T + (lam_eps - lam_T) * static_cast<double>(i) / steps;
        double t_next = (i == steps) ? epsilon : t_of_lambda(lam_next);
        double dt = t_next - t;  // negative
        auto [f, g2] = schedule.drift_diffusion(t);
        Mat x0 = denoiser(x, t);
        double s = schedule.sigma(t);
        Mat score = (schedule.alpha(t) * x0 - x) / (s * s);
        x = x + dt * (f * x - 0.5 * g2 * score);
        t = t_next;
    }
    return x;
}

std::vector<BaselineLogEntry> train_score_baseline(ScoreBaseline& model,
                                                   const Mat& latents,
                                                   const Mat& cond_rows,
                                                   const TimeGrid& grid,
                                                   const NoiseSchedule& schedule,
                                                   const BaselineTrainConfig& cfg) {
    if (latents.rows() == 0)
        throw std::invalid_argument("train_score_baseline: empty latent set");
    auto rng = make_rng(cfg.seed, "baseline-train");
    std::uniform_int_distribution<int> pick(0, static_cast<int>(latents.rows()) - 1);
    std::uniform_int_distribution<size_t> pick_t(0, grid.times.size() - 1);
    std::normal_distribution<double> dist;
    AdamWState opt;
    AdamWConfig ocfg;
    ocfg.lr = cfg.lr;
    std::vector<BaselineLogEntry> log;
    const int D = static_cast<int>(latents.cols());
    for (int step = 0; step < cfg.steps; ++step) {
        Mat x_eps(cfg.batch, D), cond(cfg.batch, cond_rows.cols()), x_t(cfg.batch, D);
        Eigen::VectorXd tv(cfg.batch);
        for (int b = 0; b < cfg.batch; ++b) {
            int i = pick(rng);
            x_eps.row(b) = latents.row(i);
            cond.row(b) = cond_rows.row(i);
            tv(b) = grid.times[pick_t(rng)];
            for (int j = 0; j < D; ++j)
                x_t(b, j) = schedule.alpha(tv(b)) * x_eps(b, j) +
                            schedule.sigma(tv(b)) * dist(rng);
        }
        ad::Tape tape;
        TapedParams tp = register_params(tape, model.params, true);
        ad::Var pred = backbone_forward(tape, tp, model.backbone, tape.leaf(x_t),
                                        tv, tape.leaf(cond), std::nullopt);
        ad::Var loss = tape.smooth_l1(pred, tape.leaf(x_eps));
        double l = tape.value(loss)(0, 0);
        if (!std::isfinite(l))
            throw std::runtime_error("train_score_baseline: diverged at step " +
                                     std::to_string(step));
        tape.backward(loss);
        adamw_step(model.params, collect_grads(tape, tp, model.params), opt, ocfg);
        if (step % cfg.log_every == 0 || step == cfg.steps - 1)
            log.push_back({step, l});
    }
    return log;
}

Mat baseline_predict(const ScoreBaseline& model, const Mat& x_t, double t,
                     const Mat& cond_row) {
    ad::Tape tape;
    TapedParams tp = register_params(tape, model.params, false);
    Eigen::VectorXd tv = Eigen::VectorXd::Constant(x_t.rows(), t);
    Mat cond = cond_row.replicate(x_t.rows(), 1);
    ad::Var pred = backbone_forward(tape, tp, model.backbone, tape.leaf(x_t), tv,
                                    tape.leaf(cond), std::nullopt);
    return tape.value(pred);
}

}  // namespace mlct
