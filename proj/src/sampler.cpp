#include "mlct/sampler.hpp"

#include <stdexcept>

#include "mlct/rng.hpp"

namespace mlct {

std::vector<double> select_nfe_times(const TimeGrid& grid, int nfe) {
    int N = static_cast<int>(grid.times.size());
    if (nfe < 1 || nfe > N)
        throw std::invalid_argument("select_nfe_times: nfe outside [1, N]");
    if (nfe == 1) return {grid.times.back()};
    std::vector<double> taus(nfe);
    for (int m = 0; m < nfe; ++m) {
        int idx = (m * (N - 1)) / (nfe - 1);  // 0-based even-index spacing
        taus[m] = grid.times[idx];
    }
    return taus;
}

SampleResult sample(const ConsistencyModel& model, const Mat& cond_row,
                    const ModelParams& codec, const CodecConfig& codec_cfg,
                    const NoiseSchedule& schedule, const TimeGrid& grid,
                    const SampleOptions& opt) {
    if (model.online.arrays.empty())
        throw std::invalid_argument("sample: missing model parameters");
    if (cond_row.rows() != 1)
        throw std::invalid_argument("sample: cond_row must be a single row");
    const int D = model.backbone.in_dim;
    auto taus = select_nfe_times(grid, opt.nfe);

    auto rng = make_rng(opt.seed, "sampling");
    std::normal_distribution<double> dist;
    auto draw = [&](int cols) {
        Mat z(1, cols);
        for (int j = 0; j < cols; ++j) z(0, j) = dist(rng);
        return z;
    };

    // dictionary queried once per sampling run
    Mat cluster_ref;
    const Mat* cluster_ptr = nullptr;
    if (model.has_dict) {
        cluster_ref = query(cond_row, model.dict,
                            model.online.arrays.at("dict.A.W"),
                            model.online.arrays.at("dict.A.b"));
        cluster_ptr = &cluster_ref;
    }

    Mat x = draw(D);
    Mat z_reuse;
    if (opt.reuse_noise) z_reuse = draw(D);

    SampleResult res;
    Mat x_hat;
    for (int j = opt.nfe - 1; j >= 0; --j) {
        double tau = taus[j];
        if (j < opt.nfe - 1) {
            const Mat& z = opt.reuse_noise ? z_reuse : (z_reuse = draw(D));
            x = schedule.alpha(tau) * x_hat + schedule.sigma(tau) * z;
        }
        Eigen::VectorXd tv = Eigen::VectorXd::Constant(1, tau);
        x_hat = consistency_apply(model.online, model.backbone, x, tv, cond_row,
                                  cluster_ptr, model.eta);
        res.evals += 1;
        if (opt.clamp) x_hat = x_hat.cwiseMax(-1.0).cwiseMin(1.0);
    }
    res.latent = x_hat;
    res.decoded = decode(codec, codec_cfg, x_hat, opt.frames);
    return res;
}

}  // namespace mlct
