#include "mlct/codec.hpp"

#include <cmath>
#include <stdexcept>

#include "mlct/rng.hpp"

namespace mlct {

namespace {

Mat randn(int rows, int cols, std::mt19937_64& rng, double std) {
    std::normal_distribution<double> dist(0.0, std);
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

Mat init_linear(int in, int out, std::mt19937_64& rng) {
    return randn(in, out, rng, std::sqrt(2.0 / in));
}

// Sinusoidal encoding of normalized frame positions, one row per frame.
Mat position_encoding(int frames, int dim) {
    int half = dim / 2;
    Mat e(frames, 2 * half);
    for (int i = 0; i < frames; ++i) {
        double u = frames > 1 ? static_cast<double>(i) / (frames - 1) : 0.0;
        for (int k = 0; k < half; ++k) {
            double freq = std::exp(std::log(100.0) * k / std::max(1, half - 1));
            e(i, k) = std::sin(u * freq);
            e(i, half + k) = std::cos(u * freq);
        }
    }
    return e;
}

}  // namespace

ModelParams init_codec(const CodecConfig& cfg, uint64_t seed) {
    ModelParams p;
    p.seed = seed;
    auto rng = make_rng(seed, "codec-init");
    int ld = cfg.latent_dim();
    p.arrays["enc.f1.W"] = init_linear(cfg.channels, cfg.width, rng);
    p.arrays["enc.f1.b"] = Mat::Zero(1, cfg.width);
    p.arrays["enc.f2.W"] = init_linear(cfg.width, cfg.width, rng);
    p.arrays["enc.f2.b"] = Mat::Zero(1, cfg.width);
    p.arrays["enc.out.W"] = init_linear(cfg.width, ld, rng);
    p.arrays["enc.out.b"] = Mat::Zero(1, ld);
    p.arrays["dec.in.W"] = init_linear(ld, cfg.width, rng);
    p.arrays["dec.in.b"] = Mat::Zero(1, cfg.width);
    p.arrays["dec.pos.W"] = init_linear(cfg.pos_dim, cfg.width, rng);
    p.arrays["dec.h.W"] = init_linear(cfg.width, cfg.width, rng);
    p.arrays["dec.h.b"] = Mat::Zero(1, cfg.width);
    p.arrays["dec.out.W"] = init_linear(cfg.width, cfg.channels, rng);
    p.arrays["dec.out.b"] = Mat::Zero(1, cfg.channels);
    return p;
}

ad::Var encode_taped(ad::Tape& tape, const TapedParams& tp,
                     const CodecConfig& cfg, ad::Var frames) {
    const auto& v = tp.vars;
    if (tape.value(frames).rows() == 0)
        throw std::invalid_argument("encode: empty sequence");
    if (tape.value(frames).cols() != cfg.channels)
        throw std::invalid_argument("encode: channel mismatch");
    ad::Var h = tape.silu(tape.add_row(tape.matmul(frames, v.at("enc.f1.W")),
                                       v.at("enc.f1.b")));
    h = tape.silu(tape.add_row(tape.matmul(h, v.at("enc.f2.W")), v.at("enc.f2.b")));
    ad::Var pooled = tape.mean_rows(h);
    return tape.add_row(tape.matmul(pooled, v.at("enc.out.W")), v.at("enc.out.b"));
}

ad::Var quantize_taped(ad::Tape& tape, ad::Var z_e, int level) {
    return tape.quantize_ste(tape.tanh(z_e), level);
}

ad::Var decode_taped(ad::Tape& tape, const TapedParams& tp,
                     const CodecConfig& cfg, ad::Var latent, int frames) {
    if (frames < cfg.f_min || frames > cfg.f_max)
        throw std::invalid_argument("decode: frame count outside configured range");
    const auto& v = tp.vars;
    ad::Var base = tape.add_row(tape.matmul(latent, v.at("dec.in.W")),
                                v.at("dec.in.b"));
    ad::Var pos = tape.leaf(position_encoding(frames, cfg.pos_dim));
    ad::Var h = tape.add(tape.broadcast_rows(base, frames),
                         tape.matmul(pos, v.at("dec.pos.W")));
    h = tape.silu(h);
    h = tape.silu(tape.add_row(tape.matmul(h, v.at("dec.h.W")), v.at("dec.h.b")));
    return tape.add_row(tape.matmul(h, v.at("dec.out.W")), v.at("dec.out.b"));
}

Mat encode(const ModelParams& params, const CodecConfig& cfg, const Mat& frames) {
    ad::Tape tape;
    TapedParams tp = register_params(tape, params, false);
    return tape.value(encode_taped(tape, tp, cfg, tape.leaf(frames)));
}

Mat quantize(const Mat& z_e, int level) {
    if (level < 1) throw std::invalid_argument("quantize: level must be >= 1");
    double l = static_cast<double>(level);
    return (z_e.array().tanh() * l).round() / l;
}

Mat encode_latent(const ModelParams& params, const CodecConfig& cfg,
                  const Mat& frames) {
    Mat z_e = encode(params, cfg, frames);
    return cfg.quantize ? quantize(z_e, cfg.level) : z_e;
}

Mat decode(const ModelParams& params, const CodecConfig& cfg, const Mat& latent,
           int frames) {
    ad::Tape tape;
    TapedParams tp = register_params(tape, params, false);
    return tape.value(decode_taped(tape, tp, cfg, tape.leaf(latent), frames));
}

Mat joint_transform(const Mat& velocities) {
    Mat pos = velocities;
    for (Eigen::Index i = 1; i < pos.rows(); ++i) pos.row(i) += pos.row(i - 1);
    return pos;
}

double recon_loss(const Mat& x, const Mat& x_hat, double lambda_j) {
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
        throw std::invalid_argument("recon_loss: shape mismatch");
    ad::Tape tape;
    ad::Var a = tape.leaf(x);
    ad::Var b = tape.leaf(x_hat);
    ad::Var l = tape.smooth_l1(a, b);
    if (lambda_j != 0.0) {
        ad::Var lj = tape.smooth_l1(tape.cumsum_rows(a), tape.cumsum_rows(b));
        l = tape.add(l, tape.scale(lj, lambda_j));
    }
    return tape.value(l)(0, 0);
}

std::vector<TrainLogEntry> train_codec(ModelParams& params,
                                       const std::vector<MotionSequence>& corpus,
                                       const CodecConfig& cfg,
                                       const CodecTrainConfig& tcfg) {
    if (corpus.empty()) throw std::invalid_argument("train_codec: empty corpus");
    auto rng = make_rng(tcfg.seed, "codec-train");
    std::uniform_int_distribution<size_t> pick(0, corpus.size() - 1);
    AdamWState opt;
    AdamWConfig ocfg;
    ocfg.lr = tcfg.lr;
    std::vector<TrainLogEntry> log;
    for (int step = 0; step < tcfg.steps; ++step) {
        ad::Tape tape;
        TapedParams tp = register_params(tape, params, true);
        ad::Var total = tape.leaf(Mat::Zero(1, 1));
        for (int b = 0; b < tcfg.batch; ++b) {
            const MotionSequence& item = corpus[pick(rng)];
            ad::Var x = tape.leaf(item.data);
            ad::Var z_e = encode_taped(tape, tp, cfg, x);
            // quantize=false is the "no representation constraint" ablation:
            // the decoder sees the raw continuous latent.
            ad::Var z = cfg.quantize ? quantize_taped(tape, z_e, cfg.level) : z_e;
            ad::Var x_hat = decode_taped(tape, tp, cfg, z, item.frames());
            ad::Var l = tape.smooth_l1(x, x_hat);
            if (cfg.lambda_j != 0.0) {
                ad::Var lj = tape.smooth_l1(tape.cumsum_rows(x),
                                            tape.cumsum_rows(x_hat));
                l = tape.add(l, tape.scale(lj, cfg.lambda_j));
            }
            total = tape.add(total, l);
        }
        total = tape.scale(total, 1.0 / tcfg.batch);
        double loss = tape.value(total)(0, 0);
        if (!std::isfinite(loss))
            throw std::runtime_error("train_codec: diverged (non-finite loss) at step " +
                                     std::to_string(step));
        tape.backward(total);
        adamw_step(params, collect_grads(tape, tp, params), opt, ocfg);
        if (step % tcfg.log_every == 0 || step == tcfg.steps - 1)
            log.push_back({step, loss});
    }
    return log;
}

}  // namespace mlct
