#include "mlct/net.hpp"

#include <cmath>
#include <stdexcept>

#include "mlct/rng.hpp"

namespace mlct {

bool ModelParams::same_shapes(const ModelParams& other) const {
    if (arrays.size() != other.arrays.size()) return false;
    auto it = other.arrays.begin();
    for (const auto& [name, a] : arrays) {
        if (it->first != name) return false;
        if (it->second.rows() != a.rows() || it->second.cols() != a.cols())
            return false;
        ++it;
    }
    return true;
}

bool ModelParams::all_finite() const {
    for (const auto& [name, a] : arrays)
        if (!a.allFinite()) return false;
    return true;
}

void adamw_step(ModelParams& params, const std::map<std::string, Mat>& grads,
                AdamWState& state, const AdamWConfig& cfg) {
    for (const auto& [name, g] : grads) {
        if (!g.allFinite())
            throw std::runtime_error("adamw_step: non-finite gradient in '" + name + "'");
        if (!params.arrays.count(name))
            throw std::invalid_argument("adamw_step: unknown parameter '" + name + "'");
    }
    state.step += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (auto& [name, p] : params.arrays) {
        auto git = grads.find(name);
        if (git == grads.end()) continue;
        const Mat& g = git->second;
        if (g.rows() != p.rows() || g.cols() != p.cols())
            throw std::invalid_argument("adamw_step: shape mismatch for '" + name + "'");
        Mat& m = state.m.try_emplace(name, Mat::Zero(p.rows(), p.cols())).first->second;
        Mat& v = state.v.try_emplace(name, Mat::Zero(p.rows(), p.cols())).first->second;
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        Mat mhat = m / bc1;
        Mat vhat = v / bc2;
        p.array() -= cfg.lr * cfg.weight_decay * p.array();
        p.array() -= cfg.lr * mhat.array() / (vhat.array().sqrt() + cfg.eps);
    }
}

void ema_update(ModelParams& target, const ModelParams& online, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("ema_update: gamma outside [0,1]");
    if (!target.same_shapes(online))
        throw std::invalid_argument("ema_update: parameter shape mismatch");
    auto it = online.arrays.begin();
    for (auto& [name, t] : target.arrays) {
        t = gamma * t + (1.0 - gamma) * it->second;
        ++it;
    }
}

namespace {

Mat randn(int rows, int cols, std::mt19937_64& rng, double std) {
    std::normal_distribution<double> dist(0.0, std);
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

// He-style scaling for the dense layers
Mat init_linear(int in, int out, std::mt19937_64& rng) {
    return randn(in, out, rng, std::sqrt(2.0 / in));
}

}  // namespace

ModelParams init_backbone(const BackboneConfig& cfg, uint64_t seed) {
    ModelParams p;
    p.seed = seed;
    auto rng = make_rng(seed, "init");
    p.arrays["in.W"] = init_linear(cfg.in_dim, cfg.width, rng);
    p.arrays["in.b"] = Mat::Zero(1, cfg.width);
    p.arrays["temb.W"] = init_linear(cfg.time_dim, cfg.width, rng);
    p.arrays["temb.b"] = Mat::Zero(1, cfg.width);
    p.arrays["cemb.W"] = init_linear(cfg.cond_dim, cfg.width, rng);
    p.arrays["cemb.b"] = Mat::Zero(1, cfg.width);
    p.arrays["null.c"] = Mat::Zero(1, cfg.cond_dim);
    for (int i = 0; i < cfg.blocks; ++i) {
        std::string b = "blk" + std::to_string(i);
        p.arrays[b + ".W1"] = init_linear(cfg.width, cfg.width, rng);
        p.arrays[b + ".b1"] = Mat::Zero(1, cfg.width);
        p.arrays[b + ".W2"] = randn(cfg.width, cfg.width, rng, 0.02);
        p.arrays[b + ".b2"] = Mat::Zero(1, cfg.width);
        if (cfg.cluster_dim > 0) {
            p.arrays["clu" + std::to_string(i) + ".W"] =
                Mat::Zero(cfg.cluster_dim, cfg.width);
            p.arrays["clu" + std::to_string(i) + ".b"] = Mat::Zero(1, cfg.width);
        }
    }
    p.arrays["out.W"] = Mat::Zero(cfg.width, cfg.in_dim);
    p.arrays["out.b"] = Mat::Zero(1, cfg.in_dim);
    return p;
}

Mat time_embedding(const Eigen::VectorXd& t, int dim) {
    int half = dim / 2;
    Mat e(t.size(), 2 * half);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        for (int k = 0; k < half; ++k) {
            double freq = std::exp(std::log(1000.0) * k / std::max(1, half - 1));
            e(i, k) = std::sin(t(i) * freq);
            e(i, half + k) = std::cos(t(i) * freq);
        }
    }
    return e;
}

TapedParams register_params(ad::Tape& tape, const ModelParams& params,
                            bool requires_grad) {
    TapedParams tp;
    for (const auto& [name, a] : params.arrays)
        tp.vars[name] = tape.leaf(a, requires_grad);
    return tp;
}

ad::Var backbone_forward(ad::Tape& tape, const TapedParams& tp,
                         const BackboneConfig& cfg, ad::Var x_t,
                         const Eigen::VectorXd& t, ad::Var cond,
                         std::optional<ad::Var> cluster_ref) {
    const auto& v = tp.vars;
    auto at = [&](const std::string& n) -> ad::Var {
        auto it = v.find(n);
        if (it == v.end()) throw std::invalid_argument("missing parameter '" + n + "'");
        return it->second;
    };
    if (tape.value(x_t).cols() != cfg.in_dim)
        throw std::invalid_argument("backbone_forward: x_t width != in_dim");
    if (tape.value(cond).cols() != cfg.cond_dim)
        throw std::invalid_argument("backbone_forward: cond width != cond_dim");
    if (tape.value(x_t).rows() != t.size() ||
        tape.value(x_t).rows() != tape.value(cond).rows())
        throw std::invalid_argument("backbone_forward: batch size mismatch");

    ad::Var h = tape.add_row(tape.matmul(x_t, at("in.W")), at("in.b"));
    ad::Var te = tape.leaf(time_embedding(t, cfg.time_dim));
    ad::Var emb = tape.add(tape.add_row(tape.matmul(te, at("temb.W")), at("temb.b")),
                           tape.add_row(tape.matmul(cond, at("cemb.W")), at("cemb.b")));

    std::vector<ad::Var> skip_stack;
    int half = cfg.blocks / 2;
    for (int i = 0; i < cfg.blocks; ++i) {
        std::string b = "blk" + std::to_string(i);
        ad::Var u = tape.add(h, emb);
        if (cluster_ref) {
            std::string c = "clu" + std::to_string(i);
            ad::Var f = tape.add_row(tape.matmul(*cluster_ref, at(c + ".W")),
                                     at(c + ".b"));
            u = tape.add(u, f);
        }
        ad::Var r = tape.add_row(
            tape.matmul(tape.silu(tape.add_row(tape.matmul(u, at(b + ".W1")),
                                               at(b + ".b1"))),
                        at(b + ".W2")),
            at(b + ".b2"));
        h = tape.add(h, r);
        if (i < half) {
            skip_stack.push_back(h);
        } else if (!skip_stack.empty() && i >= cfg.blocks - half) {
            h = tape.add(h, skip_stack.back());
            skip_stack.pop_back();
        }
    }
    return tape.add_row(tape.matmul(h, at("out.W")), at("out.b"));
}

ad::Var consistency_head(ad::Tape& tape, ad::Var x_t, ad::Var raw,
                         const Eigen::VectorXd& t, double eta) {
    Eigen::VectorXd cs(t.size()), co(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        auto [s, o] = skip_coeffs(t(i), eta);
        cs(i) = s;
        co(i) = o;
    }
    return tape.add(tape.row_scale(x_t, cs), tape.row_scale(raw, co));
}

Mat consistency_apply(const ModelParams& params, const BackboneConfig& cfg,
                      const Mat& x_t, const Eigen::VectorXd& t, const Mat& cond,
                      const Mat* cluster_ref, double eta) {
    ad::Tape tape;
    TapedParams tp = register_params(tape, params, false);
    ad::Var x = tape.leaf(x_t);
    ad::Var c = tape.leaf(cond);
    std::optional<ad::Var> clu;
    if (cluster_ref) clu = tape.leaf(*cluster_ref);
    ad::Var raw = backbone_forward(tape, tp, cfg, x, t, c, clu);
    ad::Var out = consistency_head(tape, x, raw, t, eta);
    return tape.value(out);
}

std::map<std::string, Mat> collect_grads(const ad::Tape& tape,
                                         const TapedParams& tp,
                                         const ModelParams& params) {
    std::map<std::string, Mat> grads;
    for (const auto& [name, var] : tp.vars) {
        const Mat& g = tape.grad(var);
        if (g.size() == 0) {
            const Mat& p = params.arrays.at(name);
            grads[name] = Mat::Zero(p.rows(), p.cols());
        } else {
            grads[name] = g;
        }
    }
    return grads;
}

}  // namespace mlct
