#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mlct/net.hpp"
#include "test_util.hpp"

using namespace mlct;
using namespace mlct::testutil;

namespace {

BackboneConfig small_cfg() {
    BackboneConfig c;
    c.in_dim = 6;
    c.width = 10;
    c.blocks = 4;
    c.time_dim = 8;
    c.cond_dim = 5;
    c.cluster_dim = 0;
    return c;
}

void randomize(ModelParams& p, uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& [name, a] : p.arrays) a = random_mat(int(a.rows()), int(a.cols()), rng, 0.3);
}

}  // namespace

TEST_CASE("init and forward are deterministic") {
    BackboneConfig cfg = small_cfg();
    ModelParams a = init_backbone(cfg, 42);
    ModelParams b = init_backbone(cfg, 42);
    CHECK(a.same_shapes(b));
    for (const auto& [name, m] : a.arrays) CHECK((m - b.arrays.at(name)).norm() == 0.0);
    ModelParams c = init_backbone(cfg, 43);
    double diff = 0.0;
    for (const auto& [name, m] : c.arrays) diff += (m - a.arrays.at(name)).norm();
    CHECK(diff > 0.0);

    std::mt19937_64 rng(1);
    Mat x = random_mat(3, cfg.in_dim, rng);
    Mat cond = random_mat(3, cfg.cond_dim, rng);
    Eigen::VectorXd t(3);
    t << 0.1, 0.5, 0.9;
    Mat y1 = consistency_apply(a, cfg, x, t, cond);
    Mat y2 = consistency_apply(a, cfg, x, t, cond);
    CHECK((y1 - y2).norm() == 0.0);
}

TEST_CASE("zero-initialized head makes the model the pure skip path") {
    BackboneConfig cfg = small_cfg();
    ModelParams p = init_backbone(cfg, 7);
    std::mt19937_64 rng(2);
    Mat x = random_mat(2, cfg.in_dim, rng);
    Mat cond = random_mat(2, cfg.cond_dim, rng);
    Eigen::VectorXd t(2);
    t << 0.3, 0.8;
    Mat y = consistency_apply(p, cfg, x, t, cond);
    for (int i = 0; i < 2; ++i) {
        auto [cs, co] = skip_coeffs(t(i));
        CHECK((y.row(i) - cs * x.row(i)).norm() < 1e-15);
    }
}

TEST_CASE("boundary condition at t=0 is the exact identity") {
    BackboneConfig cfg = small_cfg();
    ModelParams p = init_backbone(cfg, 7);
    randomize(p, 11);
    std::mt19937_64 rng(3);
    Mat x = random_mat(4, cfg.in_dim, rng);
    Mat cond = random_mat(4, cfg.cond_dim, rng);
    Eigen::VectorXd t = Eigen::VectorXd::Zero(4);
    Mat y = consistency_apply(p, cfg, x, t, cond);
    CHECK((y - x).norm() == 0.0);
}

TEST_CASE("backbone gradients match finite differences") {
    BackboneConfig cfg = small_cfg();
    cfg.cluster_dim = 3;
    ModelParams p = init_backbone(cfg, 9);
    randomize(p, 13);
    std::mt19937_64 rng(4);
    Mat x = random_mat(3, cfg.in_dim, rng);
    Mat cond = random_mat(3, cfg.cond_dim, rng);
    Mat clu = random_mat(3, cfg.cluster_dim, rng);
    Mat target = random_mat(3, cfg.in_dim, rng, 0.5);
    Eigen::VectorXd t(3);
    t << 0.2, 0.5, 0.95;

    auto eval = [&]() {
        ad::Tape tape;
        TapedParams tp = register_params(tape, p, true);
        ad::Var vx = tape.leaf(x), vc = tape.leaf(cond), vclu = tape.leaf(clu);
        ad::Var raw = backbone_forward(tape, tp, cfg, vx, t, vc, vclu);
        ad::Var s = consistency_head(tape, vx, raw, t);
        ad::Var l = tape.pseudo_huber_rows(s, tape.leaf(target), 0.05,
                                           ad::Vec::Ones(3));
        return tape.value(l)(0, 0);
    };

    ad::Tape tape;
    TapedParams tp = register_params(tape, p, true);
    ad::Var vx = tape.leaf(x), vc = tape.leaf(cond), vclu = tape.leaf(clu);
    ad::Var raw = backbone_forward(tape, tp, cfg, vx, t, vc, vclu);
    ad::Var s = consistency_head(tape, vx, raw, t);
    ad::Var l = tape.pseudo_huber_rows(s, tape.leaf(target), 0.05, ad::Vec::Ones(3));
    tape.backward(l);
    auto grads = collect_grads(tape, tp, p);

    std::mt19937_64 pick(5);
    std::vector<std::string> names;
    for (const auto& [name, a] : p.arrays) names.push_back(name);
    int checked = 0;
    while (checked < 120) {
        std::uniform_int_distribution<size_t> pn(0, names.size() - 1);
        const std::string& name = names[pn(pick)];
        Mat& a = p.arrays.at(name);
        std::uniform_int_distribution<int> pr(0, int(a.rows()) - 1);
        std::uniform_int_distribution<int> pc(0, int(a.cols()) - 1);
        int i = pr(pick), j = pc(pick);
        double fd = fd_entry(eval, a(i, j));
        double an = grads.at(name)(i, j);
        if (std::abs(fd) < 1e-7 && std::abs(an) < 1e-7) {
            ++checked;
            continue;  // both effectively zero (dead silu region etc.)
        }
        CHECK(rel_err(fd, an) < 1e-4);
        ++checked;
    }
}

namespace {

// Independent scalar AdamW reference maintained alongside a vector update.
struct RefAdam {
    double m = 0.0, v = 0.0;
    long step = 0;
    double update(double w, double g, const AdamWConfig& c) {
        ++step;
        m = c.beta1 * m + (1 - c.beta1) * g;
        v = c.beta2 * v + (1 - c.beta2) * g * g;
        double mhat = m / (1 - std::pow(c.beta1, double(step)));
        double vhat = v / (1 - std::pow(c.beta2, double(step)));
        w -= c.lr * c.weight_decay * w;
        w -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
        return w;
    }
};

}  // namespace

TEST_CASE("adamw matches a scalar reference and converges on a quadratic") {
    AdamWConfig cfg;
    cfg.lr = 0.05;
    cfg.weight_decay = 0.01;
    ModelParams p;
    p.arrays["w"] = Mat::Constant(1, 1, 2.0);
    AdamWState st;
    RefAdam ref;
    double wref = 2.0;
    const double a = -1.3;  // minimize 0.5 (w - a)^2
    for (int k = 0; k < 1000; ++k) {
        double g = p.arrays["w"](0, 0) - a;
        double gref = wref - a;
        adamw_step(p, {{"w", Mat::Constant(1, 1, g)}}, st, cfg);
        wref = ref.update(wref, gref, cfg);
        CHECK(std::abs(p.arrays["w"](0, 0) - wref) < 1e-12);
    }
    // decay pulls the fixed point slightly toward zero, so use a loose band
    CHECK(std::abs(p.arrays["w"](0, 0) - a) < 5e-2);

    // no weight decay: exact convergence to the minimizer
    AdamWConfig plain;
    plain.lr = 0.05;
    ModelParams q;
    q.arrays["w"] = Mat::Constant(1, 1, 2.0);
    AdamWState st2;
    for (int k = 0; k < 3000; ++k) {
        double g = q.arrays["w"](0, 0) - a;
        adamw_step(q, {{"w", Mat::Constant(1, 1, g)}}, st2, plain);
    }
    CHECK(std::abs(q.arrays["w"](0, 0) - a) < 1e-3);
}

TEST_CASE("adamw rejects bad inputs") {
    ModelParams p;
    p.arrays["w"] = Mat::Ones(2, 2);
    AdamWState st;
    AdamWConfig cfg;
    Mat bad = Mat::Ones(2, 2);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(adamw_step(p, {{"w", bad}}, st, cfg), std::runtime_error);
    CHECK_THROWS_AS(adamw_step(p, {{"v", Mat::Ones(2, 2)}}, st, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(adamw_step(p, {{"w", Mat::Ones(1, 2)}}, st, cfg),
                    std::invalid_argument);
}

TEST_CASE("ema update") {
    ModelParams online, target;
    online.arrays["w"] = Mat::Constant(2, 2, 1.0);
    target.arrays["w"] = Mat::Constant(2, 2, 3.0);

    ModelParams t0 = target;
    ema_update(t0, online, 0.0);
    CHECK((t0.arrays["w"] - online.arrays["w"]).norm() == 0.0);

    ModelParams t1 = target;
    ema_update(t1, online, 1.0);
    CHECK((t1.arrays["w"] - target.arrays["w"]).norm() == 0.0);

    // distance to online contracts by exactly gamma^k
    ModelParams tk = target;
    for (int k = 1; k <= 50; ++k) {
        ema_update(tk, online, 0.995);
        double expect = 2.0 * std::pow(0.995, k);
        CHECK(std::abs(tk.arrays["w"](0, 0) - 1.0 - expect) < 1e-12);
    }
    CHECK_THROWS_AS(ema_update(target, online, 1.5), std::invalid_argument);
}

TEST_CASE("time embedding shape and range") {
    Eigen::VectorXd t(3);
    t << 0.0, 0.5, 1.0;
    Mat e = time_embedding(t, 8);
    CHECK(e.rows() == 3);
    CHECK(e.cols() == 8);
    CHECK(e.cwiseAbs().maxCoeff() <= 1.0);
    // t=0 row: sines zero, cosines one
    for (int k = 0; k < 4; ++k) {
        CHECK(e(0, k) == 0.0);
        CHECK(e(0, 4 + k) == 1.0);
    }
}
