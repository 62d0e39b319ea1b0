#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "mlct/pipeline.hpp"
#include "mlct/rng.hpp"

using namespace mlct;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config_path;
    double seed = -1;  // < 0 keeps the config's seed
};

RunConfig resolve_config(const Common& c) {
    RunConfig cfg;
    if (!c.config_path.empty()) {
        if (!fs::exists(c.config_path))
            throw std::runtime_error("missing config file: expected at " + c.config_path);
        cfg = load_run_config(c.config_path);
    }
    if (c.seed >= 0) cfg.seed = c.seed;
    return cfg;
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::exists(path))
        throw std::runtime_error("missing " + what + ": expected at " + path);
}

// Every artifact carries the (config hash, seed, engine version) triple;
// corpus files get it as a sidecar since the container has no header room.
void write_sidecar(const std::string& artifact_path, const RunConfig& cfg) {
    nlohmann::ordered_json j;
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(cfg.hash()));
    j["config_hash"] = buf;
    j["seed"] = static_cast<uint64_t>(cfg.seed);
    j["engine_version"] = kEngineVersion;
    std::ofstream os(artifact_path + ".meta.json");
    os << j.dump(2) << "\n";
}

Checkpoint read_checked(const std::string& path, const std::string& what) {
    require_file(path, what);
    return read_checkpoint(path);
}

ClusterDictionary dict_from_checkpoint(const Checkpoint& ck) {
    ClusterDictionary d;
    d.keys = ck.arrays.at("dict.keys");
    d.values = ck.arrays.at("dict.values");
    return d;
}

std::vector<std::pair<double, double>> log_xy(const std::vector<TrainLogEntry>& log) {
    std::vector<std::pair<double, double>> xy;
    for (const auto& e : log) xy.push_back({double(e.step), e.loss});
    return xy;
}

int cmd_gen_data(const Common& c, const std::string& out, const std::string& svg) {
    RunConfig cfg = resolve_config(c);
    auto corpus = gen_corpus(cfg);
    write_corpus(out, corpus);
    write_sidecar(out, cfg);
    if (!svg.empty()) write_trajectory_svg(svg, corpus);
    std::printf("gen-data: wrote %zu sequences to %s\n", corpus.size(), out.c_str());
    return 0;
}

int cmd_train_codec(const Common& c, const std::string& corpus_path,
                    const std::string& out, const std::string& loss_svg) {
    RunConfig cfg = resolve_config(c);
    require_file(corpus_path, "corpus");
    auto corpus = read_corpus(corpus_path);
    CodecArtifacts art = run_train_codec(cfg, corpus);
    write_checkpoint(out, pack_params(cfg, art.params));
    write_sidecar(out, cfg);
    if (!loss_svg.empty())
        write_loss_curve_svg(loss_svg, log_xy(art.log), "codec reconstruction loss");
    std::printf("train-codec: %d steps, final loss %.6f, checkpoint %s\n",
                int(cfg.codec_steps), art.log.back().loss, out.c_str());
    return 0;
}

int cmd_build_dict(const Common& c, const std::string& corpus_path,
                   const std::string& codec_path, const std::string& out) {
    RunConfig cfg = resolve_config(c);
    require_file(corpus_path, "corpus");
    auto corpus = read_corpus(corpus_path);
    ModelParams codec = unpack_params(read_checked(codec_path, "codec checkpoint"));
    Mat latents = corpus_latents(cfg, codec, corpus);
    ClusterDictionary dict = run_build_dict(cfg, latents, corpus_labels(corpus));
    Checkpoint ck;
    ck.config_hash = cfg.hash();
    ck.seed = static_cast<uint64_t>(cfg.seed);
    ck.arrays["dict.keys"] = dict.keys;
    ck.arrays["dict.values"] = dict.values;
    write_checkpoint(out, ck);
    write_sidecar(out, cfg);
    std::printf("build-dict: k=%d entries, checkpoint %s\n", dict.k(), out.c_str());
    return 0;
}

int cmd_train_cm(const Common& c, const std::string& corpus_path,
                 const std::string& codec_path, const std::string& dict_path,
                 double omega, const std::string& out, const std::string& loss_svg) {
    RunConfig cfg = resolve_config(c);
    if (omega >= 0) cfg.cm_omega = omega;
    require_file(corpus_path, "corpus");
    auto corpus = read_corpus(corpus_path);
    ModelParams codec = unpack_params(read_checked(codec_path, "codec checkpoint"));
    ClusterDictionary dict;
    if (cfg.cm_use_clustering != 0)
        dict = dict_from_checkpoint(read_checked(dict_path, "dictionary checkpoint"));
    Mat latents = corpus_latents(cfg, codec, corpus);
    ConsistencyArtifacts art = run_train_cm(cfg, latents, corpus_labels(corpus), dict);
    write_checkpoint(out, pack_cm_checkpoint(cfg, art.model));
    write_sidecar(out, cfg);
    if (!loss_svg.empty()) {
        std::vector<std::pair<double, double>> xy;
        for (const auto& e : art.log) xy.push_back({double(e.step), e.consistency_loss});
        write_loss_curve_svg(loss_svg, xy, "consistency loss");
    }
    std::printf("train-cm: %d steps, final consistency loss %.6f, checkpoint %s\n",
                int(cfg.cm_steps), art.log.back().consistency_loss, out.c_str());
    return 0;
}

int cmd_sample(const Common& c, const std::string& codec_path,
               const std::string& cm_path, int nfe, int per_class,
               bool reuse_noise, const std::string& out, const std::string& svg) {
    RunConfig cfg = resolve_config(c);
    if (nfe > 0) cfg.sample_nfe = nfe;
    if (per_class > 0) cfg.sample_per_class = per_class;
    ModelParams codec = unpack_params(read_checked(codec_path, "codec checkpoint"));
    ConsistencyModel model =
        unpack_cm_checkpoint(cfg, read_checked(cm_path, "consistency checkpoint"));
    std::vector<MotionSequence> samples;
    if (!reuse_noise) {
        samples = run_sample(cfg, model, codec, int(cfg.sample_nfe),
                             int(cfg.sample_per_class), uint64_t(cfg.seed));
    } else {
        // literal single-noise pseudocode variant
        CodecConfig ccfg = codec_config(cfg);
        TimeGrid grid = karras_grid(cfg.grid_epsilon, cfg.grid_T, int(cfg.grid_N),
                                    cfg.grid_rho);
        uint32_t id = 0;
        for (int cls = 0; cls < int(cfg.data_classes); ++cls) {
            Mat cond = class_embedding(uint16_t(cls), int(cfg.cond_dim));
            for (int k = 0; k < int(cfg.sample_per_class); ++k) {
                SampleOptions opt;
                opt.nfe = int(cfg.sample_nfe);
                opt.frames = std::min(int(cfg.data_frames_max),
                                      std::max(int(cfg.data_frames_min),
                                               int(cfg.sample_frames)));
                opt.seed = substream_seed(uint64_t(cfg.seed),
                                          "sample-" + std::to_string(cls) + "-" +
                                              std::to_string(k));
                opt.reuse_noise = true;
                opt.clamp = cfg.codec_quantize != 0;
                SampleResult r = sample(model, cond, codec, ccfg, cfg.schedule(),
                                        grid, opt);
                samples.push_back({id++, uint16_t(cls), r.decoded});
            }
        }
    }
    write_corpus(out, samples);
    write_sidecar(out, cfg);
    if (!svg.empty()) write_trajectory_svg(svg, samples);
    std::printf("sample: %zu sequences at nfe=%d to %s\n", samples.size(),
                int(cfg.sample_nfe), out.c_str());
    return 0;
}

int cmd_evaluate(const Common& c, const std::string& samples_path,
                 const std::string& reference_path, int nfe,
                 const std::string& out) {
    RunConfig cfg = resolve_config(c);
    require_file(samples_path, "sample file");
    require_file(reference_path, "reference corpus");
    auto samples = read_corpus(samples_path);
    auto reference = read_corpus(reference_path);
    EvalReport rep = run_evaluate(cfg, samples, reference,
                                  nfe > 0 ? nfe : int(cfg.sample_nfe));
    auto recs = report_records(rep, cfg);
    for (const auto& r : recs) std::printf("%s\n", format_metric_record(r).c_str());
    if (!out.empty()) append_metric_records(out, recs);
    return 0;
}

int cmd_ablate(const Common& c, const std::string& corpus_path,
               const std::string& axis, const std::string& values_csv,
               const std::string& out) {
    RunConfig base = resolve_config(c);
    require_file(corpus_path, "corpus");
    auto corpus = read_corpus(corpus_path);

    static const std::map<std::string, std::string> axis_key = {
        {"omega", "cm.omega"},       {"level", "codec.level"},
        {"n", "codec.n"},            {"k", "cluster.k"},
        {"clustering", "cm.use_clustering"}, {"quantize", "codec.quantize"},
        {"nfe", "sample.nfe"},
    };
    auto it = axis_key.find(axis);
    if (it == axis_key.end())
        throw std::runtime_error("ablate: unknown axis '" + axis +
                                 "' (omega|level|n|k|clustering|quantize|nfe)");

    std::vector<double> values;
    std::stringstream ss(values_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) values.push_back(std::stod(tok));
    if (values.empty()) throw std::runtime_error("ablate: no values given");

    for (double v : values) {
        RunConfig cfg = base;
        apply_config_line(cfg, it->second + "=" + std::to_string(v));
        CodecArtifacts codec = run_train_codec(cfg, corpus);
        Mat latents = corpus_latents(cfg, codec.params, corpus);
        auto labels = corpus_labels(corpus);
        ClusterDictionary dict = run_build_dict(cfg, latents, labels);
        ConsistencyArtifacts cm = run_train_cm(cfg, latents, labels, dict);
        auto samples = run_sample(cfg, cm.model, codec.params, int(cfg.sample_nfe),
                                  int(cfg.sample_per_class), uint64_t(cfg.seed));
        EvalReport rep = run_evaluate(cfg, samples, corpus, int(cfg.sample_nfe));
        auto recs = report_records(rep, cfg);
        char vbuf[32];
        std::snprintf(vbuf, sizeof vbuf, "%g", v);
        for (auto& r : recs) r.metric = axis + "=" + vbuf + "/" + r.metric;
        for (const auto& r : recs) std::printf("%s\n", format_metric_record(r).c_str());
        if (!out.empty()) append_metric_records(out, recs);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"motion latent consistency training engine"};
    app.require_subcommand(1);

    Common common;
    std::string corpus_path, codec_path, dict_path, cm_path, samples_path,
        reference_path, out, svg, loss_svg, axis, values;
    double omega = -1;
    int nfe = 0, per_class = 0;
    bool reuse_noise = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "run config file (key=value)");
        sub->add_option("--seed", common.seed, "root seed (overrides config)");
    };

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
    add_common(gen);
    gen->add_option("--out", out, "output corpus (.mlct)")->required();
    gen->add_option("--svg", svg, "optional trajectory plot");

    auto* tc = app.add_subcommand("train-codec", "stage 1: train the latent codec");
    add_common(tc);
    tc->add_option("--corpus", corpus_path, "input corpus")->required();
    tc->add_option("--out", out, "output checkpoint (.mlck)")->required();
    tc->add_option("--loss-svg", loss_svg, "optional loss curve plot");

    auto* bd = app.add_subcommand("build-dict", "build the clustering dictionary");
    add_common(bd);
    bd->add_option("--corpus", corpus_path, "input corpus")->required();
    bd->add_option("--codec", codec_path, "codec checkpoint")->required();
    bd->add_option("--out", out, "output checkpoint (.mlck)")->required();

    auto* tm = app.add_subcommand("train-cm", "stage 2: train the consistency model");
    add_common(tm);
    tm->add_option("--corpus", corpus_path, "input corpus")->required();
    tm->add_option("--codec", codec_path, "codec checkpoint")->required();
    tm->add_option("--dict", dict_path, "dictionary checkpoint");
    tm->add_option("--omega", omega, "guidance scale (overrides config)");
    tm->add_option("--out", out, "output checkpoint (.mlck)")->required();
    tm->add_option("--loss-svg", loss_svg, "optional loss curve plot");

    auto* sa = app.add_subcommand("sample", "few-step sampling");
    add_common(sa);
    sa->add_option("--codec", codec_path, "codec checkpoint")->required();
    sa->add_option("--cm", cm_path, "consistency checkpoint")->required();
    sa->add_option("--nfe", nfe, "function evaluations (overrides config)");
    sa->add_option("--per-class", per_class, "samples per class (overrides config)");
    sa->add_flag("--reuse-noise", reuse_noise, "single noise vector for all re-noises");
    sa->add_option("--out", out, "output sample file (.mlct)")->required();
    sa->add_option("--svg", svg, "optional trajectory plot");

    auto* ev = app.add_subcommand("evaluate", "metrics against a reference corpus");
    add_common(ev);
    ev->add_option("--samples", samples_path, "sample file")->required();
    ev->add_option("--reference", reference_path, "reference corpus")->required();
    ev->add_option("--nfe", nfe, "nfe tag for the records");
    ev->add_option("--out", out, "metric record file (JSON lines, appended)");

    auto* ab = app.add_subcommand("ablate", "sweep one axis end to end");
    add_common(ab);
    ab->add_option("--corpus", corpus_path, "input corpus")->required();
    ab->add_option("--axis", axis, "omega|level|n|k|clustering|quantize|nfe")->required();
    ab->add_option("--values", values, "comma-separated values")->required();
    ab->add_option("--out", out, "metric record file (JSON lines, appended)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(common, out, svg);
        if (tc->parsed()) return cmd_train_codec(common, corpus_path, out, loss_svg);
        if (bd->parsed()) return cmd_build_dict(common, corpus_path, codec_path, out);
        if (tm->parsed())
            return cmd_train_cm(common, corpus_path, codec_path, dict_path, omega,
                                out, loss_svg);
        if (sa->parsed())
            return cmd_sample(common, codec_path, cm_path, nfe, per_class,
                              reuse_noise, out, svg);
        if (ev->parsed())
            return cmd_evaluate(common, samples_path, reference_path, nfe, out);
        if (ab->parsed()) return cmd_ablate(common, corpus_path, axis, values, out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
