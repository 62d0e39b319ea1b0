#include "mlct/pipeline.hpp"

#include <stdexcept>

#include "mlct/rng.hpp"

namespace mlct {

CodecConfig codec_config(const RunConfig& cfg) {
    CodecConfig c;
    c.n = static_cast<int>(cfg.codec_n);
    c.d = static_cast<int>(cfg.codec_d);
    c.level = static_cast<int>(cfg.codec_level);
    c.channels = static_cast<int>(cfg.data_channels);
    c.width = static_cast<int>(cfg.codec_width);
    c.f_min = static_cast<int>(cfg.data_frames_min);
    c.f_max = static_cast<int>(cfg.data_frames_max);
    c.lambda_j = cfg.codec_lambda_j;
    c.quantize = cfg.codec_quantize != 0;
    return c;
}

BackboneConfig cm_backbone_config(const RunConfig& cfg) {
    BackboneConfig b;
    b.in_dim = static_cast<int>(cfg.codec_n) * static_cast<int>(cfg.codec_d);
    b.width = static_cast<int>(cfg.cm_width);
    b.blocks = static_cast<int>(cfg.cm_blocks);
    b.time_dim = static_cast<int>(cfg.cm_time_dim);
    b.cond_dim = static_cast<int>(cfg.cond_dim);
    b.cluster_dim = cfg.cm_use_clustering != 0 ? b.in_dim : 0;
    return b;
}

TrainConfig cm_train_config(const RunConfig& cfg) {
    TrainConfig t;
    t.omega = cfg.cm_omega;
    t.gamma = cfg.cm_gamma;
    t.grid = karras_grid(cfg.grid_epsilon, cfg.grid_T,
                         static_cast<int>(cfg.grid_N), cfg.grid_rho);
    t.lr = cfg.cm_lr;
    t.lr_final = cfg.cm_lr_final;
    t.steps = static_cast<int>(cfg.cm_steps);
    t.batch = static_cast<int>(cfg.cm_batch);
    t.huber_c = cfg.cm_huber_c;
    t.seed = static_cast<uint64_t>(cfg.seed);
    t.use_clustering = cfg.cm_use_clustering != 0;
    t.clamp_targets = cfg.codec_quantize != 0;  // unconstrained latents are unbounded
    return t;
}

CodecArtifacts run_train_codec(const RunConfig& cfg,
                               const std::vector<MotionSequence>& corpus) {
    CodecConfig ccfg = codec_config(cfg);
    CodecArtifacts art;
    art.params = init_codec(ccfg, substream_seed(static_cast<uint64_t>(cfg.seed), "init"));
    CodecTrainConfig tcfg;
    tcfg.steps = static_cast<int>(cfg.codec_steps);
    tcfg.batch = static_cast<int>(cfg.codec_batch);
    tcfg.lr = cfg.codec_lr;
    tcfg.seed = static_cast<uint64_t>(cfg.seed);
    art.log = train_codec(art.params, corpus, ccfg, tcfg);
    return art;
}

Mat corpus_latents(const RunConfig& cfg, const ModelParams& codec,
                   const std::vector<MotionSequence>& corpus) {
    CodecConfig ccfg = codec_config(cfg);
    Mat latents(corpus.size(), ccfg.latent_dim());
    for (size_t i = 0; i < corpus.size(); ++i)
        latents.row(i) = encode_latent(codec, ccfg, corpus[i].data);
    return latents;
}

std::vector<uint16_t> corpus_labels(const std::vector<MotionSequence>& corpus) {
    std::vector<uint16_t> labels(corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) labels[i] = corpus[i].label;
    return labels;
}

ClusterDictionary run_build_dict(const RunConfig& cfg, const Mat& latents,
                                 const std::vector<uint16_t>& labels) {
    Mat embeds = embedding_rows(labels, static_cast<int>(cfg.cond_dim));
    return build_dictionary(embeds, latents, cfg.effective_cluster_k(),
                            static_cast<uint64_t>(cfg.seed));
}

ConsistencyArtifacts run_train_cm(const RunConfig& cfg, const Mat& latents,
                                  const std::vector<uint16_t>& labels,
                                  const ClusterDictionary& dict) {
    ConsistencyArtifacts art;
    art.model.backbone = cm_backbone_config(cfg);
    uint64_t seed = static_cast<uint64_t>(cfg.seed);
    art.model.online = init_backbone(art.model.backbone,
                                     substream_seed(seed, "cm-init"));
    if (cfg.cm_use_clustering != 0) {
        add_query_affine_params(art.model.online, static_cast<int>(cfg.cond_dim),
                                static_cast<int>(cfg.cluster_da),
                                substream_seed(seed, "cm-init"));
        art.model.dict = dict;
        art.model.has_dict = true;
    }
    art.model.target = art.model.online;
    Mat cond = embedding_rows(labels, static_cast<int>(cfg.cond_dim));
    art.log = train_consistency(art.model, latents, cond, cfg.schedule(),
                                cm_train_config(cfg));
    return art;
}

BaselineArtifacts run_train_baseline(const RunConfig& cfg, const Mat& latents,
                                     const std::vector<uint16_t>& labels) {
    BaselineArtifacts art;
    art.model.backbone = cm_backbone_config(cfg);
    art.model.backbone.cluster_dim = 0;
    uint64_t seed = static_cast<uint64_t>(cfg.seed);
    art.model.params = init_backbone(art.model.backbone,
                                     substream_seed(seed, "baseline-init"));
    BaselineTrainConfig bcfg;
    bcfg.steps = static_cast<int>(cfg.baseline_steps);
    bcfg.batch = static_cast<int>(cfg.baseline_batch);
    bcfg.lr = cfg.baseline_lr;
    bcfg.seed = seed;
    Mat cond = embedding_rows(labels, static_cast<int>(cfg.cond_dim));
    TimeGrid grid = karras_grid(cfg.grid_epsilon, cfg.grid_T,
                                static_cast<int>(cfg.grid_N), cfg.grid_rho);
    art.log = train_score_baseline(art.model, latents, cond, grid, cfg.schedule(),
                                   bcfg);
    return art;
}

namespace {

int sample_frames(const RunConfig& cfg) {
    int f = static_cast<int>(cfg.sample_frames);
    f = std::max(f, static_cast<int>(cfg.data_frames_min));
    return std::min(f, static_cast<int>(cfg.data_frames_max));
}

}  // namespace

std::vector<MotionSequence> run_sample(const RunConfig& cfg,
                                       const ConsistencyModel& model,
                                       const ModelParams& codec, int nfe,
                                       int per_class, uint64_t seed) {
    CodecConfig ccfg = codec_config(cfg);
    TimeGrid grid = karras_grid(cfg.grid_epsilon, cfg.grid_T,
                                static_cast<int>(cfg.grid_N), cfg.grid_rho);
    NoiseSchedule sched = cfg.schedule();
    std::vector<MotionSequence> out;
    uint32_t id = 0;
    for (int c = 0; c < static_cast<int>(cfg.data_classes); ++c) {
        Mat cond = class_embedding(static_cast<uint16_t>(c),
                                   static_cast<int>(cfg.cond_dim));
        for (int k = 0; k < per_class; ++k) {
            SampleOptions opt;
            opt.nfe = nfe;
            opt.frames = sample_frames(cfg);
            opt.seed = substream_seed(seed, "sample-" + std::to_string(c) + "-" +
                                                std::to_string(k));
            opt.clamp = cfg.codec_quantize != 0;
            SampleResult r = sample(model, cond, codec, ccfg, sched, grid, opt);
            MotionSequence item;
            item.id = id++;
            item.label = static_cast<uint16_t>(c);
            item.data = r.decoded;
            out.push_back(std::move(item));
        }
    }
    return out;
}

std::vector<MotionSequence> run_sample_baseline(const RunConfig& cfg,
                                                const ScoreBaseline& model,
                                                const ModelParams& codec,
                                                int per_class, uint64_t seed) {
    CodecConfig ccfg = codec_config(cfg);
    NoiseSchedule sched = cfg.schedule();
    std::vector<MotionSequence> out;
    uint32_t id = 0;
    int ode_steps = static_cast<int>(cfg.baseline_ode_steps);
    for (int c = 0; c < static_cast<int>(cfg.data_classes); ++c) {
        Mat cond = class_embedding(static_cast<uint16_t>(c),
                                   static_cast<int>(cfg.cond_dim));
        Denoiser den = [&](const Mat& x_t, double t) {
            return baseline_predict(model, x_t, t, cond);
        };
        for (int k = 0; k < per_class; ++k) {
            auto rng = make_rng(substream_seed(seed, "baseline-sample-" +
                                                        std::to_string(c) + "-" +
                                                        std::to_string(k)),
                                "ode");
            Mat latent = pf_ode_euler_sample(den, sched, ode_steps,
                                             model.backbone.in_dim,
                                             cfg.grid_epsilon, cfg.grid_T, rng);
            if (cfg.codec_quantize != 0)
                latent = latent.cwiseMax(-1.0).cwiseMin(1.0);
            MotionSequence item;
            item.id = id++;
            item.label = static_cast<uint16_t>(c);
            item.data = decode(codec, ccfg, latent, sample_frames(cfg));
            out.push_back(std::move(item));
        }
    }
    return out;
}

EvalReport run_evaluate(const RunConfig& cfg,
                        const std::vector<MotionSequence>& samples,
                        const std::vector<MotionSequence>& reference, int nfe) {
    EvalReport r;
    r.nfe = nfe;
    Mat fs = feature_matrix(samples);
    Mat fr = feature_matrix(reference);
    r.frechet = frechet_gaussian_distance(fs, fr).distance;
    auto centroids = class_centroids(fr, corpus_labels(reference));
    r.cond_accuracy = condition_accuracy(fs, corpus_labels(samples), centroids);
    r.diversity_val = diversity(fs, 10000, static_cast<uint64_t>(cfg.seed));
    r.multimodality_val = multimodality(fs, corpus_labels(samples), 1000,
                                        static_cast<uint64_t>(cfg.seed));
    return r;
}

std::vector<MetricRecord> report_records(const EvalReport& r, const RunConfig& cfg) {
    uint64_t h = cfg.hash();
    uint64_t s = static_cast<uint64_t>(cfg.seed);
    return {
        {"frechet", r.frechet, r.nfe, s, h},
        {"condition_accuracy", r.cond_accuracy, r.nfe, s, h},
        {"diversity", r.diversity_val, r.nfe, s, h},
        {"multimodality", r.multimodality_val, r.nfe, s, h},
    };
}

Checkpoint pack_cm_checkpoint(const RunConfig& cfg, const ConsistencyModel& model) {
    Checkpoint ckpt;
    ckpt.config_hash = cfg.hash();
    ckpt.seed = static_cast<uint64_t>(cfg.seed);
    for (const auto& [name, a] : model.online.arrays) ckpt.arrays[name] = a;
    for (const auto& [name, a] : model.target.arrays)
        ckpt.arrays["target." + name] = a;
    if (model.has_dict) {
        ckpt.arrays["dict.keys"] = model.dict.keys;
        ckpt.arrays["dict.values"] = model.dict.values;
    }
    return ckpt;
}

ConsistencyModel unpack_cm_checkpoint(const RunConfig& cfg, const Checkpoint& ckpt) {
    ConsistencyModel model;
    model.backbone = cm_backbone_config(cfg);
    for (const auto& [name, a] : ckpt.arrays) {
        if (name == "dict.keys") {
            model.dict.keys = a;
            model.has_dict = true;
        } else if (name == "dict.values") {
            model.dict.values = a;
            model.has_dict = true;
        } else if (name.rfind("target.", 0) == 0) {
            model.target.arrays[name.substr(7)] = a;
        } else {
            model.online.arrays[name] = a;
        }
    }
    model.online.seed = ckpt.seed;
    model.target.seed = ckpt.seed;
    return model;
}

Checkpoint pack_params(const RunConfig& cfg, const ModelParams& params) {
    Checkpoint ckpt;
    ckpt.config_hash = cfg.hash();
    ckpt.seed = static_cast<uint64_t>(cfg.seed);
    ckpt.arrays = params.arrays;
    return ckpt;
}

ModelParams unpack_params(const Checkpoint& ckpt) {
    ModelParams p;
    p.arrays = ckpt.arrays;
    p.seed = ckpt.seed;
    return p;
}

}  // namespace mlct
