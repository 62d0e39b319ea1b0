#pragma once

#include <string>
#include <vector>

#include "mlct/datagen.hpp"
#include "mlct/metrics.hpp"
#include "mlct/oracle.hpp"
#include "mlct/sampler.hpp"
#include "mlct/trainer.hpp"

namespace mlct {

// End-to-end orchestration shared by the CLI and the acceptance suite.
// Every function is deterministic given (config, seed).

CodecConfig codec_config(const RunConfig& cfg);
BackboneConfig cm_backbone_config(const RunConfig& cfg);
TrainConfig cm_train_config(const RunConfig& cfg);

struct CodecArtifacts {
    ModelParams params;
    std::vector<TrainLogEntry> log;
};
CodecArtifacts run_train_codec(const RunConfig& cfg,
                               const std::vector<MotionSequence>& corpus);

// Frozen-codec latents for every corpus item (rows aligned with corpus order).
Mat corpus_latents(const RunConfig& cfg, const ModelParams& codec,
                   const std::vector<MotionSequence>& corpus);
std::vector<uint16_t> corpus_labels(const std::vector<MotionSequence>& corpus);

ClusterDictionary run_build_dict(const RunConfig& cfg, const Mat& latents,
                                 const std::vector<uint16_t>& labels);

struct ConsistencyArtifacts {
    ConsistencyModel model;
    std::vector<TrainRecord> log;
};
ConsistencyArtifacts run_train_cm(const RunConfig& cfg, const Mat& latents,
                                  const std::vector<uint16_t>& labels,
                                  const ClusterDictionary& dict);

struct BaselineArtifacts {
    ScoreBaseline model;
    std::vector<BaselineLogEntry> log;
};
BaselineArtifacts run_train_baseline(const RunConfig& cfg, const Mat& latents,
                                     const std::vector<uint16_t>& labels);

// per_class samples for each class at the given nfe; labels attached.
std::vector<MotionSequence> run_sample(const RunConfig& cfg,
                                       const ConsistencyModel& model,
                                       const ModelParams& codec, int nfe,
                                       int per_class, uint64_t seed);

// Many-step PF-ODE samples from the trained baseline, decoded.
std::vector<MotionSequence> run_sample_baseline(const RunConfig& cfg,
                                                const ScoreBaseline& model,
                                                const ModelParams& codec,
                                                int per_class, uint64_t seed);

struct EvalReport {
    double frechet = 0.0;
    double cond_accuracy = 0.0;
    double diversity_val = 0.0;
    double multimodality_val = 0.0;
    int nfe = 0;
};
EvalReport run_evaluate(const RunConfig& cfg,
                        const std::vector<MotionSequence>& samples,
                        const std::vector<MotionSequence>& reference, int nfe);
std::vector<MetricRecord> report_records(const EvalReport& r, const RunConfig& cfg);

// Checkpoint packing for the two-network consistency model (+ dictionary).
Checkpoint pack_cm_checkpoint(const RunConfig& cfg, const ConsistencyModel& model);
ConsistencyModel unpack_cm_checkpoint(const RunConfig& cfg, const Checkpoint& ckpt);

Checkpoint pack_params(const RunConfig& cfg, const ModelParams& params);
ModelParams unpack_params(const Checkpoint& ckpt);

}  // namespace mlct
