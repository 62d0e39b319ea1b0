#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mlct/codec.hpp"
#include "mlct/net.hpp"

namespace mlct {

inline constexpr const char* kEngineVersion = "0.1.0";
inline constexpr uint16_t kFormatVersion = 1;

// ---- run configuration (plain key=value file) ----

// Every knob of the pipeline with a documented default. Unknown keys in a
// config file are rejected.
struct RunConfig {
    // schedule
    double schedule_beta0 = 0.1;
    double schedule_beta1 = 20.0;
    // paper-stated alternative betas; enable with schedule.paper_betas=1
    double schedule_paper_betas = 0;
    // time grid
    double grid_epsilon = 0.002;
    double grid_T = 1.0;
    double grid_N = 50;
    double grid_rho = 7.0;
    // synthetic corpus
    double data_classes = 2;
    double data_items_per_class = 200;
    double data_frames_min = 16;
    double data_frames_max = 48;
    double data_channels = 3;
    double cond_dim = 32;
    // codec
    double codec_n = 4;
    double codec_d = 16;
    double codec_level = 256;
    double codec_width = 96;
    double codec_lambda_j = 1e-3;
    double codec_quantize = 1;
    double codec_steps = 1500;
    double codec_batch = 16;
    double codec_lr = 1e-3;
    // clustering
    double cluster_k = 0;  // 0 -> min(32, 4 * classes)
    double cluster_da = 64;
    // consistency model
    double cm_omega = 4.0;
    double cm_gamma = 0.995;
    double cm_lr = 1e-4;
    double cm_lr_final = 0.01;  // cosine-decay floor as a fraction of cm.lr
    double cm_steps = 3000;
    double cm_batch = 32;
    double cm_huber_c = 0;  // 0 -> 0.00054 * sqrt(n*d)
    double cm_width = 96;
    double cm_blocks = 4;
    double cm_time_dim = 64;
    double cm_use_clustering = 1;
    // oracle baseline
    double baseline_steps = 2500;
    double baseline_batch = 32;
    double baseline_lr = 1e-3;
    double baseline_ode_steps = 200;
    // sampling / evaluation
    double sample_nfe = 4;
    double sample_frames = 32;
    double sample_per_class = 100;
    double seed = 0;

    NoiseSchedule schedule() const;
    int effective_cluster_k() const;
    std::string canonical() const;     // sorted key=value lines
    uint64_t hash() const;             // FNV-1a of canonical()
};

// Key table shared by parser/printer; keys use dotted names (schedule.beta0).
std::map<std::string, double RunConfig::*> run_config_keys();

RunConfig load_run_config(const std::string& path);        // throws on unknown key
void apply_config_line(RunConfig& cfg, const std::string& line);
void save_run_config(const RunConfig& cfg, const std::string& path);

// ---- corpus container ("MLCT") ----

void write_corpus(const std::string& path, const std::vector<MotionSequence>& items);
std::vector<MotionSequence> read_corpus(const std::string& path);

// ---- checkpoint container ("MLCK") ----

// Header: magic, format version u16, config hash u64, seed u64; then a
// manifest of (name, dtype=f32, shape) entries followed by raw f32 arrays.
struct Checkpoint {
    uint64_t config_hash = 0;
    uint64_t seed = 0;
    std::map<std::string, Mat> arrays;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

// ---- metric records (one JSON object per line) ----

struct MetricRecord {
    std::string metric;
    double value = 0.0;
    int nfe = 0;
    uint64_t seed = 0;
    uint64_t config_hash = 0;
};

std::string format_metric_record(const MetricRecord& rec);
void append_metric_records(const std::string& path,
                           const std::vector<MetricRecord>& recs);
std::vector<MetricRecord> read_metric_records(const std::string& path);

// ---- plots ----

void write_trajectory_svg(const std::string& path,
                          const std::vector<MotionSequence>& items,
                          int max_items = 8);
void write_loss_curve_svg(const std::string& path,
                          const std::vector<std::pair<double, double>>& xy,
                          const std::string& title);

}  // namespace mlct
