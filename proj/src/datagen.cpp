#include "mlct/datagen.hpp"

#include <cmath>
#include <stdexcept>

#include "mlct/rng.hpp"

namespace mlct {

namespace {

constexpr uint64_t kEmbeddingRoot = 0x4d4c4354;  // embeddings shared across stages

struct ClassParams {
    std::vector<double> amp, freq, phase, offset;
};

ClassParams class_params(uint16_t label, int channels, uint64_t seed) {
    auto rng = make_rng(substream_seed(seed, "class-params"),
                        "class-" + std::to_string(label));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    ClassParams p;
    for (int j = 0; j < channels; ++j) {
        p.amp.push_back(0.3 + 0.7 * u01(rng));
        p.freq.push_back(1.0 + 3.0 * u01(rng));
        p.phase.push_back(2.0 * M_PI * u01(rng));
        p.offset.push_back(-0.3 + 0.6 * u01(rng));
    }
    return p;
}

}  // namespace

std::vector<MotionSequence> gen_corpus(const RunConfig& cfg) {
    int classes = static_cast<int>(cfg.data_classes);
    int per_class = static_cast<int>(cfg.data_items_per_class);
    int channels = static_cast<int>(cfg.data_channels);
    int f_min = static_cast<int>(cfg.data_frames_min);
    int f_max = static_cast<int>(cfg.data_frames_max);
    if (classes < 1 || per_class < 1 || channels < 1 || f_min < 2 || f_max < f_min)
        throw std::invalid_argument("gen_corpus: invalid parameters");
    uint64_t seed = static_cast<uint64_t>(cfg.seed);
    auto rng = make_rng(seed, "data");
    std::uniform_int_distribution<int> frames_dist(f_min, f_max);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.02);

    std::vector<MotionSequence> items;
    items.reserve(static_cast<size_t>(classes) * per_class);
    uint32_t id = 0;
    for (int c = 0; c < classes; ++c) {
        ClassParams p = class_params(static_cast<uint16_t>(c), channels, seed);
        for (int k = 0; k < per_class; ++k) {
            MotionSequence item;
            item.id = id++;
            item.label = static_cast<uint16_t>(c);
            int F = frames_dist(rng);
            item.data.resize(F, channels);
            for (int j = 0; j < channels; ++j) {
                double amp = p.amp[j] * (1.0 + 0.05 * jitter(rng));
                double phase = p.phase[j] + 0.2 * jitter(rng);
                for (int i = 0; i < F; ++i) {
                    double u = static_cast<double>(i) / (F - 1);
                    item.data(i, j) = p.offset[j] +
                                      amp * std::sin(2.0 * M_PI * p.freq[j] * u + phase) +
                                      noise(rng);
                }
            }
            items.push_back(std::move(item));
        }
    }
    return items;
}

Eigen::RowVectorXd class_embedding(uint16_t label, int dim) {
    auto rng = make_rng(kEmbeddingRoot, "cond-" + std::to_string(label));
    std::normal_distribution<double> dist;
    Eigen::RowVectorXd e(dim);
    for (int j = 0; j < dim; ++j) e(j) = dist(rng);
    return e / e.norm();
}

Mat embedding_rows(const std::vector<uint16_t>& labels, int dim) {
    Mat rows(labels.size(), dim);
    for (size_t i = 0; i < labels.size(); ++i)
        rows.row(i) = class_embedding(labels[i], dim);
    return rows;
}

}  // namespace mlct
