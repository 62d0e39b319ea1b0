#pragma once

#include <cstdint>
#include <vector>

#include "mlct/codec.hpp"
#include "mlct/io.hpp"

namespace mlct {

// Synthetic conditioned corpus: each class is a parametric family of
// sinusoidal velocity channels (class-specific frequency, amplitude, offset,
// phase) with small per-item jitter and seeded noise.
std::vector<MotionSequence> gen_corpus(const RunConfig& cfg);

// Frozen text-encoder stand-in: a fixed seeded unit vector per class,
// independent of the run seed so every stage agrees on it.
Eigen::RowVectorXd class_embedding(uint16_t label, int dim);
// One row per item label.
Mat embedding_rows(const std::vector<uint16_t>& labels, int dim);

}  // namespace mlct
