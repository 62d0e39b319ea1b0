#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mlct/codec.hpp"

namespace mlct {

// Per-sequence summary features: per-channel mean, std, mean |velocity|.
Eigen::VectorXd sequence_features(const Mat& data);
Mat feature_matrix(const std::vector<MotionSequence>& items);

struct FrechetResult {
    double distance = 0.0;
    bool ridged = false;  // degenerate covariance flagged
};

// ||mu_A - mu_B||^2 + tr(Sig_A + Sig_B - 2 (Sig_A Sig_B)^{1/2}) on feature rows.
FrechetResult frechet_gaussian_distance(const Mat& feats_a, const Mat& feats_b);

// Analytic value for two Gaussians, used as test oracle.
double frechet_analytic(const Eigen::VectorXd& mu_a, const Mat& cov_a,
                        const Eigen::VectorXd& mu_b, const Mat& cov_b);

// Nearest-centroid condition match on features. centroids: label -> feature.
std::map<uint16_t, Eigen::VectorXd> class_centroids(const Mat& feats,
                                                    const std::vector<uint16_t>& labels);
double condition_accuracy(const Mat& feats, const std::vector<uint16_t>& labels,
                          const std::map<uint16_t, Eigen::VectorXd>& centroids);

// Mean pairwise feature distance over seeded random pairs.
double diversity(const Mat& feats, int pairs = 10000, uint64_t seed = 0);
// Same statistic within each condition, averaged over conditions.
double multimodality(const Mat& feats, const std::vector<uint16_t>& labels,
                     int pairs_per_cond = 1000, uint64_t seed = 0);

}  // namespace mlct
