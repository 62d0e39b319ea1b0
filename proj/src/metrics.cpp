#include "mlct/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "mlct/rng.hpp"

namespace mlct {

Eigen::VectorXd sequence_features(const Mat& data) {
    int J = static_cast<int>(data.cols());
    Eigen::VectorXd f(3 * J);
    for (int j = 0; j < J; ++j) {
        double mean = data.col(j).mean();
        double var = (data.col(j).array() - mean).square().mean();
        f(j) = mean;
        f(J + j) = std::sqrt(var);
        f(2 * J + j) = data.col(j).array().abs().mean();
    }
    return f;
}

Mat feature_matrix(const std::vector<MotionSequence>& items) {
    if (items.empty()) throw std::invalid_argument("feature_matrix: empty set");
    int dim = 3 * items.front().channels();
    Mat feats(items.size(), dim);
    for (size_t i = 0; i < items.size(); ++i)
        feats.row(i) = sequence_features(items[i].data).transpose();
    return feats;
}

namespace {

Mat sqrtm_psd(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Mat covariance(const Mat& x) {
    Eigen::RowVectorXd mu = x.colwise().mean();
    Mat c = x.rowwise() - mu;
    return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

}  // namespace

FrechetResult frechet_gaussian_distance(const Mat& a, const Mat& b) {
    int dim = static_cast<int>(a.cols());
    if (b.cols() != dim)
        throw std::invalid_argument("frechet: feature dimension mismatch");
    if (a.rows() < dim + 1 || b.rows() < dim + 1)
        throw std::invalid_argument("frechet: each set needs >= dim+1 items");
    Eigen::VectorXd mu_a = a.colwise().mean();
    Eigen::VectorXd mu_b = b.colwise().mean();
    Mat ca = covariance(a);
    Mat cb = covariance(b);
    FrechetResult res;
    double min_eig = std::min(
        Eigen::SelfAdjointEigenSolver<Mat>(ca).eigenvalues().minCoeff(),
        Eigen::SelfAdjointEigenSolver<Mat>(cb).eigenvalues().minCoeff());
    if (min_eig < 1e-10) {
        ca += 1e-6 * Mat::Identity(dim, dim);
        cb += 1e-6 * Mat::Identity(dim, dim);
        res.ridged = true;
    }
    res.distance = frechet_analytic(mu_a, ca, mu_b, cb);
    return res;
}

double frechet_analytic(const Eigen::VectorXd& mu_a, const Mat& cov_a,
                        const Eigen::VectorXd& mu_b, const Mat& cov_b) {
    Mat sa = sqrtm_psd(cov_a);
    Mat inner = sa * cov_b * sa;
    Eigen::SelfAdjointEigenSolver<Mat> es(inner);
    double tr_geo = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() -
           2.0 * tr_geo;
}

std::map<uint16_t, Eigen::VectorXd> class_centroids(
    const Mat& feats, const std::vector<uint16_t>& labels) {
    if (static_cast<size_t>(feats.rows()) != labels.size())
        throw std::invalid_argument("class_centroids: misaligned inputs");
    std::map<uint16_t, Eigen::VectorXd> sums;
    std::map<uint16_t, int> counts;
    for (Eigen::Index i = 0; i < feats.rows(); ++i) {
        auto [it, fresh] = sums.try_emplace(labels[i],
                                            Eigen::VectorXd::Zero(feats.cols()));
        it->second += feats.row(i).transpose();
        counts[labels[i]]++;
    }
    for (auto& [label, s] : sums) s /= counts[label];
    return sums;
}

double condition_accuracy(const Mat& feats, const std::vector<uint16_t>& labels,
                          const std::map<uint16_t, Eigen::VectorXd>& centroids) {
    if (static_cast<size_t>(feats.rows()) != labels.size())
        throw std::invalid_argument("condition_accuracy: misaligned inputs");
    int hits = 0;
    for (Eigen::Index i = 0; i < feats.rows(); ++i) {
        if (!centroids.count(labels[i]))
            throw std::invalid_argument("condition_accuracy: unseen label " +
                                        std::to_string(labels[i]));
        uint16_t best = 0;
        double bd = std::numeric_limits<double>::max();
        for (const auto& [label, c] : centroids) {
            double d = (feats.row(i).transpose() - c).squaredNorm();
            if (d < bd) { bd = d; best = label; }
        }
        if (best == labels[i]) hits++;
    }
    return static_cast<double>(hits) / feats.rows();
}

double diversity(const Mat& feats, int pairs, uint64_t seed) {
    if (feats.rows() < 2) throw std::invalid_argument("diversity: need >= 2 samples");
    auto rng = make_rng(seed, "diversity-pairs");
    std::uniform_int_distribution<int> pick(0, static_cast<int>(feats.rows()) - 1);
    double acc = 0.0;
    for (int p = 0; p < pairs; ++p) {
        int i = pick(rng), j = pick(rng);
        acc += (feats.row(i) - feats.row(j)).norm();
    }
    return acc / pairs;
}

double multimodality(const Mat& feats, const std::vector<uint16_t>& labels,
                     int pairs_per_cond, uint64_t seed) {
    std::map<uint16_t, std::vector<int>> by_label;
    for (size_t i = 0; i < labels.size(); ++i)
        by_label[labels[i]].push_back(static_cast<int>(i));
    auto rng = make_rng(seed, "mm-pairs");
    double acc = 0.0;
    int conds = 0;
    for (const auto& [label, idx] : by_label) {
        if (idx.size() < 2)
            throw std::invalid_argument("multimodality: need >= 2 repeats per condition");
        std::uniform_int_distribution<size_t> pick(0, idx.size() - 1);
        double c = 0.0;
        for (int p = 0; p < pairs_per_cond; ++p)
            c += (feats.row(idx[pick(rng)]) - feats.row(idx[pick(rng)])).norm();
        acc += c / pairs_per_cond;
        conds++;
    }
    return acc / conds;
}

}  // namespace mlct
