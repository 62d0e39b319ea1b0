#include "mlct/clustering.hpp"

#include <limits>
#include <stdexcept>

#include "mlct/rng.hpp"

namespace mlct {

namespace {

// k-means++ seeding
std::vector<int> seed_centroids(const Mat& x, int k, std::mt19937_64& rng) {
    int n = static_cast<int>(x.rows());
    std::vector<int> chosen;
    std::uniform_int_distribution<int> first(0, n - 1);
    chosen.push_back(first(rng));
    Eigen::VectorXd d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::max());
    while (static_cast<int>(chosen.size()) < k) {
        int last = chosen.back();
        for (int i = 0; i < n; ++i)
            d2(i) = std::min(d2(i), (x.row(i) - x.row(last)).squaredNorm());
        double total = d2.sum();
        if (total <= 0.0) {
            // all remaining points coincide with a centroid; pick any unused
            for (int i = 0; i < n; ++i) {
                bool used = false;
                for (int c : chosen) used |= (c == i);
                if (!used) { chosen.push_back(i); break; }
            }
            continue;
        }
        std::uniform_real_distribution<double> u(0.0, total);
        double r = u(rng), acc = 0.0;
        int pick = n - 1;
        for (int i = 0; i < n; ++i) {
            acc += d2(i);
            if (acc >= r) { pick = i; break; }
        }
        chosen.push_back(pick);
    }
    return chosen;
}

}  // namespace

ClusterDictionary build_dictionary(const Mat& embeddings, const Mat& latents,
                                   int k, uint64_t seed) {
    int n = static_cast<int>(embeddings.rows());
    if (latents.rows() != n)
        throw std::invalid_argument("build_dictionary: lists not aligned");
    if (k < 1 || k > n)
        throw std::invalid_argument("build_dictionary: k outside [1, items]");

    auto rng = make_rng(seed, "kmeans");
    Mat centroids(k, embeddings.cols());
    {
        auto idx = seed_centroids(embeddings, k, rng);
        for (int c = 0; c < k; ++c) centroids.row(c) = embeddings.row(idx[c]);
    }

    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < 100; ++iter) {
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = std::numeric_limits<double>::max();
            for (int c = 0; c < k; ++c) {
                double d = (embeddings.row(i) - centroids.row(c)).squaredNorm();
                if (d < bd) { bd = d; best = c; }
            }
            assign[i] = best;
        }
        Mat next = Mat::Zero(k, embeddings.cols());
        std::vector<int> count(k, 0);
        for (int i = 0; i < n; ++i) {
            next.row(assign[i]) += embeddings.row(i);
            count[assign[i]]++;
        }
        for (int c = 0; c < k; ++c) {
            if (count[c] == 0) {
                // re-seed from the point farthest from its centroid
                int far = 0;
                double fd = -1.0;
                for (int i = 0; i < n; ++i) {
                    double d = (embeddings.row(i) - centroids.row(assign[i])).squaredNorm();
                    if (d > fd) { fd = d; far = i; }
                }
                next.row(c) = embeddings.row(far);
                count[c] = 1;
                assign[far] = c;
            } else {
                next.row(c) /= count[c];
            }
        }
        double shift = (next - centroids).rowwise().norm().maxCoeff();
        centroids = next;
        if (shift < 1e-6) break;
    }

    // final assignment against converged centroids
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double bd = std::numeric_limits<double>::max();
        for (int c = 0; c < k; ++c) {
            double d = (embeddings.row(i) - centroids.row(c)).squaredNorm();
            if (d < bd) { bd = d; best = c; }
        }
        assign[i] = best;
    }
    Mat sums = Mat::Zero(k, embeddings.cols());
    Mat vals = Mat::Zero(k, latents.cols());
    std::vector<int> count(k, 0);
    for (int i = 0; i < n; ++i) {
        sums.row(assign[i]) += embeddings.row(i);
        vals.row(assign[i]) += latents.row(i);
        count[assign[i]]++;
    }
    ClusterDictionary dict;
    dict.keys.resize(k, embeddings.cols());
    dict.values.resize(k, latents.cols());
    for (int c = 0; c < k; ++c) {
        if (count[c] == 0) {
            // assignment against converged centroids left this cluster empty;
            // fold in the closest point so no empty cluster survives
            int near = 0;
            double nd = std::numeric_limits<double>::max();
            for (int i = 0; i < n; ++i) {
                double d = (embeddings.row(i) - centroids.row(c)).squaredNorm();
                if (d < nd) { nd = d; near = i; }
            }
            dict.keys.row(c) = embeddings.row(near);
            dict.values.row(c) = latents.row(near);
        } else {
            dict.keys.row(c) = sums.row(c) / count[c];
            dict.values.row(c) = vals.row(c) / count[c];
        }
    }
    return dict;
}

Mat query(const Mat& q, const ClusterDictionary& dict, const Mat& affine_w,
          const Mat& affine_b) {
    ad::Tape tape;
    ad::Var out = query_taped(tape, tape.leaf(q), dict, tape.leaf(affine_w),
                              tape.leaf(affine_b));
    return tape.value(out);
}

ad::Var query_taped(ad::Tape& tape, ad::Var q, const ClusterDictionary& dict,
                    ad::Var affine_w, ad::Var affine_b) {
    if (tape.value(q).cols() != dict.keys.cols())
        throw std::invalid_argument("query: dimension mismatch");
    ad::Var keys = tape.leaf(dict.keys);
    ad::Var vals = tape.leaf(dict.values);
    ad::Var aq = tape.add_row(tape.matmul(q, affine_w), affine_b);
    ad::Var ak = tape.add_row(tape.matmul(keys, affine_w), affine_b);
    ad::Var rho = tape.softmax_rows(tape.matmul(aq, tape.transpose(ak)));
    return tape.matmul(rho, vals);
}

Mat fuse(const Mat& block_input, const Mat& cluster_ref, const Mat& affine_w,
         const Mat& affine_b) {
    if (cluster_ref.cols() != affine_w.rows())
        throw std::invalid_argument("fuse: shape mismatch");
    return block_input + ((cluster_ref * affine_w).rowwise() + affine_b.row(0));
}

void add_query_affine_params(ModelParams& params, int d_c, int d_a,
                             uint64_t seed) {
    auto rng = make_rng(seed, "query-affine");
    std::normal_distribution<double> dist(0.0, std::sqrt(1.0 / d_c));
    Mat w(d_c, d_a);
    for (int i = 0; i < d_c; ++i)
        for (int j = 0; j < d_a; ++j) w(i, j) = dist(rng);
    params.arrays["dict.A.W"] = w;
    params.arrays["dict.A.b"] = Mat::Zero(1, d_a);
}

}  // namespace mlct
