#pragma once

#include <cstdint>
#include <vector>

#include "mlct/autodiff.hpp"
#include "mlct/net.hpp"

namespace mlct {

// Centroid-keyed dictionary: condition-embedding centroids paired with the
// mean latent of each cluster's members.
struct ClusterDictionary {
    Mat keys;    // K x d_c
    Mat values;  // K x (n*d_m), latents stored flattened
    int k() const { return static_cast<int>(keys.rows()); }
};

// Lloyd's iterations with k-means++ seeding; empty clusters re-seeded from
// the farthest point. Deterministic given seed.
ClusterDictionary build_dictionary(const Mat& embeddings,  // items x d_c
                                   const Mat& latents,     // items x (n*d_m)
                                   int k, uint64_t seed);

// Softmax similarity query through the trainable affine map A:
//   rho = softmax(A(q) A(K)^T),  I = rho * V.
// affine_w: d_c x d_a, affine_b: 1 x d_a. Returns I as 1 x (n*d_m).
Mat query(const Mat& q, const ClusterDictionary& dict, const Mat& affine_w,
          const Mat& affine_b);

// Taped batched query for training; q is B x d_c (constant rows).
ad::Var query_taped(ad::Tape& tape, ad::Var q, const ClusterDictionary& dict,
                    ad::Var affine_w, ad::Var affine_b);

// block_input + affine(I)
Mat fuse(const Mat& block_input, const Mat& cluster_ref, const Mat& affine_w,
         const Mat& affine_b);

// Query affine parameters live alongside the consistency model weights.
void add_query_affine_params(ModelParams& params, int d_c, int d_a,
                             uint64_t seed);

}  // namespace mlct
