#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"
#include "sinkhorn.hpp"

namespace sot {

// Configuration of the full transform pipeline.
//
// With defaults, the output is the symmetrized transport plan with the
// diagonal restored to 1: off-diagonal rows are probability distributions
// over the other items.
//
// max_rescale additionally divides the (symmetrized) plan by its largest
// entry before the diagonal is restored.  The restored 1s then sit at the
// same magnitude as the strongest off-diagonal affinities instead of
// dominating every row, which is what downstream Euclidean consumers
// (k-means, prototypes) need; the benchmark harness enables it.
struct SotConfig {
    SinkhornParams sinkhorn{};
    bool symmetrize = true;        // W <- (W + W^T) / 2
    bool set_unit_diagonal = true; // W <- W + I
    bool max_rescale = false;      // W <- W / max(W) before the diagonal restore
};

// The re-embedding: row i of `w` is the transformed feature vector of item
// i, so the output dimensionality equals the item count n.
struct SotEmbedding {
    Matrix w;
    SotConfig config;
    double marginal_err = 0.0;
};

namespace detail {

inline SotEmbedding finish_embedding(TransportPlan&& plan, const SotConfig& cfg) {
    const std::size_t n = plan.w.rows();
    Matrix w = std::move(plan.w);

    if (cfg.symmetrize) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double avg = 0.5 * (w(i, j) + w(j, i));
                w(i, j) = avg;
                w(j, i) = avg;
            }
    }
    if (cfg.max_rescale) {
        double mx = 0.0;
        for (double v : w.data()) mx = std::max(mx, v);
        if (mx <= 0.0) throw NumericalUnderflow("transport plan has no positive entry");
        for (double& v : w.data()) v /= mx;
    }
    if (cfg.set_unit_diagonal) {
        for (std::size_t i = 0; i < n; ++i) w(i, i) = 1.0; // diagonal was exactly 0
    }
    return SotEmbedding{std::move(w), cfg, plan.marginal_err};
}

} // namespace detail

// Transform precomputed squared distances (e.g. from an external retrieval
// pipeline) instead of raw features.
inline SotEmbedding sot_transform_from_distances(const Matrix& dist, const SotConfig& cfg = {}) {
    const std::size_t n = dist.rows();
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dev = std::max(dev, std::abs(dist(i, j) - dist(j, i)));
    if (dev > 1e-9) throw Asymmetric(dev);

    DistanceMatrix dm{dist, false};
    for (std::size_t i = 0; i < n; ++i) dm.d(i, i) = 0.0;
    TransportPlan plan = sinkhorn_solve(mask_diagonal(dm), cfg.sinkhorn);
    return detail::finish_embedding(std::move(plan), cfg);
}

// The end-to-end transform: normalize rows, cosine similarities, squared
// distances, diagonal masking, Sinkhorn, then symmetrization / rescale /
// diagonal restoration per config.
inline SotEmbedding sot_transform(const FeatureMatrix& features, const SotConfig& cfg = {}) {
    const FeatureMatrix unit = normalize_rows(features);
    const SimilarityMatrix sim = cosine_similarity(unit);
    DistanceMatrix dist = pairwise_sq_distances(sim);
    TransportPlan plan = sinkhorn_solve(mask_diagonal(dist), cfg.sinkhorn);
    return detail::finish_embedding(std::move(plan), cfg);
}

// Split |w_i - w_j| into the direct coordinates (positions i and j, both
// equal to 1 - w_ij for a symmetric unit-diagonal embedding) and the n-2
// third-party coordinates |w_ik - w_jk|.
inline std::pair<double, std::vector<double>>
embedded_difference_decomposition(const SotEmbedding& emb, std::size_t i, std::size_t j) {
    if (!emb.config.symmetrize || !emb.config.set_unit_diagonal)
        throw ConfigMismatch("decomposition requires the symmetrized, unit-diagonal config");
    const std::size_t n = emb.w.rows();
    if (i >= n || j >= n || i == j) throw IndexOutOfRange();

    const double direct = 1.0 - emb.w(i, j);
    std::vector<double> indirect;
    indirect.reserve(n - 2);
    for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        indirect.push_back(std::abs(emb.w(i, k) - emb.w(j, k)));
    }
    return {direct, indirect};
}

} // namespace sot
