#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"
#include "rng.hpp"
#include "sym_eigen.hpp"

namespace sot {

// Synthetic clustered data on the unit d-sphere: k centers drawn uniformly
// on the sphere, points perturbed with isotropic Gaussian noise of standard
// deviation sigma and re-projected onto the sphere.
struct SphereTaskSpec {
    std::size_t k = 10;
    std::size_t points_per_cluster = 20;
    std::size_t dim = 100;
    double sigma = 0.3;
    std::uint64_t seed = 42;
    std::size_t pca_dim = 50; // reduction target when dim exceeds it; 0 = disabled
};

struct LabeledDataset {
    FeatureMatrix features;
    std::vector<int> labels;
};

struct EpisodeSpec {
    std::size_t n_way = 5;
    std::size_t k_shot = 5;
    std::size_t q_query = 15;
    std::uint64_t seed = 42;
};

// Deterministic given the seed: centers come from RNG substream 0 and the
// noise of cluster c from substream 1 + c.
inline LabeledDataset generate_sphere_dataset(const SphereTaskSpec& spec) {
    if (spec.dim < 2) throw InvalidSpec("dim must be >= 2");
    if (spec.k < 1 || spec.points_per_cluster < 1) throw InvalidSpec("k and points per cluster must be >= 1");
    if (spec.sigma < 0.0) throw InvalidSpec("sigma must be >= 0");

    const std::size_t n = spec.k * spec.points_per_cluster;
    Matrix centers(spec.k, spec.dim);
    Rng center_rng(spec.seed, 0);
    for (std::size_t c = 0; c < spec.k; ++c) {
        double norm2 = 0.0;
        for (std::size_t j = 0; j < spec.dim; ++j) {
            centers(c, j) = center_rng.gaussian();
            norm2 += centers(c, j) * centers(c, j);
        }
        const double norm = std::sqrt(norm2);
        for (std::size_t j = 0; j < spec.dim; ++j) centers(c, j) /= norm;
    }

    LabeledDataset ds{FeatureMatrix(n, spec.dim), std::vector<int>(n)};
    for (std::size_t c = 0; c < spec.k; ++c) {
        Rng noise_rng(spec.seed, 1 + c);
        for (std::size_t p = 0; p < spec.points_per_cluster; ++p) {
            const std::size_t i = c * spec.points_per_cluster + p;
            double norm2 = 0.0;
            for (std::size_t j = 0; j < spec.dim; ++j) {
                ds.features(i, j) = centers(c, j) + spec.sigma * noise_rng.gaussian();
                norm2 += ds.features(i, j) * ds.features(i, j);
            }
            const double norm = std::sqrt(norm2);
            if (norm <= 1e-12) throw InvalidSpec("degenerate sample with zero norm");
            for (std::size_t j = 0; j < spec.dim; ++j) ds.features(i, j) /= norm;
            ds.labels[i] = static_cast<int>(c);
        }
    }
    return ds;
}

struct PcaResult {
    LabeledDataset dataset;
    double retained_variance = 1.0; // top-target eigenvalue mass / total
};

// PCA via the n x n Gram matrix (n < d in the regimes of interest): center
// the rows, eigendecompose X_c X_c^T, and use sqrt(eigenvalue)-scaled
// eigenvector coordinates as the projected scores.  Output rows are NOT
// renormalized; renormalization is an explicit separate step.
inline PcaResult pca_reduce_with_variance(const LabeledDataset& ds, std::size_t target_dim) {
    const std::size_t n = ds.features.rows(), d = ds.features.cols();
    if (target_dim > std::min(n, d)) throw TargetTooLarge();

    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += ds.features(i, j);
    for (double& m : mean) m /= static_cast<double>(n);

    Matrix centered(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centered(i, j) = ds.features(i, j) - mean[j];

    Matrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += centered(i, c) * centered(j, c);
            gram(i, j) = dot;
            gram(j, i) = dot;
        }

    SymEigen eig = sym_eigen(std::move(gram));

    double total = 0.0, kept = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += std::max(0.0, eig.values[j]);
    for (std::size_t j = 0; j < target_dim; ++j) kept += std::max(0.0, eig.values[j]);

    PcaResult out;
    out.dataset.labels = ds.labels;
    out.dataset.features = FeatureMatrix(n, target_dim);
    for (std::size_t j = 0; j < target_dim; ++j) {
        const double scale = std::sqrt(std::max(0.0, eig.values[j]));
        // deterministic sign: orient each component so its largest-magnitude
        // coordinate is positive
        std::size_t arg = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(eig.vectors(i, j)) > std::abs(eig.vectors(arg, j))) arg = i;
        const double sign = eig.vectors(arg, j) >= 0.0 ? 1.0 : -1.0;
        for (std::size_t i = 0; i < n; ++i)
            out.dataset.features(i, j) = sign * scale * eig.vectors(i, j);
    }
    out.retained_variance = total > 0.0 ? kept / total : 1.0;
    return out;
}

inline LabeledDataset pca_reduce(const LabeledDataset& ds, std::size_t target_dim) {
    return pca_reduce_with_variance(ds, target_dim).dataset;
}

namespace detail {

// Deterministic partial Fisher-Yates: shuffles the first `take` slots.
inline void partial_shuffle(std::vector<std::size_t>& v, std::size_t take, Rng& rng) {
    const std::size_t m = v.size();
    for (std::size_t i = 0; i < take && i + 1 < m; ++i) {
        const std::size_t j = i + rng.uniform_index(m - i);
        std::swap(v[i], v[j]);
    }
}

} // namespace detail

// Sample a few-shot episode: n_way classes without replacement, then
// disjoint support/query index sets within each class.  Original class
// labels are preserved in both splits.
inline std::pair<LabeledDataset, LabeledDataset>
sample_episode(const LabeledDataset& ds, const EpisodeSpec& spec) {
    if (spec.n_way < 1) throw InvalidSpec("n_way must be >= 1");
    std::vector<std::size_t> classes;
    {
        std::vector<int> sorted = ds.labels;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        for (int c : sorted) classes.push_back(static_cast<std::size_t>(c));
    }
    if (spec.n_way > classes.size()) throw InvalidSpec("n_way exceeds the number of classes");

    Rng rng(spec.seed, 0);
    detail::partial_shuffle(classes, spec.n_way, rng);

    std::vector<std::size_t> support_idx, query_idx;
    for (std::size_t w = 0; w < spec.n_way; ++w) {
        const int cls = static_cast<int>(classes[w]);
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.labels.size(); ++i)
            if (ds.labels[i] == cls) members.push_back(i);
        if (members.size() < spec.k_shot + spec.q_query)
            throw InsufficientPoints("class " + std::to_string(cls) + " has too few points");
        detail::partial_shuffle(members, spec.k_shot + spec.q_query, rng);
        for (std::size_t s = 0; s < spec.k_shot; ++s) support_idx.push_back(members[s]);
        for (std::size_t q = 0; q < spec.q_query; ++q)
            query_idx.push_back(members[spec.k_shot + q]);
    }

    const auto take = [&](const std::vector<std::size_t>& idx) {
        LabeledDataset out{FeatureMatrix(idx.size(), ds.features.cols()),
                           std::vector<int>(idx.size())};
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t j = 0; j < ds.features.cols(); ++j)
                out.features(i, j) = ds.features(idx[i], j);
            out.labels[i] = ds.labels[idx[i]];
        }
        return out;
    };
    return {take(support_idx), take(query_idx)};
}

} // namespace sot
