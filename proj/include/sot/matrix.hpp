#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace sot {

// Dense row-major double matrix.  All experiment sizes are n <= a few
// thousand, so density is fine and keeps the numerics transparent.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double max_abs_diff(const Matrix& o) const {
        double m = 0.0;
        for (std::size_t i = 0; i < data_.size(); ++i)
            m = std::max(m, std::abs(data_[i] - o.data_[i]));
        return m;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// A feature matrix is just a dense matrix with one item per row.
using FeatureMatrix = Matrix;

// Cosine similarities of unit rows; symmetric by construction (each
// unordered pair is computed exactly once).
struct SimilarityMatrix {
    Matrix s;
};

// Squared Euclidean distances between unit rows.  `masked` marks the
// diagonal as conceptually +infinity; the infinite weight is never stored
// as a number — solvers read the flag and use a zero kernel weight instead.
struct DistanceMatrix {
    Matrix d;
    bool masked = false;
};

inline double row_norm(const Matrix& m, std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
}

// Divide every row by its L2 norm.  Rows of (near-)zero norm have no
// direction and are rejected.
inline FeatureMatrix normalize_rows(const FeatureMatrix& m) {
    FeatureMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double norm = row_norm(m, i);
        if (norm <= 1e-12) throw ZeroNormRow(i);
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) / norm;
    }
    return out;
}

// S = V * V^T for unit-normalized V.
inline SimilarityMatrix cosine_similarity(const FeatureMatrix& m) {
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(row_norm(m, i) - 1.0) > 1e-6) throw NotNormalized(i);
    SimilarityMatrix sim{Matrix(n, n)};
    for (std::size_t i = 0; i < n; ++i) {
        sim.s(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double dot = 0.0;
            const double* a = m.row_ptr(i);
            const double* b = m.row_ptr(j);
            for (std::size_t c = 0; c < m.cols(); ++c) dot += a[c] * b[c];
            sim.s(i, j) = dot;
            sim.s(j, i) = dot; // bitwise symmetric: single computation per pair
        }
    }
    return sim;
}

// D = 2(1 - S); for unit rows this equals ||v_i - v_j||^2.  Clamped below
// at zero because S can exceed 1 by machine epsilon.
inline DistanceMatrix pairwise_sq_distances(const SimilarityMatrix& sim) {
    const std::size_t n = sim.s.rows();
    DistanceMatrix dist{Matrix(n, n), false};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::max(0.0, 2.0 * (1.0 - sim.s(i, j)));
            dist.d(i, j) = d;
            dist.d(j, i) = d;
        }
    }
    return dist;
}

inline DistanceMatrix mask_diagonal(const DistanceMatrix& dist) {
    if (dist.masked) throw AlreadyMasked();
    DistanceMatrix out = dist;
    out.masked = true;
    return out;
}

inline bool is_permutation(const std::vector<std::size_t>& perm, std::size_t n) {
    if (perm.size() != n) return false;
    std::vector<bool> seen(n, false);
    for (std::size_t p : perm) {
        if (p >= n || seen[p]) return false;
        seen[p] = true;
    }
    return true;
}

// Output row i = input row perm[i].
inline FeatureMatrix permute_rows(const FeatureMatrix& m, const std::vector<std::size_t>& perm) {
    if (!is_permutation(perm, m.rows())) throw InvalidPermutation();
    FeatureMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(perm[i], j);
    return out;
}

} // namespace sot
