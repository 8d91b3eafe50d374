#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace sot {

struct ClusteringResult {
    std::vector<int> assignments; // length n, values in [0, k)
    Matrix centroids;             // k x d
    double inertia = 0.0;         // sum of squared distances to assigned centroid
    int restarts_used = 0;
};

namespace detail {

inline double sq_dist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        const double diff = a[c] - b[c];
        s += diff * diff;
    }
    return s;
}

// Greedy k-means++ seeding: each new center is chosen among several
// D^2-sampled candidates, keeping the one that lowers the total potential
// the most.  This is the standard robust variant of k-means++ seeding.
inline Matrix kmeanspp_init(const Matrix& x, std::size_t k, Rng& rng) {
    const std::size_t n = x.rows(), d = x.cols();
    const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));

    Matrix centers(k, d);
    const std::size_t first = rng.uniform_index(n);
    for (std::size_t c = 0; c < d; ++c) centers(0, c) = x(first, c);

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(x.row_ptr(i), centers.row_ptr(0), d);

    std::vector<double> cand_d2(n), best_d2(n);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : d2) total += v;

        double best_pot = std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            std::size_t idx;
            if (total <= 0.0) {
                idx = rng.uniform_index(n);
            } else {
                const double r = rng.uniform() * total;
                double acc = 0.0;
                idx = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += d2[i];
                    if (r < acc) {
                        idx = i;
                        break;
                    }
                }
            }
            double pot = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cand_d2[i] = std::min(d2[i], sq_dist(x.row_ptr(i), x.row_ptr(idx), x.cols()));
                pot += cand_d2[i];
            }
            if (pot < best_pot) {
                best_pot = pot;
                best_idx = idx;
                best_d2.swap(cand_d2);
            }
        }
        for (std::size_t col = 0; col < d; ++col) centers(c, col) = x(best_idx, col);
        d2 = best_d2;
    }
    return centers;
}

inline ClusteringResult lloyd(const Matrix& x, std::size_t k, Rng&& rng, int max_iters) {
    const std::size_t n = x.rows(), d = x.cols();
    Matrix centers = kmeanspp_init(x, k, rng);
    std::vector<int> assign(n, -1), prev(n, -1);
    std::vector<std::size_t> counts(k);

    for (int it = 0; it < max_iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double dist = sq_dist(x.row_ptr(i), centers.row_ptr(c), d);
                if (dist < best) {
                    best = dist;
                    arg = static_cast<int>(c);
                }
            }
            assign[i] = arg;
        }
        if (assign == prev) break; // assignment fixpoint
        prev = assign;

        Matrix next(k, d);
        std::fill(counts.begin(), counts.end(), std::size_t{0});
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assign[i]];
            for (std::size_t c = 0; c < d; ++c) next(assign[i], c) += x(i, c);
        }
        std::vector<bool> taken(n, false);
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (std::size_t col = 0; col < d; ++col) next(c, col) /= static_cast<double>(counts[c]);
            } else {
                // reseed an empty cluster to the point farthest from its previous centroid
                double far = -1.0;
                std::size_t far_idx = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (taken[i]) continue;
                    const double dist = sq_dist(x.row_ptr(i), centers.row_ptr(c), d);
                    if (dist > far) {
                        far = dist;
                        far_idx = i;
                    }
                }
                taken[far_idx] = true;
                for (std::size_t col = 0; col < d; ++col) next(c, col) = x(far_idx, col);
            }
        }
        centers = std::move(next);
    }

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        inertia += sq_dist(x.row_ptr(i), centers.row_ptr(assign[i]), d);
    return ClusteringResult{std::move(assign), std::move(centers), inertia, 0};
}

} // namespace detail

// Lloyd k-means with greedy k-means++ seeding.  Deterministic given seed:
// restart r draws from RNG substream (seed, r); the lowest-inertia restart
// wins, ties broken by the lowest restart index.
inline ClusteringResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed,
                               int restarts = 10, int max_iters = 300) {
    const std::size_t n = x.rows();
    if (k < 2 || k > n) throw InvalidSpec("k must satisfy 2 <= k <= n");
    if (restarts < 1) throw InvalidSpec("restarts must be >= 1");

    bool all_same = true;
    for (std::size_t i = 1; i < n && all_same; ++i)
        for (std::size_t c = 0; c < x.cols(); ++c)
            if (x(i, c) != x(0, c)) {
                all_same = false;
                break;
            }
    if (all_same) throw DegenerateInput("all points are identical");

    ClusteringResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        ClusteringResult cur = detail::lloyd(x, k, Rng(seed, static_cast<std::uint64_t>(r)), max_iters);
        if (cur.inertia < best.inertia) best = std::move(cur);
    }
    best.restarts_used = restarts;
    return best;
}

namespace detail {

// Potential-based Hungarian algorithm on a rectangular cost matrix
// (rows <= cols), minimizing total cost in O(rows^2 * cols).
// Returns match[column] = row (or -1).
inline std::vector<int> hungarian_min_cost(const Matrix& a) {
    const std::size_t nr = a.rows(), nc = a.cols();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(nr + 1, 0.0), v(nc + 1, 0.0), minv(nc + 1);
    std::vector<int> p(nc + 1, 0), way(nc + 1, 0);

    for (std::size_t i = 1; i <= nr; ++i) {
        p[0] = static_cast<int>(i);
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::vector<bool> used(nc + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= nc; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = static_cast<int>(j0);
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= nc; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> match(nc, -1);
    for (std::size_t j = 1; j <= nc; ++j)
        if (p[j] != 0) match[j - 1] = p[j] - 1;
    return match;
}

inline std::size_t relabel(const std::vector<int>& labels, std::vector<int>& out) {
    std::map<int, int> ids;
    out.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, fresh] = ids.emplace(labels[i], static_cast<int>(ids.size()));
        (void)fresh;
        out[i] = it->second;
    }
    return ids.size();
}

} // namespace detail

// Clustering accuracy under the best one-to-one matching of predicted to
// true labels: build the k x k confusion matrix and solve the max-trace
// assignment with the Hungarian algorithm.
inline double hungarian_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) throw LengthMismatch();
    const std::size_t n = pred.size();
    std::vector<int> p, t;
    const std::size_t kp = detail::relabel(pred, p);
    const std::size_t kt = detail::relabel(truth, t);
    const std::size_t k = std::max(kp, kt);

    Matrix confusion(k, k);
    for (std::size_t i = 0; i < n; ++i) confusion(p[i], t[i]) += 1.0;

    // maximize trace == minimize negated counts
    Matrix cost(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) cost(i, j) = -confusion(i, j);

    const std::vector<int> match = detail::hungarian_min_cost(cost);
    double matched = 0.0;
    for (std::size_t j = 0; j < k; ++j)
        if (match[j] >= 0) matched += confusion(match[j], j);
    return matched / static_cast<double>(n);
}

// Normalized mutual information with arithmetic-mean normalization and
// natural logarithms.  Both-partitions-trivial (zero entropy each) is
// defined as 1.
inline double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) throw LengthMismatch();
    const std::size_t n = pred.size();
    std::vector<int> p, t;
    const std::size_t kp = detail::relabel(pred, p);
    const std::size_t kt = detail::relabel(truth, t);
    // identical partitions (up to label names) score exactly 1; the general
    // path would land within one ulp of it, not on it
    if (p == t) return 1.0;

    std::vector<double> cp(kp, 0.0), ct(kt, 0.0);
    Matrix joint(kp, kt);
    for (std::size_t i = 0; i < n; ++i) {
        cp[p[i]] += 1.0;
        ct[t[i]] += 1.0;
        joint(p[i], t[i]) += 1.0;
    }
    const double dn = static_cast<double>(n);
    double hp = 0.0, ht = 0.0, mi = 0.0;
    for (double c : cp)
        if (c > 0) hp -= c / dn * std::log(c / dn);
    for (double c : ct)
        if (c > 0) ht -= c / dn * std::log(c / dn);
    for (std::size_t i = 0; i < kp; ++i)
        for (std::size_t j = 0; j < kt; ++j) {
            const double c = joint(i, j);
            if (c > 0) mi += c / dn * std::log(c * dn / (cp[i] * ct[j]));
        }
    if (hp + ht == 0.0) return 1.0;
    return 2.0 * mi / (hp + ht);
}

// Adjusted Rand index via pair-counting contingency sums; 1.0 when the
// adjustment denominator vanishes (identical trivial partitions).
inline double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) throw LengthMismatch();
    const std::size_t n = pred.size();
    if (n < 2) throw LengthMismatch();
    std::vector<int> p, t;
    const std::size_t kp = detail::relabel(pred, p);
    const std::size_t kt = detail::relabel(truth, t);

    std::vector<double> cp(kp, 0.0), ct(kt, 0.0);
    Matrix joint(kp, kt);
    for (std::size_t i = 0; i < n; ++i) {
        cp[p[i]] += 1.0;
        ct[t[i]] += 1.0;
        joint(p[i], t[i]) += 1.0;
    }
    const auto choose2 = [](double c) { return c * (c - 1.0) / 2.0; };
    double sum_ij = 0.0, sum_p = 0.0, sum_t = 0.0;
    for (std::size_t i = 0; i < kp; ++i)
        for (std::size_t j = 0; j < kt; ++j) sum_ij += choose2(joint(i, j));
    for (double c : cp) sum_p += choose2(c);
    for (double c : ct) sum_t += choose2(c);

    const double total = choose2(static_cast<double>(n));
    const double expected = sum_p * sum_t / total;
    const double maximum = 0.5 * (sum_p + sum_t);
    if (maximum == expected) return 1.0;
    return (sum_ij - expected) / (maximum - expected);
}

} // namespace sot
