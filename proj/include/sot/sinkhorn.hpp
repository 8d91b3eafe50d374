#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace sot {

// Parameters of the entropy-regularized self-transport solve.
//
// The regularized objective is  <D_inf, W> - (1/lambda) h(W)  over matrices
// with unit row and column marginals (each of the n rows/columns carries
// mass 1), whose Gibbs kernel is K_ij = exp(-lambda * cost_ij) off the
// diagonal and K_ii = 0.  Larger lambda weights the linear cost more and
// drives W toward the exact (permutation) solution.
struct SinkhornParams {
    double lambda = 0.1;        // entropy regularization weight, > 0
    int max_sweeps = 10;        // one sweep = one column + one row normalization
    double marginal_tol = 0.0;  // early-stop threshold; 0 = run exactly max_sweeps
    bool log_domain = true;     // log-sum-exp stabilized iteration
};

struct TransportPlan {
    Matrix w;               // n x n plan; diagonal exactly 0; total mass n
    double marginal_err = 0.0; // max over all rows and columns of |sum - 1|
    int sweeps_used = 0;
};

// Max over all row sums and column sums of |sum - 1|.
inline double marginal_error(const Matrix& w) {
    const std::size_t n = w.rows();
    double err = 0.0;
    std::vector<double> col_sums(w.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < w.cols(); ++j) {
            row_sum += w(i, j);
            col_sums[j] += w(i, j);
        }
        err = std::max(err, std::abs(row_sum - 1.0));
    }
    for (double c : col_sums) err = std::max(err, std::abs(c - 1.0));
    return err;
}

// Shannon entropy h(W) = -sum w_ij ln w_ij with 0 ln 0 := 0.
inline double entropy(const TransportPlan& plan) {
    double h = 0.0;
    for (double v : plan.w.data())
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

namespace detail {

// log-sum-exp over a strided slice; -inf entries are transparent.
inline double log_sum_exp(const double* x, std::size_t n, std::size_t stride) {
    const double neg_inf = -std::numeric_limits<double>::infinity();
    double m = neg_inf;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i * stride]);
    if (m == neg_inf) return neg_inf;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i * stride] - m);
    return m + std::log(s);
}

inline TransportPlan solve_log_domain(const Matrix& cost, const SinkhornParams& p) {
    const std::size_t n = cost.rows();
    const double neg_inf = -std::numeric_limits<double>::infinity();

    // log K = -lambda * cost off-diagonal; the masked diagonal is a -inf
    // sentinel, which exponentiates to an exact zero weight.
    Matrix log_k(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            log_k(i, j) = (i == j) ? neg_inf : -p.lambda * cost(i, j);

    std::vector<double> f(n, 0.0), g(n, 0.0); // row / column log-potentials
    Matrix scaled(n, n);
    const auto materialize = [&]() {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double lk = log_k(i, j);
                scaled(i, j) = (lk == neg_inf) ? 0.0 : std::exp(lk + f[i] + g[j]);
            }
    };

    int sweeps = 0;
    for (; sweeps < p.max_sweeps; ++sweeps) {
        // column normalization: g_j = -lse_i(log_k_ij + f_i)
        for (std::size_t j = 0; j < n; ++j) {
            double m = neg_inf;
            for (std::size_t i = 0; i < n; ++i)
                m = std::max(m, log_k(i, j) + f[i]);
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double x = log_k(i, j) + f[i];
                if (x != neg_inf) s += std::exp(x - m);
            }
            g[j] = -(m + std::log(s));
        }
        // row normalization: f_i = -lse_j(log_k_ij + g_j)
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = log_k.row_ptr(i);
            double m = neg_inf;
            for (std::size_t j = 0; j < n; ++j)
                m = std::max(m, row[j] + g[j]);
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double x = row[j] + g[j];
                if (x != neg_inf) s += std::exp(x - m);
            }
            f[i] = -(m + std::log(s));
        }
        if (p.marginal_tol > 0.0) {
            materialize();
            if (marginal_error(scaled) <= p.marginal_tol) {
                ++sweeps;
                break;
            }
        }
    }

    materialize();
    return TransportPlan{std::move(scaled), 0.0, sweeps};
}

inline TransportPlan solve_linear_domain(const Matrix& cost, const SinkhornParams& p) {
    const std::size_t n = cost.rows();
    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            k(i, j) = (i == j) ? 0.0 : std::exp(-p.lambda * cost(i, j));

    std::vector<double> u(n, 1.0), v(n, 1.0);
    Matrix scaled(n, n);
    const auto materialize = [&]() {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                scaled(i, j) = u[i] * k(i, j) * v[j];
    };

    int sweeps = 0;
    for (; sweeps < p.max_sweeps; ++sweeps) {
        for (std::size_t j = 0; j < n; ++j) { // column normalization
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += k(i, j) * u[i];
            if (s == 0.0) throw NumericalUnderflow("column kernel sum underflowed to zero");
            v[j] = 1.0 / s;
        }
        for (std::size_t i = 0; i < n; ++i) { // row normalization
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += k(i, j) * v[j];
            if (s == 0.0) throw NumericalUnderflow("row kernel sum underflowed to zero");
            u[i] = 1.0 / s;
        }
        if (p.marginal_tol > 0.0) {
            materialize();
            if (marginal_error(scaled) <= p.marginal_tol) {
                ++sweeps;
                break;
            }
        }
    }

    materialize();
    return TransportPlan{std::move(scaled), 0.0, sweeps};
}

} // namespace detail

// Alternating-normalization solve of the masked self-transport problem.
// The last operation of every sweep is a row normalization; a final exact
// row division makes that literal, so the reported marginal_err is the
// residual column deviation.
inline TransportPlan sinkhorn_solve(const DistanceMatrix& cost, const SinkhornParams& p = {}) {
    if (!cost.masked) throw InvalidCost();
    const std::size_t n = cost.d.rows();

    TransportPlan plan = p.log_domain ? detail::solve_log_domain(cost.d, p)
                                      : detail::solve_linear_domain(cost.d, p);

    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += plan.w(i, j);
        if (s == 0.0) throw NumericalUnderflow("plan row underflowed to zero");
        for (std::size_t j = 0; j < n; ++j) plan.w(i, j) /= s;
    }
    plan.marginal_err = marginal_error(plan.w);
    return plan;
}

// Exhaustive minimum-cost fixed-point-free assignment for tiny instances.
// Enumeration is in lexicographic order and only strictly better objectives
// replace the incumbent, so ties resolve to the lexicographically smallest
// derangement.
inline std::pair<std::vector<std::size_t>, double>
exact_selfmatch_oracle(const DistanceMatrix& cost) {
    if (!cost.masked) throw InvalidCost();
    const std::size_t n = cost.d.rows();
    if (n < 2) throw Infeasible("self-matching needs at least 2 items");
    if (n > 10) throw TooLarge(n);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<std::size_t> best;
    double best_obj = std::numeric_limits<double>::infinity();
    do {
        bool derangement = true;
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (perm[i] == i) {
                derangement = false;
                break;
            }
            obj += cost.d(i, perm[i]);
        }
        if (derangement && obj < best_obj) {
            best_obj = obj;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return {best, best_obj};
}

// <D_inf, W> restricted to the off-diagonal (the diagonal carries no mass).
inline double transport_cost(const DistanceMatrix& cost, const TransportPlan& plan) {
    double s = 0.0;
    const std::size_t n = cost.d.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) s += cost.d(i, j) * plan.w(i, j);
    return s;
}

} // namespace sot
