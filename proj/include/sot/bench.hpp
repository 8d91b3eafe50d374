#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "clustering.hpp"
#include "errors.hpp"
#include "matrix.hpp"
#include "synthgen.hpp"
#include "transform.hpp"

namespace sot {

// Benchmark-facing transform configuration: identical to the library
// defaults except that max_rescale is on, which puts the restored unit
// diagonal on the same scale as the strongest off-diagonal affinities (see
// SotConfig).  All grid, ablation, percentile and episode runs use this.
inline SotConfig bench_sot_config() {
    SotConfig cfg;
    cfg.max_rescale = true;
    return cfg;
}

struct GridSpec {
    std::vector<std::size_t> dims = {10, 32, 100, 316, 1000};
    std::vector<double> sigmas = {0.10, 0.15, 0.19, 0.23, 0.29, 0.40, 0.55, 0.75};
    std::vector<std::uint64_t> seeds = {42, 43, 44, 45, 46, 47, 48, 49, 50, 51};
    SphereTaskSpec task{};          // k / points_per_cluster / pca_dim template
    SotConfig sot = bench_sot_config();
    bool run_baseline = true;
    bool run_sot = true;
    int kmeans_restarts = 10;
    bool timings = false;           // wallclock_ms column is 0 unless enabled
};

struct GridRow {
    std::size_t dim = 0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string method;             // "baseline" | "sot"
    double accuracy = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    double wallclock_ms = 0.0;
};

struct GridError {
    std::size_t dim = 0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string message;
};

struct GridResult {
    GridSpec spec;
    std::vector<GridRow> rows;
    std::vector<GridError> errors;
};

// Generate one grid cell's dataset and reduce it to the unit features both
// method arms consume: PCA (when dim exceeds the target) followed by row
// renormalization.
inline LabeledDataset prepare_unit_features(const SphereTaskSpec& task) {
    LabeledDataset ds = generate_sphere_dataset(task);
    if (task.pca_dim > 0 && task.dim > task.pca_dim) ds = pca_reduce(ds, task.pca_dim);
    ds.features = normalize_rows(ds.features);
    return ds;
}

namespace detail {

// Run fn(0..count-1), optionally fanning out across threads.  Each index
// owns an independent output slot, so results are identical for any worker
// count.
template <typename Fn>
inline void parallel_for(std::size_t count, int workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto body = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(workers, static_cast<int>(count));
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
}

} // namespace detail

// One (dim, sigma, seed) unit of the clustering grid: k-means on the raw
// unit features (baseline) and on the SOT embedding rows, scored with the
// three metrics against the generating labels.
inline std::vector<GridRow> run_grid_unit(const GridSpec& spec, std::size_t dim, double sigma,
                                          std::uint64_t seed) {
    SphereTaskSpec task = spec.task;
    task.dim = dim;
    task.sigma = sigma;
    task.seed = seed;

    const auto t0 = std::chrono::steady_clock::now();
    const LabeledDataset ds = prepare_unit_features(task);
    const std::size_t k = task.k;

    std::vector<GridRow> rows;
    const auto score = [&](const std::string& method, const Matrix& feats) {
        const ClusteringResult cl = kmeans(feats, k, seed, spec.kmeans_restarts);
        GridRow row;
        row.dim = dim;
        row.sigma = sigma;
        row.seed = seed;
        row.method = method;
        row.accuracy = hungarian_accuracy(cl.assignments, ds.labels);
        row.nmi = nmi(cl.assignments, ds.labels);
        row.ari = ari(cl.assignments, ds.labels);
        if (spec.timings) {
            const auto t1 = std::chrono::steady_clock::now();
            row.wallclock_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
        rows.push_back(std::move(row));
    };

    if (spec.run_baseline) score("baseline", ds.features);
    if (spec.run_sot) {
        const SotEmbedding emb = sot_transform(ds.features, spec.sot);
        score("sot", emb.w);
    }
    return rows;
}

inline GridResult run_clustering_grid(const GridSpec& spec, int workers = 1) {
    if (spec.dims.empty() || spec.sigmas.empty() || spec.seeds.empty())
        throw InvalidSpec("grid lists must be nonempty");

    struct Unit {
        std::size_t dim;
        double sigma;
        std::uint64_t seed;
    };
    std::vector<Unit> units;
    for (std::size_t dim : spec.dims)
        for (double sigma : spec.sigmas)
            for (std::uint64_t seed : spec.seeds) units.push_back({dim, sigma, seed});

    std::vector<std::vector<GridRow>> slots(units.size());
    std::vector<std::string> failures(units.size());
    detail::parallel_for(units.size(), workers, [&](std::size_t i) {
        try {
            slots[i] = run_grid_unit(spec, units[i].dim, units[i].sigma, units[i].seed);
        } catch (const SotError& e) {
            failures[i] = e.what();
        }
    });

    GridResult result;
    result.spec = spec;
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (!failures[i].empty()) {
            result.errors.push_back({units[i].dim, units[i].sigma, units[i].seed, failures[i]});
            continue;
        }
        for (auto& row : slots[i]) result.rows.push_back(std::move(row));
    }
    return result;
}

// Per-(dim, sigma) means of one metric for one method.
inline std::map<std::pair<std::size_t, double>, double>
cell_means(const GridResult& res, const std::string& method, const std::string& metric) {
    std::map<std::pair<std::size_t, double>, std::pair<double, std::size_t>> acc;
    for (const GridRow& row : res.rows) {
        if (row.method != method) continue;
        double v = row.accuracy;
        if (metric == "nmi") v = row.nmi;
        else if (metric == "ari") v = row.ari;
        auto& slot = acc[{row.dim, row.sigma}];
        slot.first += v;
        slot.second += 1;
    }
    std::map<std::pair<std::size_t, double>, double> out;
    for (const auto& [cell, sum_count] : acc)
        out[cell] = sum_count.first / static_cast<double>(sum_count.second);
    return out;
}

// Fraction of cells where the SOT mean is at least the baseline mean.
inline double sot_win_fraction(const GridResult& res, const std::string& metric) {
    const auto base = cell_means(res, "baseline", metric);
    const auto sotm = cell_means(res, "sot", metric);
    std::size_t wins = 0, cells = 0;
    for (const auto& [cell, b] : base) {
        const auto it = sotm.find(cell);
        if (it == sotm.end()) continue;
        ++cells;
        if (it->second >= b) ++wins;
    }
    return cells == 0 ? 0.0 : static_cast<double>(wins) / static_cast<double>(cells);
}

// --- intra/inter distance percentile analysis -----------------------------

struct SeparationEntry {
    double intra_mean = 0.0, intra_std = 0.0;
    double inter_mean = 0.0, inter_std = 0.0;
};

struct SeparationReport {
    SeparationEntry original;
    SeparationEntry transformed;
};

namespace detail {

// Percentile rank of each pooled pairwise distance, with ties sharing the
// lowest rank: p = 100 * #{values strictly below} / (N - 1).
inline SeparationEntry percentile_stats(const std::vector<double>& dist,
                                        const std::vector<bool>& intra) {
    const std::size_t m = dist.size();
    std::vector<double> sorted = dist;
    std::sort(sorted.begin(), sorted.end());

    double si = 0.0, si2 = 0.0, so = 0.0, so2 = 0.0;
    std::size_t ni = 0, no = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t below =
            std::lower_bound(sorted.begin(), sorted.end(), dist[i]) - sorted.begin();
        const double p = 100.0 * static_cast<double>(below) / static_cast<double>(m - 1);
        if (intra[i]) {
            si += p;
            si2 += p * p;
            ++ni;
        } else {
            so += p;
            so2 += p * p;
            ++no;
        }
    }
    SeparationEntry e;
    e.intra_mean = si / static_cast<double>(ni);
    e.inter_mean = so / static_cast<double>(no);
    e.intra_std = std::sqrt(std::max(0.0, si2 / static_cast<double>(ni) - e.intra_mean * e.intra_mean));
    e.inter_std = std::sqrt(std::max(0.0, so2 / static_cast<double>(no) - e.inter_mean * e.inter_mean));
    return e;
}

inline void pooled_pair_distances(const Matrix& feats, const std::vector<int>& labels,
                                  std::vector<double>& dist, std::vector<bool>& intra) {
    const std::size_t n = feats.rows();
    dist.clear();
    intra.clear();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            dist.push_back(sq_dist(feats.row_ptr(i), feats.row_ptr(j), feats.cols()));
            intra.push_back(labels[i] == labels[j]);
        }
}

} // namespace detail

// Pool all pairwise squared Euclidean distances, convert each to its
// percentile rank within its own pooled set, and aggregate mean/std over
// intra-class and inter-class pairs — once for the original features and
// once for the SOT embedding rows.
inline SeparationReport distance_percentile_analysis(const LabeledDataset& ds,
                                                     const SotConfig& cfg = bench_sot_config()) {
    const std::size_t n = ds.features.rows();
    bool multi_class = false;
    for (std::size_t i = 1; i < n && !multi_class; ++i)
        if (ds.labels[i] != ds.labels[0]) multi_class = true;
    if (!multi_class) throw SingleClass();

    std::vector<double> dist;
    std::vector<bool> intra;
    SeparationReport report;

    detail::pooled_pair_distances(ds.features, ds.labels, dist, intra);
    report.original = detail::percentile_stats(dist, intra);

    const SotEmbedding emb = sot_transform(ds.features, cfg);
    detail::pooled_pair_distances(emb.w, ds.labels, dist, intra);
    report.transformed = detail::percentile_stats(dist, intra);
    return report;
}

// --- ablation runners -----------------------------------------------------

struct AblationRow {
    double parameter = 0.0; // iteration count or lambda
    double accuracy = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
};

namespace detail {

inline AblationRow ablation_point(const GridSpec& spec, double parameter, const SotConfig& cfg) {
    AblationRow row;
    row.parameter = parameter;
    for (std::uint64_t seed : spec.seeds) {
        SphereTaskSpec task = spec.task;
        task.seed = seed;
        const LabeledDataset ds = prepare_unit_features(task);
        const SotEmbedding emb = sot_transform(ds.features, cfg);
        const ClusteringResult cl = kmeans(emb.w, task.k, seed, spec.kmeans_restarts);
        row.accuracy += hungarian_accuracy(cl.assignments, ds.labels);
        row.nmi += nmi(cl.assignments, ds.labels);
        row.ari += ari(cl.assignments, ds.labels);
    }
    const double count = static_cast<double>(spec.seeds.size());
    row.accuracy /= count;
    row.nmi /= count;
    row.ari /= count;
    return row;
}

} // namespace detail

// Re-run the SOT arm of one grid cell varying only the Sinkhorn sweep count.
inline std::vector<AblationRow> ablate_sinkhorn_iters(const GridSpec& spec,
                                                      const std::vector<int>& iters_list) {
    std::vector<AblationRow> rows;
    for (int iters : iters_list) {
        if (iters < 1) throw InvalidSpec("iteration counts must be >= 1");
        SotConfig cfg = spec.sot;
        cfg.sinkhorn.max_sweeps = iters;
        rows.push_back(detail::ablation_point(spec, static_cast<double>(iters), cfg));
    }
    return rows;
}

// Re-run the SOT arm of one grid cell varying only lambda.
inline std::vector<AblationRow> ablate_lambda(const GridSpec& spec,
                                              const std::vector<double>& lambdas) {
    std::vector<AblationRow> rows;
    for (double lambda : lambdas) {
        if (!(lambda > 0.0)) throw InvalidSpec("lambda values must be > 0");
        SotConfig cfg = spec.sot;
        cfg.sinkhorn.lambda = lambda;
        rows.push_back(detail::ablation_point(spec, lambda, cfg));
    }
    return rows;
}

// --- transductive episode evaluation --------------------------------------

// Nearest-prototype accuracy on one episode.  With use_sot, the transform
// is applied jointly to support ∪ query (transductive) and the rows are
// split back before prototypes are formed.
inline double episode_prototype_eval(const LabeledDataset& ds, const EpisodeSpec& ep,
                                     const SotConfig& cfg, bool use_sot) {
    const auto [support, query] = sample_episode(ds, ep);
    const std::size_t ns = support.features.rows(), nq = query.features.rows();
    const std::size_t d = ds.features.cols();

    Matrix joint(ns + nq, d);
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < d; ++j) joint(i, j) = support.features(i, j);
    for (std::size_t i = 0; i < nq; ++i)
        for (std::size_t j = 0; j < d; ++j) joint(ns + i, j) = query.features(i, j);

    Matrix feats;
    if (use_sot) {
        feats = sot_transform(joint, cfg).w;
    } else {
        feats = std::move(joint);
    }

    // prototypes per distinct support label, in ascending label order
    std::vector<int> classes = support.labels;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    const std::size_t fd = feats.cols();
    Matrix prototypes(classes.size(), fd);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        std::size_t count = 0;
        for (std::size_t i = 0; i < ns; ++i) {
            if (support.labels[i] != classes[c]) continue;
            for (std::size_t j = 0; j < fd; ++j) prototypes(c, j) += feats(i, j);
            ++count;
        }
        for (std::size_t j = 0; j < fd; ++j) prototypes(c, j) /= static_cast<double>(count);
    }

    std::size_t correct = 0;
    for (std::size_t q = 0; q < nq; ++q) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t c = 0; c < classes.size(); ++c) {
            const double dist =
                detail::sq_dist(feats.row_ptr(ns + q), prototypes.row_ptr(c), fd);
            if (dist < best) {
                best = dist;
                arg = c;
            }
        }
        if (classes[arg] == query.labels[q]) ++correct;
    }
    return nq == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(nq);
}

struct EpisodeBatchRow {
    std::uint64_t seed = 0;
    double baseline = 0.0;
    double sot = 0.0;
};

struct EpisodeBatchResult {
    std::vector<EpisodeBatchRow> rows;
    double mean_baseline = 0.0;
    double mean_sot = 0.0;
    std::size_t wins = 0, losses = 0, ties = 0;
    double sign_test_p = 1.0; // one-sided: P[wins this large | no effect]
};

namespace detail {

// Exact one-sided binomial tail P[X >= wins] for X ~ Binomial(n, 1/2).
inline double binomial_sign_test(std::size_t wins, std::size_t n) {
    if (n == 0) return 1.0;
    double p = 0.0;
    for (std::size_t i = wins; i <= n; ++i) {
        const double log_c = std::lgamma(static_cast<double>(n) + 1.0) -
                             std::lgamma(static_cast<double>(i) + 1.0) -
                             std::lgamma(static_cast<double>(n - i) + 1.0);
        p += std::exp(log_c - static_cast<double>(n) * std::log(2.0));
    }
    return std::min(1.0, p);
}

} // namespace detail

// Paired baseline/SOT prototype evaluation over a batch of fresh episodes.
// Episode e draws its own dataset (seed base_seed + e) and episode split,
// so episodes are independent; the sign test is over per-episode pairs.
inline EpisodeBatchResult run_episode_batch(std::size_t episodes, const SphereTaskSpec& task_template,
                                            const EpisodeSpec& ep_template, const SotConfig& cfg,
                                            int workers = 1) {
    EpisodeBatchResult result;
    result.rows.resize(episodes);
    detail::parallel_for(episodes, workers, [&](std::size_t e) {
        SphereTaskSpec task = task_template;
        task.seed = task_template.seed + e;
        EpisodeSpec ep = ep_template;
        ep.seed = ep_template.seed + e;
        const LabeledDataset ds = prepare_unit_features(task);
        EpisodeBatchRow row;
        row.seed = task.seed;
        row.baseline = episode_prototype_eval(ds, ep, cfg, false);
        row.sot = episode_prototype_eval(ds, ep, cfg, true);
        result.rows[e] = row;
    });

    for (const auto& row : result.rows) {
        result.mean_baseline += row.baseline;
        result.mean_sot += row.sot;
        if (row.sot > row.baseline) ++result.wins;
        else if (row.sot < row.baseline) ++result.losses;
        else ++result.ties;
    }
    if (episodes > 0) {
        result.mean_baseline /= static_cast<double>(episodes);
        result.mean_sot /= static_cast<double>(episodes);
    }
    result.sign_test_p = detail::binomial_sign_test(result.wins, result.wins + result.losses);
    return result;
}

} // namespace sot
