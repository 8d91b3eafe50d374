// Command-line frontend for the SOT library: feature-file transforms, the
// synthetic clustering benchmark grid, ablations, distance-percentile
// analysis, dataset generation and episode evaluation.
//
// Exit codes: 0 success, 2 usage/parse/spec error, 3 numeric failure.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "sot/bench.hpp"
#include "sot/clustering.hpp"
#include "sot/errors.hpp"
#include "sot/io.hpp"
#include "sot/matrix.hpp"
#include "sot/synthgen.hpp"
#include "sot/transform.hpp"

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

// Write through a file when a path is given, stdout otherwise.
void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out = sot::open_output(path);
    out << text;
}

std::vector<std::uint64_t> default_seeds() { return {42, 43, 44, 45, 46, 47, 48, 49, 50, 51}; }

// --- transform ------------------------------------------------------------

struct TransformArgs {
    std::string input;
    std::string output;
    double lambda = 0.1;
    int iters = 10;
    bool no_symmetrize = false;
    bool no_unit_diagonal = false;
    bool max_rescale = false;
    bool linear_domain = false;
};

int cmd_transform(const TransformArgs& a) {
    sot::SotConfig cfg;
    cfg.sinkhorn.lambda = a.lambda;
    cfg.sinkhorn.max_sweeps = a.iters;
    cfg.sinkhorn.log_domain = !a.linear_domain;
    cfg.symmetrize = !a.no_symmetrize;
    cfg.set_unit_diagonal = !a.no_unit_diagonal;
    cfg.max_rescale = a.max_rescale;

    const auto t0 = std::chrono::steady_clock::now();
    const sot::FeatureMatrix features = sot::read_feature_csv(a.input);
    const sot::SotEmbedding emb = sot::sot_transform(features, cfg);

    std::ostringstream ss;
    sot::write_matrix_csv(ss, emb.w);
    write_text(a.output, ss.str());

    std::fprintf(stderr, "n=%zu d=%zu marginal_err=%.3e wallclock_ms=%.1f\n", features.rows(),
                 features.cols(), emb.marginal_err, elapsed_ms(t0));
    return 0;
}

// --- cluster-bench --------------------------------------------------------

struct BenchArgs {
    std::string spec_path;
    std::vector<std::size_t> dims;
    std::vector<double> sigmas;
    std::vector<std::uint64_t> seeds;
    std::size_t k = 10;
    std::size_t points_per_cluster = 20;
    std::size_t pca_dim = 50;
    double lambda = 0.1;
    int iters = 10;
    int restarts = 10;
    bool no_max_rescale = false;
    std::vector<std::string> methods;
    int workers = 1;
    bool timings = false;
    std::string out_csv = "grid.csv";
    std::string out_json = "grid.json";
};

sot::GridSpec bench_spec_from_args(const CLI::App* sub, const BenchArgs& a) {
    sot::GridSpec spec;
    if (!a.spec_path.empty()) {
        std::ifstream in(a.spec_path);
        if (!in) throw sot::IoError("cannot open '" + a.spec_path + "'");
        sot::Json j;
        try {
            j = sot::Json::parse(in);
        } catch (const sot::Json::parse_error& e) {
            throw sot::ParseError(a.spec_path, 0, e.what());
        }
        spec = sot::grid_spec_from_json(j);
    }
    // explicit flags override whatever the spec file said
    if (sub->count("--dims")) spec.dims = a.dims;
    if (sub->count("--sigmas")) spec.sigmas = a.sigmas;
    if (sub->count("--seeds")) spec.seeds = a.seeds;
    if (sub->count("--k")) spec.task.k = a.k;
    if (sub->count("--points-per-cluster")) spec.task.points_per_cluster = a.points_per_cluster;
    if (sub->count("--pca-dim")) spec.task.pca_dim = a.pca_dim;
    if (sub->count("--lambda")) spec.sot.sinkhorn.lambda = a.lambda;
    if (sub->count("--iters")) spec.sot.sinkhorn.max_sweeps = a.iters;
    if (sub->count("--restarts")) spec.kmeans_restarts = a.restarts;
    if (a.no_max_rescale) spec.sot.max_rescale = false;
    if (sub->count("--methods")) {
        spec.run_baseline = false;
        spec.run_sot = false;
        for (const std::string& m : a.methods) {
            if (m == "baseline") spec.run_baseline = true;
            else if (m == "sot") spec.run_sot = true;
            else throw sot::InvalidSpec("unknown method '" + m + "'");
        }
    }
    spec.timings = a.timings;
    return spec;
}

void print_mean_accuracy_table(const sot::GridResult& res) {
    const auto base = sot::cell_means(res, "baseline", "accuracy");
    const auto sotm = sot::cell_means(res, "sot", "accuracy");
    std::map<std::pair<std::size_t, double>, std::pair<double, double>> cells;
    for (const auto& [cell, v] : base) cells[cell].first = v;
    for (const auto& [cell, v] : sotm) cells[cell].second = v;

    std::printf("%6s %8s %10s %10s\n", "dim", "sigma", "baseline", "sot");
    for (const auto& [cell, pair] : cells) {
        std::printf("%6zu %8.3f ", cell.first, cell.second);
        if (base.count(cell)) std::printf("%10.4f ", pair.first);
        else std::printf("%10s ", "-");
        if (sotm.count(cell)) std::printf("%10.4f\n", pair.second);
        else std::printf("%10s\n", "-");
    }
    if (!base.empty() && !sotm.empty()) {
        std::printf("sot >= baseline in %.1f%% of cells (accuracy)\n",
                    100.0 * sot::sot_win_fraction(res, "accuracy"));
    }
}

int cmd_cluster_bench(const CLI::App* sub, const BenchArgs& a) {
    const sot::GridSpec spec = bench_spec_from_args(sub, a);
    const sot::GridResult res = sot::run_clustering_grid(spec, a.workers);

    if (!a.out_csv.empty()) {
        std::ofstream out = sot::open_output(a.out_csv);
        sot::write_grid_csv(out, res);
    }
    if (!a.out_json.empty()) {
        std::ofstream out = sot::open_output(a.out_json);
        out << sot::grid_result_to_json(res).dump(2) << '\n';
    }
    print_mean_accuracy_table(res);
    if (!res.errors.empty())
        std::fprintf(stderr, "%zu grid cell(s) failed; see the JSON error records\n",
                     res.errors.size());
    return 0;
}

// --- ablations ------------------------------------------------------------

struct AblateArgs {
    std::size_t dim = 100;
    double sigma = 0.3;
    std::size_t k = 10;
    std::size_t points_per_cluster = 20;
    std::size_t pca_dim = 50;
    std::vector<std::uint64_t> seeds = default_seeds();
    double lambda = 0.1;
    int iters = 10;
    int restarts = 10;
    std::vector<int> iters_list = {1, 2, 4, 8, 16};
    std::vector<double> lambdas = {0.01, 0.025, 0.1, 0.25, 1.0, 4.0};
    std::string out;
    std::string format = "csv";
};

sot::GridSpec ablation_cell(const AblateArgs& a) {
    sot::GridSpec spec;
    spec.task.k = a.k;
    spec.task.points_per_cluster = a.points_per_cluster;
    spec.task.pca_dim = a.pca_dim;
    spec.task.dim = a.dim;
    spec.task.sigma = a.sigma;
    spec.seeds = a.seeds;
    spec.sot.sinkhorn.lambda = a.lambda;
    spec.sot.sinkhorn.max_sweeps = a.iters;
    spec.kmeans_restarts = a.restarts;
    return spec;
}

int cmd_ablate(const AblateArgs& a, bool iters_kind) {
    const sot::GridSpec cell = ablation_cell(a);
    const std::vector<sot::AblationRow> rows =
        iters_kind ? sot::ablate_sinkhorn_iters(cell, a.iters_list)
                   : sot::ablate_lambda(cell, a.lambdas);
    const std::string param = iters_kind ? "iters" : "lambda";
    std::ostringstream ss;
    if (a.format == "json") ss << sot::ablation_to_json(rows, param).dump(2) << '\n';
    else sot::write_ablation_csv(ss, rows, param, iters_kind);
    write_text(a.out, ss.str());
    return 0;
}

// --- distances ------------------------------------------------------------

struct DistancesArgs {
    std::string features_path;
    std::string labels_path;
    std::size_t pca_dim = 50;
    double lambda = 0.1;
    int iters = 10;
    std::string out;
    std::string format = "csv";
};

int cmd_distances(const DistancesArgs& a) {
    sot::LabeledDataset ds;
    ds.features = sot::read_feature_csv(a.features_path);
    ds.labels = sot::read_labels(a.labels_path);
    if (ds.labels.size() != ds.features.rows()) throw sot::LengthMismatch();
    if (a.pca_dim > 0 && ds.features.cols() > a.pca_dim) ds = sot::pca_reduce(ds, a.pca_dim);
    ds.features = sot::normalize_rows(ds.features);

    sot::SotConfig cfg = sot::bench_sot_config();
    cfg.sinkhorn.lambda = a.lambda;
    cfg.sinkhorn.max_sweeps = a.iters;
    const sot::SeparationReport rep = sot::distance_percentile_analysis(ds, cfg);

    std::ostringstream ss;
    if (a.format == "json") ss << sot::separation_to_json(rep).dump(2) << '\n';
    else sot::write_separation_csv(ss, rep);
    write_text(a.out, ss.str());
    return 0;
}

// --- generate -------------------------------------------------------------

struct GenerateArgs {
    std::size_t dim = 100;
    double sigma = 0.3;
    std::size_t k = 10;
    std::size_t points_per_cluster = 20;
    std::uint64_t seed = 42;
    std::string out = "features.csv";
    std::string labels_out = "labels.csv";
};

int cmd_generate(const GenerateArgs& a) {
    sot::SphereTaskSpec task;
    task.k = a.k;
    task.points_per_cluster = a.points_per_cluster;
    task.dim = a.dim;
    task.sigma = a.sigma;
    task.seed = a.seed;
    const sot::LabeledDataset ds = sot::generate_sphere_dataset(task);

    std::ofstream fout = sot::open_output(a.out);
    sot::write_matrix_csv(fout, ds.features);
    std::ofstream lout = sot::open_output(a.labels_out);
    sot::write_labels(lout, ds.labels);
    return 0;
}

// --- episodes -------------------------------------------------------------

struct EpisodesArgs {
    std::size_t episodes = 200;
    std::size_t n_way = 5;
    std::size_t k_shot = 5;
    std::size_t q_query = 15;
    std::size_t dim = 100;
    double sigma = 0.3;
    std::size_t k = 10;
    std::size_t points_per_cluster = 20;
    std::size_t pca_dim = 50;
    std::uint64_t seed = 42;
    double lambda = 0.1;
    int iters = 10;
    int workers = 1;
    std::string out;
    std::string format = "csv";
};

int cmd_episodes(const EpisodesArgs& a) {
    sot::SphereTaskSpec task;
    task.k = a.k;
    task.points_per_cluster = a.points_per_cluster;
    task.dim = a.dim;
    task.sigma = a.sigma;
    task.seed = a.seed;
    task.pca_dim = a.pca_dim;
    sot::EpisodeSpec ep;
    ep.n_way = a.n_way;
    ep.k_shot = a.k_shot;
    ep.q_query = a.q_query;
    ep.seed = a.seed;
    sot::SotConfig cfg = sot::bench_sot_config();
    cfg.sinkhorn.lambda = a.lambda;
    cfg.sinkhorn.max_sweeps = a.iters;

    const sot::EpisodeBatchResult res =
        sot::run_episode_batch(a.episodes, task, ep, cfg, a.workers);

    std::ostringstream ss;
    if (a.format == "json") ss << sot::episodes_to_json(res).dump(2) << '\n';
    else sot::write_episodes_csv(ss, res);
    write_text(a.out, ss.str());

    std::fprintf(stderr,
                 "episodes=%zu mean_baseline=%.4f mean_sot=%.4f wins=%zu losses=%zu ties=%zu "
                 "sign_test_p=%.3e\n",
                 res.rows.size(), res.mean_baseline, res.mean_sot, res.wins, res.losses,
                 res.ties, res.sign_test_p);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-optimal-transport feature transform and benchmark toolkit"};
    app.require_subcommand(1);
    int rc = 0;

    // transform
    TransformArgs ta;
    CLI::App* t = app.add_subcommand("transform", "re-embed a CSV feature file as its n-by-n SOT matrix");
    t->add_option("--input", ta.input, "feature CSV (no header, one item per line)")->required();
    t->add_option("--output", ta.output, "output CSV path (stdout if omitted)");
    t->add_option("--lambda", ta.lambda, "entropy regularization weight")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    t->add_option("--iters", ta.iters, "Sinkhorn sweeps")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    t->add_flag("--no-symmetrize", ta.no_symmetrize, "skip the (W + W^T)/2 step");
    t->add_flag("--no-unit-diagonal", ta.no_unit_diagonal, "keep the zero diagonal");
    t->add_flag("--max-rescale", ta.max_rescale, "divide by the max entry before the diagonal is set");
    t->add_flag("--linear-domain", ta.linear_domain, "disable log-domain stabilization");
    t->callback([&]() { rc = cmd_transform(ta); });

    // cluster-bench
    BenchArgs ba;
    CLI::App* b = app.add_subcommand("cluster-bench", "k-means accuracy grid: baseline vs SOT features");
    b->add_option("--spec", ba.spec_path, "grid spec JSON file");
    b->add_option("--dims", ba.dims, "feature dimensions")->delimiter(',');
    b->add_option("--sigmas", ba.sigmas, "noise standard deviations")->delimiter(',');
    b->add_option("--seeds", ba.seeds, "dataset seeds")->delimiter(',');
    b->add_option("--k", ba.k, "clusters per dataset")->check(CLI::PositiveNumber);
    b->add_option("--points-per-cluster", ba.points_per_cluster, "points per cluster")
        ->check(CLI::PositiveNumber);
    b->add_option("--pca-dim", ba.pca_dim, "PCA target (applied when dim exceeds it; 0 = off)");
    b->add_option("--lambda", ba.lambda, "entropy regularization weight")->check(CLI::PositiveNumber);
    b->add_option("--iters", ba.iters, "Sinkhorn sweeps")->check(CLI::PositiveNumber);
    b->add_option("--restarts", ba.restarts, "k-means restarts")->check(CLI::PositiveNumber);
    b->add_flag("--no-max-rescale", ba.no_max_rescale, "disable the max-entry rescale in the SOT arm");
    b->add_option("--methods", ba.methods, "subset of {baseline, sot}")->delimiter(',');
    b->add_option("--workers", ba.workers, "worker threads")->check(CLI::PositiveNumber);
    b->add_flag("--timings", ba.timings, "record wallclock_ms (off: column is 0 for reproducible files)");
    b->add_option("--out-csv", ba.out_csv, "CSV output path (empty to skip)")->capture_default_str();
    b->add_option("--out-json", ba.out_json, "JSON output path (empty to skip)")->capture_default_str();
    b->callback([&]() { rc = cmd_cluster_bench(b, ba); });

    // ablate-iters / ablate-lambda
    AblateArgs aa;
    CLI::App* ai = app.add_subcommand("ablate-iters", "sweep-count ablation on one grid cell");
    CLI::App* al = app.add_subcommand("ablate-lambda", "lambda ablation on one grid cell");
    for (CLI::App* sub : {ai, al}) {
        sub->add_option("--dim", aa.dim, "feature dimension")->check(CLI::PositiveNumber);
        sub->add_option("--sigma", aa.sigma, "noise standard deviation")->check(CLI::NonNegativeNumber);
        sub->add_option("--k", aa.k, "clusters per dataset")->check(CLI::PositiveNumber);
        sub->add_option("--points-per-cluster", aa.points_per_cluster, "points per cluster")
            ->check(CLI::PositiveNumber);
        sub->add_option("--pca-dim", aa.pca_dim, "PCA target (0 = off)");
        sub->add_option("--seeds", aa.seeds, "dataset seeds to average over")->delimiter(',');
        sub->add_option("--restarts", aa.restarts, "k-means restarts")->check(CLI::PositiveNumber);
        sub->add_option("--out", aa.out, "output path (stdout if omitted)");
        sub->add_option("--format", aa.format, "csv|json")
            ->check(CLI::IsMember({"csv", "json"}));
    }
    ai->add_option("--lambda", aa.lambda, "fixed lambda while sweeping iters")
        ->check(CLI::PositiveNumber);
    ai->add_option("--iters-list", aa.iters_list, "sweep counts to evaluate")->delimiter(',');
    al->add_option("--iters", aa.iters, "fixed sweeps while sweeping lambda")
        ->check(CLI::PositiveNumber);
    al->add_option("--lambdas", aa.lambdas, "lambda values to evaluate")->delimiter(',');
    ai->callback([&]() { rc = cmd_ablate(aa, true); });
    al->callback([&]() { rc = cmd_ablate(aa, false); });

    // distances
    DistancesArgs da;
    CLI::App* d = app.add_subcommand("distances", "intra/inter-class distance percentiles, before and after SOT");
    d->add_option("--features", da.features_path, "feature CSV")->required();
    d->add_option("--labels", da.labels_path, "label file (one integer per line)")->required();
    d->add_option("--pca-dim", da.pca_dim, "PCA target (0 = off)");
    d->add_option("--lambda", da.lambda, "entropy regularization weight")->check(CLI::PositiveNumber);
    d->add_option("--iters", da.iters, "Sinkhorn sweeps")->check(CLI::PositiveNumber);
    d->add_option("--out", da.out, "output path (stdout if omitted)");
    d->add_option("--format", da.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    d->callback([&]() { rc = cmd_distances(da); });

    // generate
    GenerateArgs ga;
    CLI::App* g = app.add_subcommand("generate", "emit a synthetic sphere-cluster dataset as CSV");
    g->add_option("--dim", ga.dim, "feature dimension")->check(CLI::PositiveNumber);
    g->add_option("--sigma", ga.sigma, "noise standard deviation")->check(CLI::NonNegativeNumber);
    g->add_option("--k", ga.k, "clusters")->check(CLI::PositiveNumber);
    g->add_option("--points-per-cluster", ga.points_per_cluster, "points per cluster")
        ->check(CLI::PositiveNumber);
    g->add_option("--seed", ga.seed, "dataset seed");
    g->add_option("--out", ga.out, "feature CSV path")->capture_default_str();
    g->add_option("--labels-out", ga.labels_out, "label file path")->capture_default_str();
    g->callback([&]() { rc = cmd_generate(ga); });

    // episodes
    EpisodesArgs ea;
    CLI::App* e = app.add_subcommand("episodes", "paired baseline/SOT nearest-prototype episode batch");
    e->add_option("--episodes", ea.episodes, "number of episodes")->check(CLI::PositiveNumber);
    e->add_option("--n-way", ea.n_way, "classes per episode")->check(CLI::PositiveNumber);
    e->add_option("--k-shot", ea.k_shot, "support points per class")->check(CLI::PositiveNumber);
    e->add_option("--q-query", ea.q_query, "query points per class")->check(CLI::PositiveNumber);
    e->add_option("--dim", ea.dim, "feature dimension")->check(CLI::PositiveNumber);
    e->add_option("--sigma", ea.sigma, "noise standard deviation")->check(CLI::NonNegativeNumber);
    e->add_option("--k", ea.k, "classes in each generated dataset")->check(CLI::PositiveNumber);
    e->add_option("--points-per-cluster", ea.points_per_cluster, "points per class")
        ->check(CLI::PositiveNumber);
    e->add_option("--pca-dim", ea.pca_dim, "PCA target (0 = off)");
    e->add_option("--seed", ea.seed, "base seed (episode e uses seed + e)");
    e->add_option("--lambda", ea.lambda, "entropy regularization weight")->check(CLI::PositiveNumber);
    e->add_option("--iters", ea.iters, "Sinkhorn sweeps")->check(CLI::PositiveNumber);
    e->add_option("--workers", ea.workers, "worker threads")->check(CLI::PositiveNumber);
    e->add_option("--out", ea.out, "per-episode CSV path (stdout if omitted)");
    e->add_option("--format", ea.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    e->callback([&]() { rc = cmd_episodes(ea); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& err) {
        return app.exit(err); // --help and friends
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return 2;
    } catch (const sot::ParseError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const sot::InvalidSpec& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const sot::IoError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const sot::LengthMismatch& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const sot::SotError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 3;
    }
    return rc;
}
