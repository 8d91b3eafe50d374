#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "sot/matrix.hpp"
#include "sot/rng.hpp"
#include "sot/synthgen.hpp"

using namespace sot;

TEST_CASE("generated shape and label blocks", "[synthgen]") {
    SphereTaskSpec spec;
    spec.k = 4;
    spec.points_per_cluster = 6;
    spec.dim = 12;
    const LabeledDataset ds = generate_sphere_dataset(spec);
    REQUIRE(ds.features.rows() == 24);
    REQUIRE(ds.features.cols() == 12);
    REQUIRE(ds.labels.size() == 24);
    for (std::size_t i = 0; i < 24; ++i) REQUIRE(ds.labels[i] == static_cast<int>(i / 6));
}

TEST_CASE("every generated row is a unit vector", "[synthgen]") {
    SphereTaskSpec spec;
    spec.sigma = 0.75;
    spec.dim = 40;
    const LabeledDataset ds = generate_sphere_dataset(spec);
    for (std::size_t i = 0; i < ds.features.rows(); ++i)
        REQUIRE(std::abs(row_norm(ds.features, i) - 1.0) < 1e-12);
}

TEST_CASE("sigma zero collapses each cluster onto its center", "[synthgen]") {
    SphereTaskSpec spec;
    spec.sigma = 0.0;
    spec.k = 5;
    spec.points_per_cluster = 3;
    spec.dim = 8;
    const LabeledDataset ds = generate_sphere_dataset(spec);
    for (std::size_t c = 0; c < 5; ++c) {
        const std::size_t base = c * 3;
        for (std::size_t p = 1; p < 3; ++p)
            for (std::size_t j = 0; j < 8; ++j)
                REQUIRE(ds.features(base + p, j) == ds.features(base, j));
    }
    // centers of distinct clusters differ
    bool distinct = false;
    for (std::size_t j = 0; j < 8; ++j) distinct |= (ds.features(0, j) != ds.features(3, j));
    REQUIRE(distinct);
}

TEST_CASE("generation is bitwise deterministic per seed", "[synthgen]") {
    SphereTaskSpec spec; // defaults: k=10, 20 per cluster, d=100, sigma=0.3
    const LabeledDataset a = generate_sphere_dataset(spec);
    const LabeledDataset b = generate_sphere_dataset(spec);
    REQUIRE(a.features.max_abs_diff(b.features) == 0.0);
    REQUIRE(a.labels == b.labels);

    spec.seed = 43;
    const LabeledDataset c = generate_sphere_dataset(spec);
    REQUIRE(c.features.max_abs_diff(a.features) > 0.0);
}

TEST_CASE("invalid generator specs are rejected", "[synthgen]") {
    SphereTaskSpec spec;
    spec.dim = 1;
    REQUIRE_THROWS_AS(generate_sphere_dataset(spec), InvalidSpec);
    spec.dim = 10;
    spec.sigma = -0.1;
    REQUIRE_THROWS_AS(generate_sphere_dataset(spec), InvalidSpec);
    spec.sigma = 0.1;
    spec.k = 0;
    REQUIRE_THROWS_AS(generate_sphere_dataset(spec), InvalidSpec);
}

TEST_CASE("center distribution has no preferred direction", "[synthgen]") {
    // large-sample smoke test in d=3: per-coordinate mean of uniform sphere
    // points is 0 with variance 1/3 per sample
    SphereTaskSpec spec;
    spec.k = 2000;
    spec.points_per_cluster = 1;
    spec.dim = 3;
    spec.sigma = 0.0;
    const LabeledDataset ds = generate_sphere_dataset(spec);
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 2000; ++i) mean += ds.features(i, j);
        mean /= 2000.0;
        const double se = std::sqrt(1.0 / 3.0 / 2000.0);
        REQUIRE(std::abs(mean) < 3.0 * se);
    }
}

TEST_CASE("pca projects planar data losslessly to 2 dimensions", "[synthgen]") {
    // points in the plane spanned by two fixed directions in d=7
    Rng rng(5);
    LabeledDataset ds{FeatureMatrix(30, 7), std::vector<int>(30, 0)};
    std::vector<double> u(7), v(7);
    for (std::size_t j = 0; j < 7; ++j) {
        u[j] = rng.gaussian();
        v[j] = rng.gaussian();
    }
    for (std::size_t i = 0; i < 30; ++i) {
        const double a = rng.gaussian(), b = rng.gaussian();
        for (std::size_t j = 0; j < 7; ++j) ds.features(i, j) = a * u[j] + b * v[j];
    }

    const LabeledDataset flat = pca_reduce(ds, 2);
    REQUIRE(flat.features.cols() == 2);
    // pairwise distances survive a lossless projection
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = i + 1; j < 30; ++j) {
            double orig = 0.0, proj = 0.0;
            for (std::size_t c = 0; c < 7; ++c) {
                const double diff = ds.features(i, c) - ds.features(j, c);
                orig += diff * diff;
            }
            for (std::size_t c = 0; c < 2; ++c) {
                const double diff = flat.features(i, c) - flat.features(j, c);
                proj += diff * diff;
            }
            REQUIRE(proj == Catch::Approx(orig).margin(1e-9));
        }
}

TEST_CASE("pca with target d is distance preserving", "[synthgen]") {
    SphereTaskSpec spec;
    spec.k = 5;
    spec.points_per_cluster = 8;
    spec.dim = 6;
    const LabeledDataset ds = generate_sphere_dataset(spec);
    const LabeledDataset rot = pca_reduce(ds, 6);
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = i + 1; j < 40; ++j) {
            double orig = 0.0, proj = 0.0;
            for (std::size_t c = 0; c < 6; ++c) {
                const double d1 = ds.features(i, c) - ds.features(j, c);
                const double d2 = rot.features(i, c) - rot.features(j, c);
                orig += d1 * d1;
                proj += d2 * d2;
            }
            REQUIRE(proj == Catch::Approx(orig).margin(1e-9));
        }
}

TEST_CASE("retained variance agrees across two eigendecomposition routes", "[synthgen]") {
    // route 1: our n x n Gram eigensolve; route 2: d x d covariance
    // eigensolve through an independent library
    SphereTaskSpec spec;
    spec.k = 10;
    spec.points_per_cluster = 20;
    spec.dim = 100;
    spec.sigma = 0.4;
    const LabeledDataset ds = generate_sphere_dataset(spec);
    const std::size_t n = 200, d = 100, target = 50;

    const PcaResult mine = pca_reduce_with_variance(ds, target);

    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = ds.features(i, j);
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    REQUIRE(eig.info() == Eigen::Success);

    double total = 0.0, kept = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double v = std::max(0.0, eig.eigenvalues()(static_cast<Eigen::Index>(i)));
        total += v;
        if (i >= d - target) kept += v; // Eigen sorts ascending
    }
    REQUIRE(mine.retained_variance == Catch::Approx(kept / total).margin(1e-8));
    REQUIRE(mine.retained_variance > 0.0);
    REQUIRE(mine.retained_variance <= 1.0);
}

TEST_CASE("pca scores reproduce Gram geometry", "[synthgen]") {
    // full-rank scores must reproduce centered inner products
    SphereTaskSpec spec;
    spec.k = 4;
    spec.points_per_cluster = 5;
    spec.dim = 30;
    const LabeledDataset ds = generate_sphere_dataset(spec);
    const LabeledDataset scores = pca_reduce(ds, 20);

    const std::size_t n = 20, d = 30;
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += ds.features(i, j) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double gram = 0.0;
            for (std::size_t c = 0; c < d; ++c)
                gram += (ds.features(i, c) - mean[c]) * (ds.features(j, c) - mean[c]);
            double dot = 0.0;
            for (std::size_t c = 0; c < n; ++c) dot += scores.features(i, c) * scores.features(j, c);
            REQUIRE(dot == Catch::Approx(gram).margin(1e-9));
        }
}

TEST_CASE("pca commutes with row permutation", "[synthgen]") {
    SphereTaskSpec spec;
    spec.k = 5;
    spec.points_per_cluster = 6;
    spec.dim = 20;
    const LabeledDataset ds = generate_sphere_dataset(spec);

    std::vector<std::size_t> perm(30);
    for (std::size_t i = 0; i < 30; ++i) perm[i] = (i * 7) % 30; // 7 coprime to 30
    LabeledDataset shuffled{permute_rows(ds.features, perm), std::vector<int>(30)};
    for (std::size_t i = 0; i < 30; ++i) shuffled.labels[i] = ds.labels[perm[i]];

    const LabeledDataset a = pca_reduce(ds, 10);
    const LabeledDataset b = pca_reduce(shuffled, 10);
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 10; ++j)
            REQUIRE(b.features(i, j) == Catch::Approx(a.features(perm[i], j)).margin(1e-8));
}

TEST_CASE("pca target larger than min(n, d) is rejected", "[synthgen]") {
    SphereTaskSpec spec;
    spec.k = 2;
    spec.points_per_cluster = 5; // n = 10
    spec.dim = 20;
    const LabeledDataset ds = generate_sphere_dataset(spec);
    REQUIRE_THROWS_AS(pca_reduce(ds, 11), TargetTooLarge);
}

TEST_CASE("episodes have the requested shape and disjoint splits", "[synthgen]") {
    const LabeledDataset ds = generate_sphere_dataset({});
    EpisodeSpec ep;
    ep.n_way = 5;
    ep.k_shot = 5;
    ep.q_query = 15;
    const auto [support, query] = sample_episode(ds, ep);
    REQUIRE(support.features.rows() == 25);
    REQUIRE(query.features.rows() == 75);

    std::set<int> support_classes(support.labels.begin(), support.labels.end());
    std::set<int> query_classes(query.labels.begin(), query.labels.end());
    REQUIRE(support_classes.size() == 5);
    REQUIRE(support_classes == query_classes);
}

TEST_CASE("an exhausting episode uses every point of its classes", "[synthgen]") {
    SphereTaskSpec spec;
    spec.k = 6;
    spec.points_per_cluster = 8;
    spec.dim = 10;
    const LabeledDataset ds = generate_sphere_dataset(spec);
    EpisodeSpec ep;
    ep.n_way = 3;
    ep.k_shot = 3;
    ep.q_query = 5; // 3 + 5 = 8 exhausts each class
    const auto [support, query] = sample_episode(ds, ep);
    REQUIRE(support.features.rows() == 9);
    REQUIRE(query.features.rows() == 15);
    for (int cls : std::set<int>(support.labels.begin(), support.labels.end())) {
        const auto count = [&](const std::vector<int>& v) {
            return std::count(v.begin(), v.end(), cls);
        };
        REQUIRE(count(support.labels) + count(query.labels) == 8);
    }
}

TEST_CASE("episode sampling is deterministic and guarded", "[synthgen]") {
    const LabeledDataset ds = generate_sphere_dataset({});
    EpisodeSpec ep;
    ep.n_way = 4;
    ep.k_shot = 2;
    ep.q_query = 3;
    ep.seed = 77;
    const auto [s1, q1] = sample_episode(ds, ep);
    const auto [s2, q2] = sample_episode(ds, ep);
    REQUIRE(s1.features.max_abs_diff(s2.features) == 0.0);
    REQUIRE(q1.features.max_abs_diff(q2.features) == 0.0);
    REQUIRE(s1.labels == s2.labels);

    EpisodeSpec hungry;
    hungry.n_way = 2;
    hungry.k_shot = 10;
    hungry.q_query = 15; // 25 > 20 points per class
    REQUIRE_THROWS_AS(sample_episode(ds, hungry), InsufficientPoints);

    EpisodeSpec wide;
    wide.n_way = 11; // dataset has 10 classes
    REQUIRE_THROWS_AS(sample_episode(ds, wide), InvalidSpec);
}

TEST_CASE("5-way 1-shot 15-query episode from the default dataset", "[synthgen]") {
    const LabeledDataset ds = generate_sphere_dataset({});
    EpisodeSpec ep;
    ep.n_way = 5;
    ep.k_shot = 1;
    ep.q_query = 15;
    const auto [support, query] = sample_episode(ds, ep);
    REQUIRE(support.features.rows() == 5);
    REQUIRE(query.features.rows() == 75);
}
