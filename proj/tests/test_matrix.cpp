#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sot/matrix.hpp"
#include "sot/rng.hpp"

using namespace sot;

namespace {

FeatureMatrix random_features(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    FeatureMatrix m(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.gaussian();
    return m;
}

} // namespace

TEST_CASE("normalize_rows produces unit rows", "[matrix]") {
    const FeatureMatrix m = random_features(12, 7, 1);
    const FeatureMatrix unit = normalize_rows(m);
    for (std::size_t i = 0; i < unit.rows(); ++i)
        REQUIRE(row_norm(unit, i) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("normalize_rows rejects a zero row", "[matrix]") {
    FeatureMatrix m(3, 4);
    m(0, 0) = 1.0;
    m(2, 1) = 2.0; // row 1 left all-zero
    REQUIRE_THROWS_AS(normalize_rows(m), ZeroNormRow);
    try {
        normalize_rows(m);
        FAIL("expected ZeroNormRow");
    } catch (const ZeroNormRow& e) {
        REQUIRE(e.row() == 1);
    }
}

TEST_CASE("cosine similarity of orthonormal rows is the identity", "[matrix]") {
    FeatureMatrix m(3, 3);
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    m(2, 2) = 1.0;
    const SimilarityMatrix sim = cosine_similarity(m);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            REQUIRE(sim.s(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("cosine similarity diagonal is exactly one", "[matrix]") {
    const FeatureMatrix unit = normalize_rows(random_features(9, 5, 2));
    const SimilarityMatrix sim = cosine_similarity(unit);
    for (std::size_t i = 0; i < unit.rows(); ++i) REQUIRE(sim.s(i, i) == 1.0);
}

TEST_CASE("cosine similarity is bitwise symmetric", "[matrix]") {
    const FeatureMatrix unit = normalize_rows(random_features(15, 6, 3));
    const SimilarityMatrix sim = cosine_similarity(unit);
    for (std::size_t i = 0; i < unit.rows(); ++i)
        for (std::size_t j = 0; j < unit.rows(); ++j)
            REQUIRE(sim.s(i, j) == sim.s(j, i)); // exact: single computation per pair
}

TEST_CASE("cosine similarity requires unit rows", "[matrix]") {
    FeatureMatrix m(2, 2);
    m(0, 0) = 2.0;
    m(1, 1) = 1.0;
    REQUIRE_THROWS_AS(cosine_similarity(m), NotNormalized);
}

TEST_CASE("squared distances match the norm difference directly", "[matrix]") {
    const FeatureMatrix unit = normalize_rows(random_features(20, 8, 4));
    const DistanceMatrix dist = pairwise_sq_distances(cosine_similarity(unit));
    for (std::size_t i = 0; i < unit.rows(); ++i)
        for (std::size_t j = 0; j < unit.rows(); ++j) {
            double direct = 0.0;
            for (std::size_t c = 0; c < unit.cols(); ++c) {
                const double diff = unit(i, c) - unit(j, c);
                direct += diff * diff;
            }
            REQUIRE(std::abs(dist.d(i, j) - direct) < 1e-10);
        }
}

TEST_CASE("identical rows give zero distance, not negative round-off", "[matrix]") {
    FeatureMatrix m(2, 3);
    for (std::size_t j = 0; j < 3; ++j) {
        m(0, j) = 0.3 + 0.1 * static_cast<double>(j);
        m(1, j) = m(0, j);
    }
    const DistanceMatrix dist = pairwise_sq_distances(cosine_similarity(normalize_rows(m)));
    REQUIRE(dist.d(0, 1) >= 0.0);
    REQUIRE(dist.d(0, 1) < 1e-15);
}

TEST_CASE("antipodal unit vectors are at squared distance four", "[matrix]") {
    FeatureMatrix m(2, 2);
    m(0, 0) = 1.0;
    m(1, 0) = -1.0;
    const DistanceMatrix dist = pairwise_sq_distances(cosine_similarity(m));
    REQUIRE(dist.d(0, 1) == Catch::Approx(4.0).margin(1e-15));
}

TEST_CASE("mask_diagonal sets the flag once", "[matrix]") {
    const FeatureMatrix unit = normalize_rows(random_features(4, 3, 5));
    const DistanceMatrix dist = pairwise_sq_distances(cosine_similarity(unit));
    REQUIRE_FALSE(dist.masked);
    const DistanceMatrix masked = mask_diagonal(dist);
    REQUIRE(masked.masked);
    REQUIRE(masked.d.max_abs_diff(dist.d) == 0.0); // metadata-only
    REQUIRE_THROWS_AS(mask_diagonal(masked), AlreadyMasked);
}

TEST_CASE("is_permutation accepts bijections only", "[matrix]") {
    REQUIRE(is_permutation({2, 0, 1}, 3));
    REQUIRE_FALSE(is_permutation({0, 0, 1}, 3));
    REQUIRE_FALSE(is_permutation({0, 1}, 3));
    REQUIRE_FALSE(is_permutation({0, 1, 3}, 3));
}

TEST_CASE("permute_rows identity and involution", "[matrix]") {
    const FeatureMatrix m = random_features(5, 4, 6);
    const FeatureMatrix same = permute_rows(m, {0, 1, 2, 3, 4});
    REQUIRE(same.max_abs_diff(m) == 0.0);

    const std::vector<std::size_t> swap01 = {1, 0, 2, 3, 4};
    const FeatureMatrix twice = permute_rows(permute_rows(m, swap01), swap01);
    REQUIRE(twice.max_abs_diff(m) == 0.0);
}

TEST_CASE("permute_rows reversal", "[matrix]") {
    const FeatureMatrix m = random_features(3, 2, 7);
    const FeatureMatrix rev = permute_rows(m, {2, 1, 0});
    for (std::size_t j = 0; j < 2; ++j) {
        REQUIRE(rev(0, j) == m(2, j));
        REQUIRE(rev(1, j) == m(1, j));
        REQUIRE(rev(2, j) == m(0, j));
    }
}

TEST_CASE("permute_rows rejects non-permutations", "[matrix]") {
    const FeatureMatrix m = random_features(3, 2, 8);
    REQUIRE_THROWS_AS(permute_rows(m, {0, 0, 1}), InvalidPermutation);
}

TEST_CASE("distance computation commutes with row permutation", "[matrix]") {
    const FeatureMatrix unit = normalize_rows(random_features(10, 6, 9));
    const std::vector<std::size_t> perm = {3, 1, 4, 0, 9, 5, 8, 2, 7, 6};
    const DistanceMatrix direct = pairwise_sq_distances(cosine_similarity(permute_rows(unit, perm)));
    const DistanceMatrix base = pairwise_sq_distances(cosine_similarity(unit));
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j)
            REQUIRE(direct.d(i, j) == base.d(perm[i], perm[j]));
}
