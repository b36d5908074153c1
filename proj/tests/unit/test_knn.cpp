#include <chrono>
#include <cmath>

#include "doctest.h"

#include "reprbench/errors.hpp"
#include "reprbench/knn.hpp"
#include "reprbench/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace reprbench;

namespace {

RealMatrix mat(std::size_t r, std::size_t c, std::vector<double> v) { return RealMatrix(r, c, std::move(v)); }

RealMatrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
    RealMatrix m(r, c);
    for (double& v : m.flat()) v = 2.0 * rng.uniform01() - 1.0;
    return m;
}

}  // namespace

TEST_CASE("k=1 with a query equal to a training vector returns its label") {
    const auto train = mat(3, 2, {1, 0, 0, 1, -1, -1});
    const std::vector<int> y{2, 0, 1};
    const auto q = mat(3, 2, {1, 0, 0, 1, -1, -1});
    for (auto sim : {Similarity::cosine, Similarity::negative_euclidean}) {
        KnnConfig cfg{1, 0.07, sim, true};
        CHECK(knn_predict(train, y, 3, q, cfg).predicted == y);
    }
}

TEST_CASE("two-point example votes by exp(sim / T)") {
    const auto train = mat(2, 2, {1, 0, 0, 1});
    const std::vector<int> y{0, 1};
    const auto q = mat(1, 2, {1, 0});
    KnnConfig cfg{2, 0.07, Similarity::cosine, true};
    const auto pred = knn_predict(train, y, 2, q, cfg);
    CHECK(pred.predicted[0] == 0);
    // Unscaled votes: e^{1/0.07} for A and e^0 for B.
    const double scale = std::exp(pred.log_scale[0]);
    CHECK(pred.class_weights(0, 0) * scale == doctest::Approx(std::exp(1.0 / 0.07)).epsilon(1e-12));
    CHECK(pred.class_weights(0, 1) * scale == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("neighbours of one class win regardless of temperature") {
    const auto train = mat(4, 2, {1, 0.1, 1, -0.1, -1, 0, -1, 0.2});
    const std::vector<int> y{1, 1, 0, 0};
    const auto q = mat(1, 2, {2, 0});
    for (double t : {1e-3, 0.07, 1.0, 100.0}) {
        KnnConfig cfg{2, t, Similarity::cosine, true};
        CHECK(knn_predict(train, y, 2, q, cfg).predicted[0] == 1);
    }
}

TEST_CASE("exact vote ties go to the first class") {
    const auto train = mat(2, 2, {1, 0, 0, 1});
    const std::vector<int> y{1, 0};
    const auto q = mat(1, 2, {1, 1});
    KnnConfig cfg{2, 0.07, Similarity::cosine, true};
    CHECK(knn_predict(train, y, 2, q, cfg).predicted[0] == 0);
}

TEST_CASE("matches the brute-force full-sort oracle on random instances") {
    Rng rng(31337);
    const auto start = std::chrono::steady_clock::now();
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(50);
        const std::size_t d = 1 + rng.uniform_index(8);
        const std::size_t c = 2 + rng.uniform_index(4);
        const int k = 1 + static_cast<int>(rng.uniform_index(5));
        const double t = 0.05 + rng.uniform01();
        const bool cosine = trial % 2 == 0;
        auto train = random_matrix(rng, n, d);
        // Duplicate rows exercise the similarity tie order.
        if (n > 3)
            for (std::size_t j = 0; j < d; ++j) train(n - 1, j) = train(0, j);
        std::vector<int> y(n);
        for (int& v : y) v = static_cast<int>(rng.uniform_index(c));
        const auto q = random_matrix(rng, 1 + rng.uniform_index(20), d);
        KnnConfig cfg{k, t, cosine ? Similarity::cosine : Similarity::negative_euclidean, trial % 4 < 2};
        const auto got = knn_predict(train, y, c, q, cfg).predicted;
        const auto want = oracle::knn_full_sort(train, y, c, q, k, t, cosine, cfg.l2_normalize_inputs);
        REQUIRE(got == want);
    }
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
}

TEST_CASE("cosine predictions are invariant to positive rescaling of inputs") {
    Rng rng(5);
    const auto train = random_matrix(rng, 30, 4);
    std::vector<int> y(30);
    for (int& v : y) v = static_cast<int>(rng.uniform_index(3));
    const auto q = random_matrix(rng, 10, 4);
    auto scaled = q;
    for (double& v : scaled.flat()) v *= 7.5;
    KnnConfig cfg{5, 0.1, Similarity::cosine, false};
    CHECK(knn_predict(train, y, 3, q, cfg).predicted == knn_predict(train, y, 3, scaled, cfg).predicted);
}

TEST_CASE("k larger than the training set is clamped") {
    const auto train = mat(3, 1, {1, 2, 3});
    const std::vector<int> y{0, 1, 1};
    KnnConfig cfg{20, 0.07, Similarity::negative_euclidean, false};
    const auto pred = knn_predict(train, y, 2, mat(1, 1, {1}), cfg);
    CHECK(pred.k_used == 3);
    CHECK(pred.k_clamped);
}

TEST_CASE("input errors") {
    const auto train = mat(2, 2, {1, 0, 0, 1});
    const std::vector<int> y{0, 1};
    KnnConfig cfg;
    CHECK_THROWS_AS(knn_predict(train, y, 2, mat(1, 3, {1, 2, 3}), cfg), ValidationError);
    CHECK_THROWS_AS(knn_predict(train, y, 2, RealMatrix(0, 2), cfg), ValidationError);
    CHECK_THROWS_AS(knn_predict(train, std::vector<int>{0, 5}, 2, mat(1, 2, {1, 1}), cfg), ValidationError);
    cfg.k = 0;
    CHECK_THROWS_AS(knn_predict(train, y, 2, mat(1, 2, {1, 1}), cfg), ConfigError);
    CHECK_THROWS_AS(parse_similarity("manhattan"), ConfigError);
}

TEST_CASE("stratified bootstrap keeps per-class sizes") {
    const auto ds = fixture::gaussian(3, 7, 3, 5.0, 1);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); i += 2) rows.push_back(i);
    const auto boot = stratified_bootstrap(ds, rows, 3);
    std::vector<int> want(3, 0), got(3, 0);
    for (auto r : rows) ++want[ds.class_index()[r]];
    for (auto r : boot) ++got[ds.class_index()[r]];
    CHECK(got == want);
    CHECK(boot == stratified_bootstrap(ds, rows, 3));
}

TEST_CASE("frozen evaluation") {
    SUBCASE("single seed has zero std") {
        const auto ds = fixture::gaussian(3, 10, 3, 6.0, 2);
        const auto split = make_splits(ds, 0.2, 0.2, 0);
        const std::vector<std::uint64_t> seeds{4};
        const auto s = knn_frozen_eval(ds, split, KnnConfig{}, seeds);
        CHECK(s.per_seed.size() == 1);
        CHECK(s.std == 0.0);
    }
    SUBCASE("one training sample per class makes every resample identical") {
        const auto ds = fixture::gaussian(2, 4, 2, 6.0, 3);
        SplitAssignment split;
        for (std::size_t i = 0; i < ds.size(); ++i)
            split.assignment[ds.sample_id(i)] = (i == 0 || i == 4) ? SplitTag::train : SplitTag::test;
        const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
        const auto s = knn_frozen_eval(ds, split, KnnConfig{}, seeds);
        for (double v : s.per_seed) CHECK(v == s.per_seed[0]);
        CHECK(s.std == 0.0);
    }
    SUBCASE("well separated 3-class toy set scores at least 0.95") {
        const auto ds = fixture::gaussian(3, 10, 3, 8.0, 4);
        const auto split = make_splits(ds, 0.3, 0.1, 1);
        const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
        const auto s = knn_frozen_eval(ds, split, KnnConfig{}, seeds);
        CHECK(s.mean >= 0.95);

        // Same data through the brute-force oracle with the raw training split.
        const auto train_rows = split.rows(ds, SplitTag::train);
        const auto test_rows = split.rows(ds, SplitTag::test);
        const auto train = gather_rows(ds.embeddings().vectors(), train_rows);
        const auto test = gather_rows(ds.embeddings().vectors(), test_rows);
        std::vector<int> ytr, yte;
        for (auto r : train_rows) ytr.push_back(ds.class_index()[r]);
        for (auto r : test_rows) yte.push_back(ds.class_index()[r]);
        const auto pred = oracle::knn_full_sort(train, ytr, 3, test, 20, 0.07, true, true);
        CHECK(oracle::macro_f1_confusion(pred, yte, 3) >= 0.95);
    }
    SUBCASE("worker count does not change results") {
        const auto ds = fixture::gaussian(3, 20, 4, 1.5, 5);
        const auto split = make_splits(ds, 0.2, 0.1, 2);
        const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6};
        CHECK(knn_frozen_eval(ds, split, KnnConfig{}, seeds, 1) == knn_frozen_eval(ds, split, KnnConfig{}, seeds, 4));
    }
}
