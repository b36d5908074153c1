#include <cmath>
#include <limits>

#include "doctest.h"

#include "reprbench/errors.hpp"
#include "reprbench/knn.hpp"
#include "reprbench/linear_probe.hpp"
#include "reprbench/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace reprbench;

namespace {

const RealMatrix kNoVal(0, 0);

struct Problem {
    RealMatrix x;
    std::vector<int> y;
    std::size_t classes;
};

Problem random_problem(Rng& rng, std::size_t n, std::size_t d, std::size_t c) {
    Problem p{RealMatrix(n, d), std::vector<int>(n), c};
    for (double& v : p.x.flat()) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i) p.y[i] = static_cast<int>(i < c ? i : rng.uniform_index(c));
    return p;
}

std::vector<std::string> names(std::size_t c) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < c; ++i) out.push_back("k" + std::to_string(i));
    return out;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max(scale, std::max(std::abs(a[i]), std::abs(b[i])));
    }
    return scale == 0.0 ? diff : diff / scale;
}

}  // namespace

TEST_CASE("zero weights give uniform probabilities") {
    ProbeModel model;
    model.class_list = names(4);
    model.class_trained.assign(4, true);
    model.weights = RealMatrix(4, 3);
    model.biases.assign(4, 0.0);
    Rng rng(1);
    RealMatrix x(5, 3);
    for (double& v : x.flat()) v = rng.normal() * 10;
    const auto pred = probe_predict(model, x);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t c = 0; c < 4; ++c) CHECK(pred.probabilities(i, c) == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(pred.predicted[i] == 0);
    }
    CHECK_THROWS_AS(probe_predict(model, RealMatrix(1, 2)), ValidationError);
}

TEST_CASE("1-D separable data is fit perfectly") {
    const RealMatrix x(4, 1, {-1.0, -1.2, 1.0, 1.1});
    const std::vector<int> y{0, 0, 1, 1};
    ProbeConfig cfg;
    const auto model = train_probe(x, y, kNoVal, {}, names(2), cfg, 0);
    CHECK(probe_predict(model, x).predicted == y);
}

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(20);
        const std::size_t d = 1 + rng.uniform_index(8);
        const std::size_t c = 2 + rng.uniform_index(4);
        const auto p = random_problem(rng, n, d, c);
        const double l2 = trial % 3 == 0 ? 0.0 : rng.uniform01();
        const SoftmaxObjective obj(p.x, p.y, p.classes, l2);
        std::vector<double> params(obj.num_params());
        for (double& v : params) v = rng.normal();
        std::vector<double> grad(params.size());
        const double f = obj.value_and_gradient(params, grad);
        CHECK(f == doctest::Approx(oracle::softmax_loss(params, p.x, p.y, p.classes, l2)).epsilon(1e-12));
        const auto fd = oracle::finite_difference_gradient(
            [&](const std::vector<double>& w) { return oracle::softmax_loss(w, p.x, p.y, p.classes, l2); }, params,
            1e-5);
        REQUIRE(max_relative_error(grad, fd) < 1e-5);
    }
}

TEST_CASE("probability rows sum to one") {
    Rng rng(4);
    const auto p = random_problem(rng, 40, 5, 3);
    const auto model = train_probe(p.x, p.y, kNoVal, {}, names(3), ProbeConfig{}, 1);
    const auto pred = probe_predict(model, p.x);
    for (std::size_t i = 0; i < p.x.rows(); ++i) {
        double s = 0.0;
        for (double v : pred.probabilities.row(i)) s += v;
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("a common shift of the biases does not change probabilities") {
    Rng rng(6);
    const auto p = random_problem(rng, 30, 3, 3);
    auto model = train_probe(p.x, p.y, kNoVal, {}, names(3), ProbeConfig{}, 2);
    const auto before = probe_predict(model, p.x);
    for (double& b : model.biases) b += 5.0;
    const auto after = probe_predict(model, p.x);
    CHECK(before.predicted == after.predicted);
    for (std::size_t i = 0; i < before.probabilities.flat().size(); ++i)
        CHECK(before.probabilities.flat()[i] == doctest::Approx(after.probabilities.flat()[i]).epsilon(1e-12));
}

TEST_CASE("accepted steps never increase the regularized loss") {
    Rng rng(8);
    for (auto mode : {OptimizerMode::lbfgs, OptimizerMode::gradient_descent}) {
        for (int trial = 0; trial < 20; ++trial) {
            const auto p = random_problem(rng, 5 + rng.uniform_index(30), 1 + rng.uniform_index(6), 3);
            const SoftmaxObjective obj(p.x, p.y, p.classes, 1e-3);
            ProbeConfig cfg;
            cfg.mode = mode;
            cfg.max_epochs = 200;
            const std::vector<double> start(obj.num_params(), 0.0);
            const auto res = minimize(obj, start, cfg, kNoVal, {});
            double prev = obj.value(start);
            for (double f : res.trace.train_loss) {
                REQUIRE(f <= prev);
                prev = f;
            }
        }
    }
}

TEST_CASE("both optimizer modes reach the same optimum") {
    Rng rng(12);
    const auto p = random_problem(rng, 40, 4, 3);
    const SoftmaxObjective obj(p.x, p.y, 3, 1e-2);
    ProbeConfig lb, gd;
    lb.max_epochs = 2000;
    gd.mode = OptimizerMode::gradient_descent;
    gd.max_epochs = 20000;
    gd.learning_rate = 1.0;
    const std::vector<double> start(obj.num_params(), 0.0);
    const auto a = minimize(obj, start, lb, kNoVal, {});
    const auto b = minimize(obj, start, gd, kNoVal, {});
    CHECK(std::abs(obj.value(a.params) - obj.value(b.params)) < 1e-3);
    std::vector<double> g(obj.num_params());
    obj.value_and_gradient(a.params, g);
    for (double v : g) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("early stopping restores the best validation parameters") {
    Rng rng(21);
    const auto p = random_problem(rng, 30, 6, 3);
    const auto v = random_problem(rng, 30, 6, 3);
    const SoftmaxObjective obj(p.x, p.y, 3, 0.0);
    ProbeConfig cfg;
    cfg.patience = 5;
    const auto res = minimize(obj, std::vector<double>(obj.num_params(), 0.0), cfg, v.x, v.y);
    REQUIRE(!res.trace.val_loss.empty());
    const double best = *std::min_element(res.trace.val_loss.begin(), res.trace.val_loss.end());
    CHECK(obj.cross_entropy(res.params, v.x, v.y) <= best + 1e-12);
    CHECK(res.trace.stop_reason == "early_stopping");
}

TEST_CASE("training is deterministic per seed") {
    const auto ds = fixture::gaussian(3, 15, 4, 1.0, 3);
    const auto split = make_splits(ds, 0.2, 0.2, 3);
    const std::vector<std::uint64_t> seeds{0, 1, 2};
    const auto a = linear_frozen_eval(ds, split, ProbeConfig{}, seeds);
    CHECK(a == linear_frozen_eval(ds, split, ProbeConfig{}, seeds));
    CHECK(a == linear_frozen_eval(ds, split, ProbeConfig{}, seeds, 3));
}

TEST_CASE("separable 3-class toy set") {
    const auto ds = fixture::gaussian(3, 10, 3, 8.0, 4);
    const auto split = make_splits(ds, 0.3, 0.1, 1);
    const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    const auto lin = linear_frozen_eval(ds, split, ProbeConfig{}, seeds);
    const auto knn = knn_frozen_eval(ds, split, KnnConfig{}, seeds);
    CHECK(lin.mean >= 0.95);
    CHECK(knn.mean >= 0.95);
}

TEST_CASE("a huge penalty collapses to the bias-only majority classifier") {
    Rng rng(17);
    const std::size_t n = 100;
    RealMatrix x(n, 3);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = i < 50 ? 1 : (i < 80 ? 0 : 2);
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal() + (j == static_cast<std::size_t>(y[i]) ? 2.0 : 0.0);
    }
    ProbeConfig cfg;
    cfg.l2_penalty = 1e6;
    const RealMatrix val = x;
    const auto model = train_probe(x, y, val, y, names(3), cfg, 0);
    const int majority = oracle::majority_class(y, 3);
    for (int p : probe_predict(model, x).predicted) REQUIRE(p == majority);
    // Bias-only fit: probabilities match the class frequencies.
    const auto probs = probe_predict(model, x).probabilities;
    CHECK(probs(0, 1) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(probs(0, 0) == doctest::Approx(0.3).epsilon(1e-3));
}

TEST_CASE("a class missing from training is never predicted") {
    Rng rng(3);
    const auto p = random_problem(rng, 20, 3, 2);
    const auto model = train_probe(p.x, p.y, kNoVal, {}, names(3), ProbeConfig{}, 0);
    CHECK_FALSE(model.class_trained[2]);
    RealMatrix q(50, 3);
    for (double& v : q.flat()) v = rng.normal() * 100;
    const auto pred = probe_predict(model, q);
    for (std::size_t i = 0; i < q.rows(); ++i) {
        CHECK(pred.predicted[i] != 2);
        CHECK(pred.probabilities(i, 2) == 0.0);
    }
}

TEST_CASE("non-finite features raise a numerical error naming the epoch") {
    RealMatrix x(4, 2, {1, 0, std::numeric_limits<double>::infinity(), 0, 0, 1, 0, -1});
    const std::vector<int> y{0, 0, 1, 1};
    ProbeConfig cfg;
    cfg.standardize = false;
    CHECK_THROWS_WITH_AS(train_probe(x, y, kNoVal, {}, names(2), cfg, 0), doctest::Contains("epoch"), NumericalError);
}

TEST_CASE("configuration and shape errors") {
    ProbeConfig cfg;
    cfg.l2_penalty = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(parse_optimizer_mode("adam"), ConfigError);
    const RealMatrix x(2, 1, {0, 1});
    CHECK_THROWS_AS(train_probe(x, std::vector<int>{0, 0}, kNoVal, {}, names(2), ProbeConfig{}, 0), ValidationError);
}

TEST_CASE("probe export has one row per class and D+1 columns") {
    Rng rng(2);
    const auto p = random_problem(rng, 20, 4, 3);
    const auto model = train_probe(p.x, p.y, kNoVal, {}, names(3), ProbeConfig{}, 0);
    const auto set = probe_to_embeddings(model, "task", 7);
    CHECK(set.size() == 3);
    CHECK(set.dim() == 5);
    CHECK(set.sample_ids() == names(3));
    CHECK(set.source_tag() == "probe:task:7");
    CHECK(set.vectors()(1, 4) == static_cast<float>(model.biases[1]));
}
