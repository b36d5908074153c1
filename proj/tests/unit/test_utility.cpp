#include <cmath>
#include <sstream>

#include "doctest.h"

#include "reprbench/errors.hpp"
#include "reprbench/utility.hpp"

using namespace reprbench;

namespace {

EfficiencyCurve curve(std::vector<std::pair<std::size_t, double>> pts, std::string task = "t") {
    EfficiencyCurve c;
    c.task = std::move(task);
    c.test_fingerprint = "fp";
    for (auto [n, m] : pts) {
        CurvePoint p;
        p.n_per_class = n;
        p.mean = m;
        c.points.push_back(p);
    }
    return c;
}

std::vector<double> means(const EfficiencyCurve& c) {
    std::vector<double> out;
    for (const auto& p : c.points) out.push_back(p.mean);
    return out;
}

// Sigmoid in log n; the baseline is the same curve stretched 3x in n.
double sigmoid_curve(double n) { return 0.25 + 0.7 / (1.0 + std::exp(-(std::log(n) - 2.5))); }

}  // namespace

TEST_CASE("monotone envelope") {
    CHECK(means(monotone_envelope(curve({{1, 0.5}, {2, 0.4}, {5, 0.6}}))) == std::vector<double>{0.5, 0.5, 0.6});
    CHECK(means(monotone_envelope(curve({{1, 0.3}, {2, 0.4}, {5, 0.6}}))) == std::vector<double>{0.3, 0.4, 0.6});
    CHECK(means(monotone_envelope(curve({{1, 0.4}, {2, 0.4}}))) == std::vector<double>{0.4, 0.4});
}

TEST_CASE("labels_to_match") {
    const auto base = curve({{10, 0.7}, {30, 0.8}});
    CHECK(labels_to_match(base, 0.8) == 30.0);
    CHECK(labels_to_match(base, 0.7) == 10.0);
    CHECK(labels_to_match(base, 0.5) == 10.0);
    CHECK(labels_to_match(base, 0.9) == kInfinite);
    // Halfway in score is the geometric mean in n.
    CHECK(labels_to_match(base, 0.75) == doctest::Approx(std::sqrt(300.0)).epsilon(1e-12));
    // Dips are ignored through the envelope.
    CHECK(labels_to_match(curve({{1, 0.6}, {2, 0.5}, {4, 0.7}}), 0.6) == 1.0);
}

TEST_CASE("hand-computed utility") {
    const auto r = utility_score(curve({{10, 0.8}}), curve({{10, 0.7}, {30, 0.8}}));
    REQUIRE(r.per_n.size() == 1);
    CHECK(r.per_n[0].needed == 30.0);
    CHECK(r.per_n[0].utility == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(r.aggregate_mean == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("unreachable targets are INFINITE and excluded from the mean") {
    const auto r = utility_score(curve({{10, 0.75}, {30, 0.9}}), curve({{10, 0.7}, {30, 0.8}}));
    CHECK(std::isfinite(r.per_n[0].utility));
    CHECK(r.per_n[1].utility == kInfinite);
    CHECK(r.finite_count == 1);
    CHECK(r.infinite_count == 1);
    CHECK(r.aggregate_mean == r.per_n[0].utility);

    const auto all_inf = utility_score(curve({{10, 0.95}}), curve({{10, 0.7}, {30, 0.8}}));
    CHECK(std::isnan(all_inf.aggregate_mean));
}

TEST_CASE("identical strictly increasing curves give exactly zero") {
    const auto c = curve({{1, 0.31}, {2, 0.4}, {5, 0.52}, {10, 0.6}, {20, 0.66}, {50, 0.7}});
    const auto r = utility_score(c, c);
    for (const auto& u : r.per_n) CHECK(u.utility == 0.0);
    CHECK(r.aggregate_mean == 0.0);
}

TEST_CASE("a 3x horizontal shift gives utility 2") {
    const std::vector<std::size_t> grid{1, 2, 5, 10, 20, 50, 100, 200, 500};
    std::vector<std::pair<std::size_t, double>> model_pts, base_pts;
    for (auto n : grid) {
        model_pts.emplace_back(n, sigmoid_curve(static_cast<double>(n)));
        base_pts.emplace_back(n, sigmoid_curve(static_cast<double>(n) / 3.0));
    }
    const auto r = utility_score(curve(model_pts), curve(base_pts));
    CHECK(r.finite_count >= 5);
    CHECK(std::abs(r.aggregate_mean - 2.0) <= 0.02 * 2.0);

    // Log-linear curves interpolate without error.
    model_pts.clear();
    base_pts.clear();
    for (auto n : grid) {
        model_pts.emplace_back(n, 0.1 * std::log(static_cast<double>(n)));
        base_pts.emplace_back(n, 0.1 * std::log(static_cast<double>(n) / 3.0));
    }
    const auto exact = utility_score(curve(model_pts), curve(base_pts));
    for (const auto& u : exact.per_n)
        if (std::isfinite(u.utility)) CHECK(u.utility == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("utility grows as the model curve rises") {
    const auto base = curve({{1, 0.3}, {2, 0.4}, {5, 0.5}, {10, 0.6}, {20, 0.7}});
    double prev = -1.0;
    for (double lift : {0.0, 0.02, 0.05, 0.08, 0.1}) {
        const auto r = utility_score(curve({{2, 0.4 + lift}}), base);
        CHECK(r.per_n[0].utility >= prev);
        prev = r.per_n[0].utility;
    }
}

TEST_CASE("curves from different tasks or test splits are rejected") {
    CHECK_THROWS_AS(utility_score(curve({{1, 0.5}}, "a"), curve({{1, 0.5}}, "b")), ValidationError);
    auto other = curve({{1, 0.5}});
    other.test_fingerprint = "other";
    CHECK_THROWS_AS(utility_score(curve({{1, 0.5}}), other), ValidationError);
}

TEST_CASE("utility CSV writes inf for unreachable entries") {
    const auto r = utility_score(curve({{10, 0.9}}), curve({{10, 0.7}, {30, 0.8}}));
    std::ostringstream out;
    write_utility_csv(r, out);
    CHECK(out.str() == "n,target,needed,utility\n10,0.9,inf,inf\n");
}
