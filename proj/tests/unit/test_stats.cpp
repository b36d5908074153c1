#include <cmath>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "doctest.h"

#include "reprbench/errors.hpp"
#include "reprbench/rng.hpp"
#include "reprbench/stats.hpp"

using namespace reprbench;

namespace {

// Reference sf values of the studentized range (q, groups, df, sf),
// computed with an arbitrary-precision integrator.
struct RangeCase {
    double q;
    int k;
    double df;
    double sf;
};
constexpr RangeCase kRangeCases[] = {
    {1.0, 3, 12, 0.7639818960772521}, {3.0, 3, 12, 0.12703259135574108}, {3.5, 4, 20, 0.09495845054630192},
    {2.0, 2, 8, 0.1950155281000755},  {5.0, 5, 10, 0.03420685804994039}, {0.5, 2, 3, 0.7470600781046619},
    {4.0, 3, 2, 0.18572153742340736}, {3.0, 10, 100, 0.5172544923716913},
};

// Worked Tukey HSD example with three groups of five.
const std::vector<std::vector<double>> kWorked{{24.5, 23.5, 26.4, 27.1, 29.9},
                                               {28.4, 34.2, 29.5, 32.2, 30.1},
                                               {26.1, 28.3, 24.3, 26.2, 27.8}};

ScoreSummary summary(std::vector<double> v) { return aggregate(v); }

// Pooled two-sample t statistic.
double pooled_t(const std::vector<double>& a, const std::vector<double>& b) {
    auto mean = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / double(v.size());
    };
    const double ma = mean(a), mb = mean(b);
    double ss = 0;
    for (double x : a) ss += (x - ma) * (x - ma);
    for (double x : b) ss += (x - mb) * (x - mb);
    const double sp2 = ss / double(a.size() + b.size() - 2);
    return (ma - mb) / std::sqrt(sp2 * (1.0 / double(a.size()) + 1.0 / double(b.size())));
}

}  // namespace

TEST_CASE("distribution functions agree with Boost.Math") {
    Rng rng(1);
    for (int i = 0; i < 300; ++i) {
        const double a = 0.1 + 20 * rng.uniform01();
        const double b = 0.1 + 20 * rng.uniform01();
        const double x = rng.uniform01();
        REQUIRE(incomplete_beta(a, b, x) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-10));

        const double d1 = 1 + rng.uniform_index(10);
        const double d2 = 1 + rng.uniform_index(60);
        const double f = 8 * rng.uniform01();
        const double want_f = boost::math::cdf(boost::math::complement(boost::math::fisher_f(d1, d2), f));
        REQUIRE(std::abs(f_survival(f, d1, d2) - want_f) < 1e-12);

        const double t = 6 * rng.uniform01() - 3;
        const double df = 1 + rng.uniform_index(40);
        const double want_t = 2 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), std::abs(t)));
        REQUIRE(std::abs(t_two_sided_p(t, df) - want_t) < 1e-12);
    }
}

TEST_CASE("studentized range matches reference values") {
    for (const auto& c : kRangeCases) {
        CAPTURE(c.q);
        CAPTURE(c.k);
        CAPTURE(c.df);
        CHECK(std::abs((1.0 - studentized_range_cdf(c.q, c.k, c.df)) - c.sf) < 1e-7);
    }
    CHECK(studentized_range_cdf(0.0, 3, 10) == 0.0);
    CHECK(studentized_range_cdf(50.0, 3, 10) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(studentized_range_cdf(1.0, 1, 10), ValidationError);
}

TEST_CASE("ANOVA hand cases") {
    const auto r = one_way_anova({{1, 2}, {3, 4}});
    CHECK(r.ss_between == 4.0);
    CHECK(r.ss_within == 1.0);
    CHECK(r.f_stat == 8.0);
    CHECK(r.df_between == 1);
    CHECK(r.df_within == 2);
    // With t = sqrt(8) on 2 df, p = 1 - t / sqrt(t^2 + 2).
    CHECK(std::abs(r.p_value - (1.0 - std::sqrt(8.0) / std::sqrt(10.0))) < 1e-12);
    CHECK(std::abs(r.p_value - 0.1056) < 1e-4);

    const auto same = one_way_anova({{1, 2, 3}, {1, 2, 3}});
    CHECK(same.f_stat == 0.0);
    CHECK(same.p_value == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(one_way_anova({{1, 2, 3}}), ValidationError);
    CHECK_THROWS_AS(one_way_anova({{1}, {2, 3}}), ValidationError);
    CHECK_THROWS_WITH_AS(one_way_anova({{1, 1}, {2, 2}}), doctest::Contains("degenerate groups"), ValidationError);

    const auto w = one_way_anova(kWorked);
    CHECK(w.f_stat == doctest::Approx(7.137827822120864).epsilon(1e-12));
    CHECK(w.p_value == doctest::Approx(0.009073317468563075).epsilon(1e-9));
}

TEST_CASE("two-group identities F = t^2 and q = sqrt(2)|t|") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(2 + rng.uniform_index(10)), b(2 + rng.uniform_index(10));
        for (double& x : a) x = rng.normal();
        for (double& x : b) x = rng.normal() + 0.5;
        const double t = pooled_t(a, b);
        const auto anova = one_way_anova({a, b});
        REQUIRE(std::abs(anova.f_stat - t * t) <= 1e-6 * std::max(1.0, t * t));
        const auto tk = tukey_hsd({a, b});
        REQUIRE(std::abs(tk.pairs[0].q_stat - std::sqrt(2.0) * std::abs(t)) <= 1e-3);
        // Both tests collapse to the same two-sided p-value.
        const double df = double(a.size() + b.size() - 2);
        REQUIRE(std::abs(tk.pairs[0].p_adjusted - t_two_sided_p(t, df)) <= 1e-6);
        REQUIRE(std::abs(anova.p_value - t_two_sided_p(t, df)) <= 1e-10);
    }
}

TEST_CASE("Tukey HSD worked example") {
    const auto r = tukey_hsd(kWorked);
    REQUIRE(r.pairs.size() == 3);
    CHECK(std::abs(r.pair(0, 1).p_adjusted - 0.01444833) < 1e-3);
    CHECK(std::abs(r.pair(0, 2).p_adjusted - 0.98031072) < 1e-3);
    CHECK(std::abs(r.pair(1, 2).p_adjusted - 0.02033114) < 1e-3);
    CHECK(r.pair(0, 1).mean_diff == doctest::Approx(-4.6).epsilon(1e-12));
    CHECK(r.pair(0, 2).mean_diff == doctest::Approx(-0.26).epsilon(1e-12));
    CHECK(r.pair(1, 2).mean_diff == doctest::Approx(4.34).epsilon(1e-12));
    CHECK(r.pair(0, 1).significant);
    CHECK_FALSE(r.pair(0, 2).significant);
    CHECK(r.pair(1, 2).significant);
}

TEST_CASE("Tukey HSD basic cases") {
    const auto twins = tukey_hsd({{1, 2, 3}, {1, 2, 3}, {5, 6, 8}});
    CHECK(twins.pair(0, 1).mean_diff == 0.0);
    CHECK(twins.pair(0, 1).q_stat == 0.0);
    CHECK(twins.pair(0, 1).p_adjusted == doctest::Approx(1.0).epsilon(1e-9));

    const auto far = tukey_hsd({{0, 0.01, -0.01}, {10, 10.01, 9.99}, {20, 20.01, 19.99}});
    for (const auto& p : far.pairs) CHECK(p.significant);
}

TEST_CASE("statistics are invariant to observation order") {
    Rng rng(3);
    std::vector<std::vector<double>> g(3, std::vector<double>(6));
    for (auto& v : g)
        for (double& x : v) x = rng.normal();
    const auto a = one_way_anova(g);
    const auto ta = tukey_hsd(g);
    for (auto& v : g) rng.shuffle(std::span<double>(v));
    const auto b = one_way_anova(g);
    const auto tb = tukey_hsd(g);
    CHECK(a.f_stat == doctest::Approx(b.f_stat).epsilon(1e-12));
    for (std::size_t i = 0; i < ta.pairs.size(); ++i)
        CHECK(ta.pairs[i].p_adjusted == doctest::Approx(tb.pairs[i].p_adjusted).epsilon(1e-9));
}

TEST_CASE("significance stars") {
    SUBCASE("a clearly dominant model is starred") {
        const std::vector<ScoreSummary> m{summary({0, 0.01, -0.01}), summary({10, 10.01, 9.99}),
                                          summary({20, 20.01, 19.99})};
        const auto a = annotate_significance(m);
        CHECK(a.starred == std::vector<bool>{false, false, true});
    }
    SUBCASE("identical models get no stars") {
        const std::vector<ScoreSummary> m{summary({1, 2, 3}), summary({1, 2, 3})};
        const auto a = annotate_significance(m);
        CHECK(a.starred == std::vector<bool>{false, false});
        CHECK_FALSE(a.note.empty());
    }
    SUBCASE("a best mean that overlaps the runner-up is not starred") {
        const std::vector<double> best{0.80, 0.82, 0.78, 0.84, 0.76};
        const std::vector<double> runner{0.772, 0.792, 0.752, 0.812, 0.732};
        std::vector<double> weak;
        for (double v : best) weak.push_back(v - 0.3);
        const std::vector<ScoreSummary> m{summary(best), summary(runner), summary(weak)};
        for (auto rule : {StarRule::vs_all, StarRule::vs_runner_up}) {
            const auto a = annotate_significance(m, 0.05, rule);
            REQUIRE(a.tukey.has_value());
            CHECK(a.anova->p_value < 0.05);
            CHECK(std::abs(a.tukey->pair(0, 1).p_adjusted - 0.371595478) < 1e-3);
            CHECK(a.tukey->pair(0, 2).p_adjusted < 1e-6);
            CHECK(a.starred == std::vector<bool>{false, false, false});
        }
    }
    SUBCASE("zero-variance groups give a note and no stars") {
        const std::vector<ScoreSummary> m{summary({0.9, 0.9}), summary({0.5, 0.5})};
        const auto a = annotate_significance(m);
        CHECK(a.starred == std::vector<bool>{false, false});
        CHECK(a.note.find("degenerate") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_star_rule("vs_nobody"), ConfigError);
}
