#include "reprbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "reprbench/errors.hpp"
#include "reprbench/quadrature.hpp"

namespace reprbench {

namespace {

constexpr int kMaxContinuedFractionTerms = 1000;
constexpr double kContinuedFractionEps = 1e-16;
constexpr double kTiny = 1e-300;

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxContinuedFractionTerms; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kContinuedFractionEps) return h;
    }
    throw NumericalError("incomplete beta: continued fraction did not converge");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// P(range of `groups` iid standard normals <= w).
double normal_range_cdf(double w, int groups) {
    if (w <= 0.0) return 0.0;
    const auto integrand = [&](double z) {
        const double inside = normal_cdf(z) - normal_cdf(z - w);
        return normal_pdf(z) * std::pow(std::max(inside, 0.0), groups - 1);
    };
    constexpr double kSpan = 9.0;  // normal_pdf(9) ~ 1e-18
    const double mid = 0.5 * w;
    double total = 0.0;
    if (mid < kSpan) {
        total = integrate(integrand, -kSpan, mid, 1e-12) + integrate(integrand, mid, kSpan, 1e-12);
    } else {
        total = integrate(integrand, -kSpan, kSpan, 1e-12);
    }
    return std::clamp(groups * total, 0.0, 1.0);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

void check_groups(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw ValidationError("ANOVA needs at least 2 groups");
    for (const auto& g : groups) {
        if (g.size() < 2) throw ValidationError("ANOVA needs at least 2 values per group");
        for (double v : g)
            if (!std::isfinite(v)) throw ValidationError("ANOVA: non-finite observation");
    }
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete beta: parameters must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_survival(double f, double d1, double d2) {
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw ValidationError("F distribution: degrees of freedom must be positive");
    if (!(f > 0.0)) return 1.0;
    if (std::isinf(f)) return 0.0;
    return incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

double f_cdf(double f, double d1, double d2) { return 1.0 - f_survival(f, d1, d2); }

double t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw ValidationError("t distribution: df must be positive");
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

double studentized_range_cdf(double q, int groups, double df) {
    if (groups < 2) throw ValidationError("studentized range: need at least 2 groups");
    if (!(df > 0.0)) throw ValidationError("studentized range: df must be positive");
    if (!(q > 0.0)) return 0.0;
    if (std::isinf(q)) return 1.0;
    if (df > 1e5) return normal_range_cdf(q, groups);

    // Density of s = sqrt(chi2_df / df).
    const double half = 0.5 * df;
    const double log_norm = std::log(2.0) + half * std::log(half) - std::lgamma(half);
    const auto density = [&](double s) {
        if (s <= 0.0) return 0.0;
        return std::exp(log_norm + (df - 1.0) * std::log(s) - half * s * s);
    };
    const auto integrand = [&](double s) {
        const double g = density(s);
        return g == 0.0 ? 0.0 : g * normal_range_cdf(q * s, groups);
    };
    // chi2_df lies within df +/- 12 sd (+60) with probability > 1 - 1e-15.
    const double spread = 12.0 * std::sqrt(2.0 * df);
    const double lo = std::sqrt(std::max(0.0, df - spread) / df);
    const double hi = std::sqrt((df + spread + 60.0) / df);
    const double mode = std::clamp(std::sqrt(std::max(df - 1.0, 0.0) / df), lo, hi);
    const double total = integrate(integrand, lo, mode, 1e-10) + integrate(integrand, mode, hi, 1e-10);
    return std::clamp(total, 0.0, 1.0);
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
    check_groups(groups);
    std::size_t total = 0;
    double grand = 0.0;
    for (const auto& g : groups) {
        total += g.size();
        for (double v : g) grand += v;
    }
    grand /= static_cast<double>(total);

    AnovaResult r;
    for (const auto& g : groups) {
        const double m = mean_of(g);
        r.ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        for (double v : g) r.ss_within += (v - m) * (v - m);
    }
    r.df_between = static_cast<int>(groups.size()) - 1;
    r.df_within = static_cast<int>(total - groups.size());
    if (!(r.ss_within > 0.0)) throw ValidationError("degenerate groups: zero within-group variance");
    r.f_stat = (r.ss_between / r.df_between) / (r.ss_within / r.df_within);
    r.p_value = f_survival(r.f_stat, r.df_between, r.df_within);
    return r;
}

const TukeyPair& TukeyResult::pair(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    for (const auto& p : pairs)
        if (p.group_a == a && p.group_b == b) return p;
    throw ValidationError("Tukey: no such pair");
}

TukeyResult tukey_hsd(const std::vector<std::vector<double>>& groups, double alpha) {
    const auto anova = one_way_anova(groups);
    TukeyResult result;
    result.alpha = alpha;
    result.df_within = anova.df_within;
    result.ms_within = anova.ss_within / anova.df_within;
    const int k = static_cast<int>(groups.size());
    for (std::size_t a = 0; a < groups.size(); ++a) {
        for (std::size_t b = a + 1; b < groups.size(); ++b) {
            TukeyPair p;
            p.group_a = a;
            p.group_b = b;
            p.mean_diff = mean_of(groups[a]) - mean_of(groups[b]);
            const double se = std::sqrt(result.ms_within / 2.0 *
                                        (1.0 / static_cast<double>(groups[a].size()) +
                                         1.0 / static_cast<double>(groups[b].size())));
            p.q_stat = std::abs(p.mean_diff) / se;
            p.p_adjusted = std::clamp(1.0 - studentized_range_cdf(p.q_stat, k, anova.df_within), 0.0, 1.0);
            p.significant = p.p_adjusted < alpha;
            result.pairs.push_back(p);
        }
    }
    return result;
}

std::string_view to_string(StarRule rule) { return rule == StarRule::vs_all ? "vs_all" : "vs_runner_up"; }

StarRule parse_star_rule(std::string_view text) {
    if (text == "vs_all") return StarRule::vs_all;
    if (text == "vs_runner_up") return StarRule::vs_runner_up;
    throw ConfigError("unknown star rule '" + std::string(text) + "'");
}

SignificanceAnnotation annotate_significance(std::span<const ScoreSummary> models, double alpha, StarRule rule) {
    if (models.size() < 2) throw ValidationError("significance annotation needs at least 2 models");
    for (const auto& m : models)
        if (m.per_seed.size() != models.front().per_seed.size())
            throw ValidationError("significance annotation: models have different seed counts");

    SignificanceAnnotation out;
    out.starred.assign(models.size(), false);

    std::vector<std::size_t> order(models.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return models[a].mean > models[b].mean; });
    const std::size_t best = order[0];
    if (models[order[1]].mean == models[best].mean) {
        out.note = "no unique best mean";
        return out;
    }

    std::vector<std::vector<double>> groups;
    for (const auto& m : models) groups.push_back(m.per_seed);
    try {
        out.anova = one_way_anova(groups);
    } catch (const ValidationError& e) {
        out.note = e.what();
        return out;
    }
    out.tukey = tukey_hsd(groups, alpha);
    if (!(out.anova->p_value < alpha)) {
        out.note = "ANOVA not significant";
        return out;
    }
    bool separated = true;
    if (rule == StarRule::vs_all) {
        for (std::size_t other = 0; other < models.size(); ++other)
            if (other != best && !out.tukey->pair(best, other).significant) separated = false;
    } else {
        separated = out.tukey->pair(best, order[1]).significant;
    }
    out.starred[best] = separated;
    return out;
}

}  // namespace reprbench
