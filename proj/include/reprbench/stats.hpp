#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reprbench/metrics.hpp"

namespace reprbench {

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Upper tail P(F > f) of the F distribution with (d1, d2) degrees of freedom.
double f_survival(double f, double d1, double d2);
double f_cdf(double f, double d1, double d2);

// Two-sided p-value of Student's t with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

/// CDF of the studentized range for `groups` means and `df` error degrees of
/// freedom, by adaptive quadrature of its defining double integral
/// (outer: chi-distributed scale; inner: range of `groups` normals).
/// Absolute error below 1e-7 for groups >= 2, df >= 1.
double studentized_range_cdf(double q, int groups, double df);

struct AnovaResult {
    double f_stat = 0.0;
    int df_between = 0;
    int df_within = 0;
    double p_value = 1.0;
    double ss_between = 0.0;
    double ss_within = 0.0;
};

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

struct TukeyPair {
    std::size_t group_a = 0;
    std::size_t group_b = 0;
    double mean_diff = 0.0;  // mean_a - mean_b
    double q_stat = 0.0;
    double p_adjusted = 1.0;
    bool significant = false;
};

struct TukeyResult {
    std::vector<TukeyPair> pairs;  // (0,1), (0,2), ..., (k-2,k-1)
    double alpha = 0.05;
    double ms_within = 0.0;
    int df_within = 0;

    const TukeyPair& pair(std::size_t a, std::size_t b) const;
};

// Tukey HSD with the Tukey-Kramer standard error for unequal group sizes.
TukeyResult tukey_hsd(const std::vector<std::vector<double>>& groups, double alpha = 0.05);

enum class StarRule { vs_all, vs_runner_up };

std::string_view to_string(StarRule rule);
StarRule parse_star_rule(std::string_view text);

struct SignificanceAnnotation {
    std::vector<bool> starred;  // per model
    std::optional<AnovaResult> anova;
    std::optional<TukeyResult> tukey;
    std::string note;           // why no test ran, when none did
};

/// Stars the model with the strictly best mean when the ANOVA is
/// significant and Tukey separates it from every other model (vs_all) or
/// from the second-best model (vs_runner_up).
SignificanceAnnotation annotate_significance(std::span<const ScoreSummary> models, double alpha = 0.05,
                                             StarRule rule = StarRule::vs_all);

}  // namespace reprbench
