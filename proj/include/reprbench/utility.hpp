#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

#include "reprbench/fewshot.hpp"

namespace reprbench {

// Marker for "no number of baseline labels reaches the target".
inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

struct UtilityPoint {
    double n = 0.0;
    double target = 0.0;
    double needed = 0.0;   // baseline labels per class; kInfinite when unreachable
    double utility = 0.0;  // needed / n - 1; kInfinite when unreachable
};

struct UtilityResult {
    std::vector<UtilityPoint> per_n;
    double aggregate_mean = 0.0;  // over finite utilities; NaN when there are none
    std::size_t finite_count = 0;
    std::size_t infinite_count = 0;
};

// Running maximum of the point means over ascending n.
EfficiencyCurve monotone_envelope(const EfficiencyCurve& curve);

// Smallest real n* whose envelope score reaches `target`, interpolating
// linearly in log(n). Targets below the first point clamp to the first grid
// value; targets above the envelope maximum return kInfinite.
double labels_to_match(const EfficiencyCurve& baseline, double target);

UtilityResult utility_score(const EfficiencyCurve& model, const EfficiencyCurve& baseline);

// CSV `n,target,needed,utility`, `inf` for unreachable entries.
void write_utility_csv(const UtilityResult& result, std::ostream& out);

}  // namespace reprbench
