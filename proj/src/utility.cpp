#include "reprbench/utility.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "reprbench/errors.hpp"
#include "reprbench/format.hpp"

namespace reprbench {

EfficiencyCurve monotone_envelope(const EfficiencyCurve& curve) {
    EfficiencyCurve out = curve;
    for (std::size_t i = 1; i < out.points.size(); ++i)
        out.points[i].mean = std::max(out.points[i].mean, out.points[i - 1].mean);
    return out;
}

double labels_to_match(const EfficiencyCurve& baseline, double target) {
    if (!std::isfinite(target)) throw ValidationError("labels_to_match: target must be finite");
    if (baseline.points.empty()) throw ValidationError("labels_to_match: empty baseline curve");
    const auto envelope = monotone_envelope(baseline);
    const auto& pts = envelope.points;
    if (target <= pts.front().mean) return static_cast<double>(pts.front().n_per_class);
    for (std::size_t j = 1; j < pts.size(); ++j) {
        if (pts[j].mean < target) continue;
        const double lo = pts[j - 1].mean;
        const double hi = pts[j].mean;
        const double t = (target - lo) / (hi - lo);  // hi > lo since lo < target <= hi
        const double log_lo = std::log(static_cast<double>(pts[j - 1].n_per_class));
        const double log_hi = std::log(static_cast<double>(pts[j].n_per_class));
        if (t >= 1.0) return static_cast<double>(pts[j].n_per_class);
        return std::exp(log_lo + t * (log_hi - log_lo));
    }
    return kInfinite;
}

UtilityResult utility_score(const EfficiencyCurve& model, const EfficiencyCurve& baseline) {
    if (model.task != baseline.task || model.test_fingerprint != baseline.test_fingerprint) {
        throw ValidationError("utility: curves come from different tasks ('" + model.task + "' vs '" +
                              baseline.task + "') or test splits");
    }
    UtilityResult result;
    double sum = 0.0;
    for (const auto& p : model.points) {
        UtilityPoint u;
        u.n = static_cast<double>(p.n_per_class);
        u.target = p.mean;
        u.needed = labels_to_match(baseline, p.mean);
        if (std::isinf(u.needed)) {
            u.utility = kInfinite;
            ++result.infinite_count;
        } else {
            u.utility = u.needed / u.n - 1.0;
            sum += u.utility;
            ++result.finite_count;
        }
        result.per_n.push_back(u);
    }
    result.aggregate_mean = result.finite_count ? sum / static_cast<double>(result.finite_count)
                                                : std::numeric_limits<double>::quiet_NaN();
    return result;
}

void write_utility_csv(const UtilityResult& result, std::ostream& out) {
    out << "n,target,needed,utility\n";
    for (const auto& u : result.per_n) {
        out << format_real(u.n) << ',' << format_real(u.target) << ',' << format_real(u.needed) << ','
            << format_real(u.utility) << '\n';
    }
}

}  // namespace reprbench
