#pragma once

#include <functional>

namespace reprbench {

// Adaptive Gauss-Kronrod (7/15) on [a, b]. Intervals are bisected until
// the Kronrod/Gauss difference on each is below its share of `abs_tol`, or
// `max_depth` bisections have happened along that branch.
double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 int max_depth = 20);

}  // namespace reprbench
