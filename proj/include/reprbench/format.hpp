#pragma once

#include <string>

namespace reprbench {

// Shortest "%.<digits>g" rendering; "inf", "-inf" and "nan" for non-finite.
std::string format_real(double value, int digits = 12);

// Fixed-point with `decimals` places, rounding half away from zero on the
// decimal value (0.6455 -> "0.646" at 3 places). Ignores binary
// representation error below 1e-9 relative.
std::string format_fixed_half_up(double value, int decimals);

}  // namespace reprbench
