#include "reprbench/format.hpp"

#include <cmath>
#include <cstdio>

namespace reprbench {

std::string format_real(double value, int digits) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, value);
    return buf;
}

std::string format_fixed_half_up(double value, int decimals) {
    if (!std::isfinite(value)) return format_real(value);
    const double scale = std::pow(10.0, decimals);
    const double magnitude = std::abs(value) * scale;
    // The tolerance absorbs binary representation error (0.6455 is stored as
    // 0.645499999...).
    const double rounded = std::floor(magnitude + 0.5 + 1e-9 * std::max(1.0, magnitude));
    const double signed_value = (value < 0 && rounded != 0.0 ? -rounded : rounded) / scale;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, signed_value);
    return buf;
}

}  // namespace reprbench
