#pragma once

#include <cmath>
#include <numbers>

namespace driftmc {

inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Inverse standard normal CDF (Wichura, AS241 PPND16), relative accuracy ~1e-16.
double norm_inv(double p);

}  // namespace driftmc
