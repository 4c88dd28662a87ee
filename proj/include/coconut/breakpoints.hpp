#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "coconut/error.hpp"

namespace coconut {

/// Inverse of the standard normal CDF (Wichura's AS 241, PPND16 variant).
/// Relative accuracy around 1e-15 over (0, 1).
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("inverse_normal_cdf: p must lie in (0, 1)");

    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }

    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double x;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        x = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-9) * r +
                  1.84631831751005468180e-6) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        x = num / den;
    }
    return (q < 0.0) ? -x : x;
}

/// The 2^b - 1 region boundaries of the SAX alphabet: standard-normal
/// quantiles that give every region equal probability mass.
struct Breakpoints {
    std::vector<double> cuts; // strictly increasing, symmetric about 0

    std::size_t region_count() const { return cuts.size() + 1; }
};

inline Breakpoints compute_breakpoints(unsigned bits_per_segment) {
    if (bits_per_segment < 1 || bits_per_segment > 8)
        throw ConfigError("bits_per_segment must be in [1, 8], got " +
                          std::to_string(bits_per_segment));
    const std::size_t regions = std::size_t{1} << bits_per_segment;
    Breakpoints bp;
    bp.cuts.reserve(regions - 1);
    for (std::size_t k = 0; k + 1 < regions; ++k)
        bp.cuts.push_back(inverse_normal_cdf(double(k + 1) / double(regions)));
    return bp;
}

} // namespace coconut
