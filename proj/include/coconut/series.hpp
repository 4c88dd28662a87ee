#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "coconut/error.hpp"

namespace coconut {

/// One fixed-length sequence of real values. Raw files store 32-bit floats;
/// all arithmetic happens in doubles.
struct DataSeries {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool operator==(const DataSeries&) const = default;
};

inline double series_mean(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Population standard deviation (divide by n).
inline double series_stddev(std::span<const double> v) {
    double mean = series_mean(v);
    double s = 0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

/// Subtract the mean and divide by the (population) standard deviation.
/// A zero-variance input maps to the all-zeros series.
inline DataSeries z_normalize(std::span<const double> raw) {
    if (raw.size() < 2)
        throw ConfigError("z_normalize requires at least 2 points, got " +
                          std::to_string(raw.size()));
    double mean = series_mean(raw);
    double sd = series_stddev(raw);
    DataSeries out;
    out.values.resize(raw.size());
    if (sd == 0.0) return out; // degenerate constant series
    for (std::size_t i = 0; i < raw.size(); ++i) out.values[i] = (raw[i] - mean) / sd;
    return out;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ConfigError("euclidean_distance: length mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double euclidean_distance(const DataSeries& a, const DataSeries& b) {
    return euclidean_distance(std::span<const double>(a.values),
                              std::span<const double>(b.values));
}

/// Squared distance with early abandoning: returns something >= limit_sq as
/// soon as the partial sum exceeds it. Exact when the true value is below.
inline double squared_distance_abandon(std::span<const double> a, std::span<const double> b,
                                       double limit_sq) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
        if (s >= limit_sq) return s;
    }
    return s;
}

} // namespace coconut
