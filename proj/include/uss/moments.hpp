#pragma once

// Small statistics kernel shared by the simulator and the report layer:
// sample moments, the normalized selection-count statistic, and the
// Kolmogorov-Smirnov distance to the standard normal.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace uss::stats {

struct Moments4 {
    double mean = 0.0;
    double variance = 0.0;          // sample variance (n-1 denominator)
    double skewness = 0.0;          // central-moment ratio m3 / m2^{3/2}
    double excess_kurtosis = 0.0;   // m4 / m2^2 - 3
};

inline Moments4 moments4(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("moments4: empty sample");
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double dlt = x - mean;
        const double d2 = dlt * dlt;
        m2 += d2;
        m3 += d2 * dlt;
        m4 += d2 * d2;
    }
    Moments4 out;
    out.mean = mean;
    out.variance = (xs.size() > 1) ? m2 / (n - 1.0) : 0.0;
    m2 /= n; m3 /= n; m4 /= n;
    if (m2 > 0.0) {
        out.skewness = m3 / std::pow(m2, 1.5);
        out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return out;
}

// Normalized selection count: sqrt(3) (U - sqrt(2(d+1)n)) / (2(d+1)n)^{1/4}.
inline double clt_transform(double u, int n, int d) {
    if (n < 1 || d < 0) throw std::invalid_argument("clt_transform: bad n or d");
    const double cn = 2.0 * (d + 1) * n;
    return std::sqrt(3.0) * (u - std::sqrt(cn)) / std::pow(cn, 0.25);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// One-sample KS distance of the empirical distribution to N(0,1).
inline double ks_distance_normal(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("ks_distance_normal: empty sample");
    std::vector<double> z(xs.begin(), xs.end());
    std::sort(z.begin(), z.end());
    const double n = static_cast<double>(z.size());
    double dist = 0.0;
    for (std::size_t r = 0; r < z.size(); ++r) {
        const double c = normal_cdf(z[r]);
        dist = std::max(dist, (r + 1) / n - c);
        dist = std::max(dist, c - r / n);
    }
    return dist;
}

} // namespace uss::stats
