#pragma once

// Report layer: asymptotic bound checks for the solved value, Monte Carlo
// consistency summaries, prophet ratios, and the soft conjecture
// diagnostics (variance/mean near 1/3, normality of the normalized count).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "uss/moments.hpp"
#include "uss/rng.hpp"
#include "uss/simulate.hpp"

namespace uss::stats {

inline constexpr double default_c_slack = 5.0;

// Mean of the optimal selected length is strictly below sqrt(2(d+1)n).
inline double upper_bound_value(int n, int d) {
    return std::sqrt(2.0 * (d + 1) * n);
}

// ... and above the same minus (2(d+1))^{3/4} (pi/3)^{1/2} n^{1/4}, up to a
// bounded term absorbed into the configurable slack constant.
inline double lower_bound_value(int n, int d, double c_slack = default_c_slack) {
    return upper_bound_value(n, d) -
           std::pow(2.0 * (d + 1), 0.75) * std::sqrt(std::numbers::pi / 3.0) *
               std::pow(static_cast<double>(n), 0.25) -
           c_slack;
}

// Standard error used when comparing sample variance against sample mean:
// se(var) for a normal-ish sample plus se(mean), combined in quadrature.
inline double combined_stderr(const simulate::BatchSummary& s) {
    const double se_var =
        (s.reps > 1) ? s.sample_variance * std::sqrt(2.0 / (s.reps - 1)) : 0.0;
    return std::sqrt(s.stderr_mean * s.stderr_mean + se_var * se_var);
}

struct BoundReport {
    int n = 0;
    int d = 0;
    double solver_value = 0.0;
    double upper_bound = 0.0;
    double lower_bound = 0.0;
    double mc_mean = 0.0;
    double mc_variance = 0.0;
    double mc_stderr = 0.0;
    double var_over_mean = 0.0;
    double prophet_ratio = 0.0;
    double offline_mean = 0.0;
    Moments4 clt_moments;
    std::vector<std::string> violations;

    bool passed() const { return violations.empty(); }
};

inline BoundReport bound_report(const bellman::ValueTable& vt,
                                const simulate::BatchSummary& online, double offline_mean,
                                double c_slack = default_c_slack) {
    if (!(vt.spec == online.spec))
        throw std::invalid_argument("bound_report: value table and batch specs differ");

    BoundReport r;
    r.n = vt.spec.n;
    r.d = vt.spec.d;
    r.solver_value = bellman::value_at(vt, 1, 0.0, 0);
    r.upper_bound = upper_bound_value(r.n, r.d);
    r.lower_bound = lower_bound_value(r.n, r.d, c_slack);
    r.mc_mean = online.sample_mean;
    r.mc_variance = online.sample_variance;
    r.mc_stderr = online.stderr_mean;
    r.var_over_mean = (r.mc_mean > 0.0) ? r.mc_variance / r.mc_mean : 0.0;
    r.offline_mean = offline_mean;
    r.prophet_ratio = (r.mc_mean > 0.0) ? offline_mean / r.mc_mean : 0.0;
    r.clt_moments = online.clt_moments;

    if (!(r.solver_value < r.upper_bound))
        r.violations.push_back("solver value not below the strict upper bound");
    if (!(r.solver_value > r.lower_bound))
        r.violations.push_back("solver value not above the slack lower bound");
    if (online.sample_variance > online.sample_mean + 3.0 * combined_stderr(online))
        r.violations.push_back("sample variance exceeds sample mean beyond sampling error");
    return r;
}

struct CltReport {
    std::vector<double> values;
    Moments4 moments;
    double ks_distance = 0.0;
};

inline CltReport clt_statistic(std::span<const double> lengths, int n, int d) {
    if (lengths.empty()) throw std::invalid_argument("clt_statistic: empty input");
    CltReport r;
    r.values.resize(lengths.size());
    for (std::size_t i = 0; i < lengths.size(); ++i)
        r.values[i] = clt_transform(lengths[i], n, d);
    r.moments = moments4(r.values);
    r.ks_distance = ks_distance_normal(r.values);
    return r;
}

struct ConjectureReport {
    double var_over_mean = 0.0;
    double ci_low = 0.0;                 // bootstrap percentile interval
    double ci_high = 0.0;
    bool consistent_with_one_third = false;  // CI intersects [0.30, 0.37]
    bool var_le_mean = false;                // variance <= mean within 3 combined se
    std::optional<bool> d0_lower_check;      // d=0 only: Var > E/3 - 2 within noise
};

inline ConjectureReport conjecture_report(const simulate::BatchSummary& online,
                                          std::uint64_t bootstrap_seed = 20120704,
                                          int resamples = 1000) {
    if (online.reps < 1000)
        throw std::invalid_argument("conjecture_report: needs at least 1000 reps");

    ConjectureReport r;
    r.var_over_mean =
        (online.sample_mean > 0.0) ? online.sample_variance / online.sample_mean : 0.0;

    const auto& xs = online.lengths;
    rng::SplitMix64 gen(bootstrap_seed);
    std::vector<double> ratios(resamples);
    std::vector<double> draw(xs.size());
    for (int b = 0; b < resamples; ++b) {
        for (auto& v : draw) v = xs[gen.next_below(xs.size())];
        const auto m = moments4(draw);
        ratios[b] = (m.mean > 0.0) ? m.variance / m.mean : 0.0;
    }
    std::sort(ratios.begin(), ratios.end());
    r.ci_low = ratios[static_cast<std::size_t>(0.025 * (resamples - 1))];
    r.ci_high = ratios[static_cast<std::size_t>(0.975 * (resamples - 1))];
    r.consistent_with_one_third = !(r.ci_high < 0.30 || r.ci_low > 0.37);

    r.var_le_mean =
        online.sample_variance <= online.sample_mean + 3.0 * combined_stderr(online);
    if (online.spec.d == 0) {
        const double se_var =
            online.sample_variance * std::sqrt(2.0 / (online.reps - 1));
        r.d0_lower_check =
            online.sample_variance + 3.0 * se_var > online.sample_mean / 3.0 - 2.0;
    }
    return r;
}

} // namespace uss::stats
