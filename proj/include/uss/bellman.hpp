#pragma once

// Backward-induction solver for sequential selection of d-modal subsequences
// from an i.i.d. Uniform[0,1] stream.
//
// State: (i, s, k) with i the next observation index, s the last selected
// value, k the current block index (blocks alternate direction, block 0
// increasing, at most d turns). The value function satisfies, for an
// increasing block (k even),
//
//   v_i(s,k) = int_0^s max{v_{i+1}(s,k), 1 + v_{i+1}(x,k+1)} dx
//            + int_s^1 max{v_{i+1}(s,k), 1 + v_{i+1}(x,k)} dx,
//
// with the turn branch removed when k = d, and the mirror image for odd k.
// v_{n+1} is identically 0; the terminal row v_n follows automatically.
//
// The state space is discretized on a uniform grid s_j = j/(m-1) with
// piecewise-linear interpolation in between. Each integrand is a max of a
// constant and a monotone piecewise-linear function, so it switches branch
// at a single crossing point; the crossing is bracketed by binary search
// over grid nodes and then located by bisection to tol_x. Integrals are
// exact trapezoid sums of the interpolant via precomputed prefix arrays,
// giving O(n (d+1) m log m) total cost.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uss::bellman {

// Bisection tolerance for interval endpoints, in x.
inline constexpr double tol_x = 1e-9;
// Value-comparison tolerance; indifference ties widen the acceptance interval.
inline constexpr double tol_v = 1e-12;

struct ProblemSpec {
    int n = 1;          // horizon, number of observations
    int d = 0;          // turn budget: d+1 monotone blocks, block 0 increasing
    int m = 1001;       // grid points on [0,1], endpoints included

    void validate() const {
        if (n < 1) throw std::invalid_argument("ProblemSpec: n must be >= 1");
        if (d < 0) throw std::invalid_argument("ProblemSpec: d must be >= 0");
        if (m < 2) throw std::invalid_argument("ProblemSpec: m must be >= 2");
    }
    double h() const { return 1.0 / (m - 1); }
    double s(int j) const { return static_cast<double>(j) / (m - 1); }

    bool operator==(const ProblemSpec&) const = default;
};

// v_n(s,k): 1 while a turn remains; in the final block only one side of s
// is selectable, leaving probability 1-s (increasing) or s (decreasing).
inline double terminal_values(const ProblemSpec& spec, double s, int k) {
    spec.validate();
    if (k < 0 || k > spec.d) throw std::domain_error("terminal_values: block index out of range");
    if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("terminal_values: s outside [0,1]");
    if (k < spec.d) return 1.0;
    return (spec.d % 2 == 0) ? 1.0 - s : s;
}

namespace detail {

// Piecewise-linear interpolation of a grid row at s in [0,1].
inline double interp(std::span<const double> row, int m, double s) {
    const double u = s * (m - 1);
    int j = static_cast<int>(u);
    if (j > m - 2) j = m - 2;
    if (j < 0) j = 0;
    const double t = u - j;
    return row[j] + (row[j + 1] - row[j]) * t;
}

inline double cell_value(std::span<const double> row, int j, double s0, double h, double x) {
    return row[j] + (row[j + 1] - row[j]) * ((x - s0) / h);
}

// Prefix trapezoid integrals: out[j] = int_0^{s_j} row.
inline void prefix_trapezoid(std::span<const double> row, int m, double h,
                             std::span<double> out) {
    out[0] = 0.0;
    for (int j = 1; j < m; ++j)
        out[j] = out[j - 1] + 0.5 * (row[j - 1] + row[j]) * h;
}

// int_0^x row, for x anywhere in [0,1].
inline double integral_to(std::span<const double> row, std::span<const double> prefix,
                          int m, double h, double x) {
    int j = static_cast<int>(x * (m - 1));
    if (j > m - 2) j = m - 2;
    if (j < 0) j = 0;
    const double s0 = static_cast<double>(j) * h;
    const double wx = cell_value(row, j, s0, h, x);
    return prefix[j] + 0.5 * (x - s0) * (row[j] + wx);
}

// Crossing of a non-decreasing row with level t on node range [j_lo, j_hi]:
// returns inf{x : row(x) >= t}. Preconditions: row[j_lo] < t <= row[j_hi].
inline double bisect_rise(std::span<const double> row, double h, int j_lo, int j_hi,
                          double t) {
    int lo = j_lo, hi = j_hi;             // invariant: row[lo] < t <= row[hi]
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        if (row[mid] >= t) hi = mid; else lo = mid;
    }
    const double s0 = static_cast<double>(lo) * h;
    double xlo = s0, xhi = s0 + h;
    while (xhi - xlo > tol_x) {
        const double xm = 0.5 * (xlo + xhi);
        if (cell_value(row, lo, s0, h, xm) >= t) xhi = xm; else xlo = xm;
    }
    return 0.5 * (xlo + xhi);
}

// Crossing of a non-increasing row with level t on node range [j_lo, j_hi]:
// returns sup{x : row(x) >= t}. Preconditions: row[j_lo] >= t > row[j_hi].
inline double bisect_fall(std::span<const double> row, double h, int j_lo, int j_hi,
                          double t) {
    int lo = j_lo, hi = j_hi;             // invariant: row[lo] >= t > row[hi]
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        if (row[mid] >= t) lo = mid; else hi = mid;
    }
    const double s0 = static_cast<double>(lo) * h;
    double xlo = s0, xhi = s0 + h;
    while (xhi - xlo > tol_x) {
        const double xm = 0.5 * (xlo + xhi);
        if (cell_value(row, lo, s0, h, xm) >= t) xlo = xm; else xhi = xm;
    }
    return 0.5 * (xlo + xhi);
}

// One-sided acceptance geometry shared by the solver and the threshold
// extraction. For the region below s (node j): candidate row w must be
// non-decreasing; accepting x yields 1 + w(x), rejecting keeps c.
struct SidePieces {
    double endpoint;   // interval endpoint on this side
    bool full;         // whole side accepts
    bool empty;        // whole side rejects
};

inline SidePieces lower_side(std::span<const double> w, int m, double h, int j,
                             double c, double tie) {
    (void)m;
    if (j == 0) return {0.0, false, true};                  // zero-length side
    const double t = c - 1.0 - tie;
    if (w[j] < t) return {static_cast<double>(j) * h, false, true};
    if (w[0] >= t) return {0.0, true, false};
    return {bisect_rise(w, h, 0, j, t), false, false};
}

inline SidePieces upper_side(std::span<const double> w, int m, double h, int j,
                             double c, double tie) {
    if (j == m - 1) return {1.0, false, true};              // zero-length side
    const double t = c - 1.0 - tie;
    if (w[j] < t) return {static_cast<double>(j) * h, false, true};
    if (w[m - 1] >= t) return {1.0, true, false};
    return {bisect_fall(w, h, j, m - 1, t), false, false};
}

} // namespace detail

struct ValueTable {
    ProblemSpec spec;
    // Row-major over (i, k): index ((i-1)*(d+1)+k)*m + j, i in 1..n+1.
    std::vector<double> values;

    std::span<const double> row(int i, int k) const {
        return {values.data() + row_offset(i, k), static_cast<std::size_t>(spec.m)};
    }
    std::span<double> row(int i, int k) {
        return {values.data() + row_offset(i, k), static_cast<std::size_t>(spec.m)};
    }
    double at(int i, int k, int j) const { return values[row_offset(i, k) + j]; }

    bool solved() const {
        return values.size() ==
               static_cast<std::size_t>(spec.n + 1) * (spec.d + 1) * spec.m;
    }

  private:
    std::size_t row_offset(int i, int k) const {
        if (i < 1 || i > spec.n + 1) throw std::domain_error("ValueTable: time index out of range");
        if (k < 0 || k > spec.d) throw std::domain_error("ValueTable: block index out of range");
        return (static_cast<std::size_t>(i - 1) * (spec.d + 1) + k) * spec.m;
    }
};

struct ThresholdTable {
    ProblemSpec spec;
    // Same layout as ValueTable but i in 1..n only.
    std::vector<double> a;
    std::vector<double> b;

    std::span<const double> row_a(int i, int k) const {
        return {a.data() + row_offset(i, k), static_cast<std::size_t>(spec.m)};
    }
    std::span<const double> row_b(int i, int k) const {
        return {b.data() + row_offset(i, k), static_cast<std::size_t>(spec.m)};
    }

    std::size_t row_offset(int i, int k) const {
        if (i < 1 || i > spec.n) throw std::domain_error("ThresholdTable: time index out of range");
        if (k < 0 || k > spec.d) throw std::domain_error("ThresholdTable: block index out of range");
        return (static_cast<std::size_t>(i - 1) * (spec.d + 1) + k) * spec.m;
    }
};

inline ValueTable solve_value_table(const ProblemSpec& spec) {
    spec.validate();
    const int n = spec.n, d = spec.d, m = spec.m;
    const double h = spec.h();

    ValueTable vt;
    vt.spec = spec;
    vt.values.assign(static_cast<std::size_t>(n + 1) * (d + 1) * m, 0.0);

    std::vector<double> prefix(static_cast<std::size_t>(d + 1) * m);
    auto prefix_row = [&](int k) {
        return std::span<double>{prefix.data() + static_cast<std::size_t>(k) * m,
                                 static_cast<std::size_t>(m)};
    };

    for (int i = n; i >= 1; --i) {
        for (int k = 0; k <= d; ++k)
            detail::prefix_trapezoid(vt.row(i + 1, k), m, h, prefix_row(k));

        for (int k = 0; k <= d; ++k) {
            const bool even = (k % 2 == 0);
            const auto w_same = vt.row(i + 1, k);
            const auto p_same = prefix_row(k);
            auto out = vt.row(i, k);

            for (int j = 0; j < m; ++j) {
                const double s = spec.s(j);
                const double c = w_same[j];
                double below, above;

                if (even) {
                    // Above s: continue the increasing block. 1 + w(s) > c,
                    // so the side is never empty.
                    {
                        const auto side = detail::upper_side(w_same, m, h, j, c, 0.0);
                        if (side.empty) {
                            above = c * (1.0 - s);
                        } else if (side.full) {
                            above = (1.0 - s) + (p_same[m - 1] - p_same[j]);
                        } else {
                            const double xb = side.endpoint;
                            above = (xb - s) +
                                    (detail::integral_to(w_same, p_same, m, h, xb) - p_same[j]) +
                                    c * (1.0 - xb);
                        }
                    }
                    // Below s: turn into block k+1, unavailable at k = d.
                    if (k == d) {
                        below = c * s;
                    } else {
                        const auto w_turn = vt.row(i + 1, k + 1);
                        const auto p_turn = prefix_row(k + 1);
                        const auto side = detail::lower_side(w_turn, m, h, j, c, 0.0);
                        if (side.empty) {
                            below = c * s;
                        } else if (side.full) {
                            below = s + p_turn[j];
                        } else {
                            const double xa = side.endpoint;
                            below = c * xa + (s - xa) +
                                    (p_turn[j] - detail::integral_to(w_turn, p_turn, m, h, xa));
                        }
                    }
                } else {
                    // Below s: continue the decreasing block; never empty.
                    {
                        const auto side = detail::lower_side(w_same, m, h, j, c, 0.0);
                        if (side.empty) {
                            below = c * s;
                        } else if (side.full) {
                            below = s + p_same[j];
                        } else {
                            const double xa = side.endpoint;
                            below = c * xa + (s - xa) +
                                    (p_same[j] - detail::integral_to(w_same, p_same, m, h, xa));
                        }
                    }
                    // Above s: turn into block k+1, unavailable at k = d.
                    if (k == d) {
                        above = c * (1.0 - s);
                    } else {
                        const auto w_turn = vt.row(i + 1, k + 1);
                        const auto p_turn = prefix_row(k + 1);
                        const auto side = detail::upper_side(w_turn, m, h, j, c, 0.0);
                        if (side.empty) {
                            above = c * (1.0 - s);
                        } else if (side.full) {
                            above = (1.0 - s) + (p_turn[m - 1] - p_turn[j]);
                        } else {
                            const double xb = side.endpoint;
                            above = (xb - s) +
                                    (detail::integral_to(w_turn, p_turn, m, h, xb) - p_turn[j]) +
                                    c * (1.0 - xb);
                        }
                    }
                }
                out[j] = below + above;
            }
        }
    }
    return vt;
}

inline double value_at(const ValueTable& vt, int i, double s, int k) {
    if (!vt.solved()) throw std::logic_error("value_at: table not solved");
    if (i < 1 || i > vt.spec.n + 1) throw std::domain_error("value_at: time index out of range");
    if (k < 0 || k > vt.spec.d) throw std::domain_error("value_at: block index out of range");
    if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("value_at: s outside [0,1]");
    return detail::interp(vt.row(i, k), vt.spec.m, s);
}

// Acceptance-interval endpoints. a(i,s,k) is the infimum x below s at which
// accepting is no worse than rejecting, b(i,s,k) the supremum above; sides
// where no acceptance is possible collapse onto s. Ties within tol_v widen
// the interval, matching the inf/sup definitions.
inline ThresholdTable compute_thresholds(const ValueTable& vt) {
    if (!vt.solved()) throw std::logic_error("compute_thresholds: table not solved");
    const ProblemSpec spec = vt.spec;
    const int n = spec.n, d = spec.d, m = spec.m;
    const double h = spec.h();

    ThresholdTable tt;
    tt.spec = spec;
    tt.a.assign(static_cast<std::size_t>(n) * (d + 1) * m, 0.0);
    tt.b.assign(static_cast<std::size_t>(n) * (d + 1) * m, 0.0);

    for (int i = 1; i <= n; ++i) {
        for (int k = 0; k <= d; ++k) {
            const bool even = (k % 2 == 0);
            const auto w_same = vt.row(i + 1, k);
            double* ra = tt.a.data() + tt.row_offset(i, k);
            double* rb = tt.b.data() + tt.row_offset(i, k);

            for (int j = 0; j < m; ++j) {
                const double s = spec.s(j);
                const double c = w_same[j];

                if (even) {
                    const auto up = detail::upper_side(w_same, m, h, j, c, tol_v);
                    rb[j] = up.empty ? s : up.endpoint;
                    if (k == d) {
                        ra[j] = s;
                    } else {
                        const auto lo = detail::lower_side(vt.row(i + 1, k + 1), m, h, j, c, tol_v);
                        ra[j] = lo.empty ? s : lo.endpoint;
                    }
                } else {
                    const auto lo = detail::lower_side(w_same, m, h, j, c, tol_v);
                    ra[j] = lo.empty ? s : lo.endpoint;
                    if (k == d) {
                        rb[j] = s;
                    } else {
                        const auto up = detail::upper_side(vt.row(i + 1, k + 1), m, h, j, c, tol_v);
                        rb[j] = up.empty ? s : up.endpoint;
                    }
                }
            }
        }
    }
    return tt;
}

// Interpolated acceptance interval at an off-grid state.
inline std::pair<double, double> threshold_at(const ThresholdTable& tt, int i, double s, int k) {
    if (i < 1 || i > tt.spec.n) throw std::domain_error("threshold_at: time index out of range");
    if (k < 0 || k > tt.spec.d) throw std::domain_error("threshold_at: block index out of range");
    if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("threshold_at: s outside [0,1]");
    const int m = tt.spec.m;
    return {detail::interp(tt.row_a(i, k), m, s), detail::interp(tt.row_b(i, k), m, s)};
}

} // namespace uss::bellman
