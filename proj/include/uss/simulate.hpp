#pragma once

// Trajectory simulation and batch aggregation.
//
// Each run draws x_1..x_n from a seeded splitmix64 stream (or consumes an
// injected stream), applies a policy stepwise, and tracks the selection
// count together with the value-function martingale
//   Y_i = count_i + v_{i+1}(S_i, R_i),   d_i = Y_i - Y_{i-1},
// so Y_0 = v_1(0,0) and Y_n equals the final selected length. Batches
// derive per-run seeds deterministically from a base seed and may be
// sharded across threads without changing any result.

#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "uss/bellman.hpp"
#include "uss/moments.hpp"
#include "uss/policy.hpp"
#include "uss/rng.hpp"
#include "uss/table_io.hpp"

namespace uss::simulate {

using bellman::ProblemSpec;
using bellman::ValueTable;
using policy::ChooserState;
using policy::Decision;
using policy::Policy;
using policy::PolicyKind;

struct StepRecord {
    double x = 0.0;
    double a = 0.0;
    double b = 0.0;
    bool accepted = false;
    double s_after = 0.0;
    int k_after = 0;
    double y = 0.0;      // martingale value Y_i
    double d_inc = 0.0;  // increment Y_i - Y_{i-1}
};

struct Trajectory {
    ProblemSpec spec;
    std::vector<StepRecord> steps;
    int final_length = 0;
};

namespace detail {

// Stepping core; Sink receives (step index, x, decision, y, d_inc).
template <class Gen, class Sink>
void run_steps(const Policy& pol, const ValueTable& vt, Gen&& next_x, Sink&& sink) {
    const ProblemSpec& spec = vt.spec;
    ChooserState state;
    double y_prev = bellman::value_at(vt, 1, 0.0, 0);   // Y_0 = v_1(0,0)
    for (int i = 1; i <= spec.n; ++i) {
        const double x = next_x();
        const Decision dec = policy::decide(pol, spec, state, x);
        const double y = dec.new_state.count +
                         bellman::value_at(vt, i + 1, dec.new_state.s, dec.new_state.k);
        sink(i, x, dec, y, y - y_prev);
        y_prev = y;
        state = dec.new_state;
    }
}

// Streaming per-run reduction used for batches; also checks feasibility:
// accepted values split at block-index changes must form monotone blocks,
// increasing for even k, decreasing for odd k (empty blocks allowed).
struct RunStats {
    int length = 0;
    double sum_sq_inc = 0.0;
    double telescoping = 0.0;
    double max_abs_inc = 0.0;
    double s_final = 0.0;
    int k_final = 0;
    bool feasible = true;

    void step(const Decision& dec, double d_inc) {
        sum_sq_inc += d_inc * d_inc;
        const double width = dec.b - dec.a;
        telescoping += width * width;
        max_abs_inc = std::max(max_abs_inc, std::abs(d_inc));
        if (dec.accepted) {
            if (have_prev_) {
                if (dec.new_state.k < prev_k_) feasible = false;
                else if (dec.new_state.k == prev_k_) {
                    const bool up = (prev_k_ % 2 == 0);
                    if (up ? dec.new_state.s <= prev_s_ : dec.new_state.s >= prev_s_)
                        feasible = false;
                }
            }
            prev_s_ = dec.new_state.s;
            prev_k_ = dec.new_state.k;
            have_prev_ = true;
        }
        length = dec.new_state.count;
        s_final = dec.new_state.s;
        k_final = dec.new_state.k;
    }

  private:
    bool have_prev_ = false;
    double prev_s_ = 0.0;
    int prev_k_ = 0;
};

inline RunStats run_reduced(const Policy& pol, const ValueTable& vt, std::uint64_t seed) {
    rng::SplitMix64 gen(seed);
    RunStats rs;
    run_steps(pol, vt, [&] { return gen.next_double(); },
              [&](int, double, const Decision& dec, double, double d_inc) {
                  rs.step(dec, d_inc);
              });
    return rs;
}

} // namespace detail

inline Trajectory run_trajectory(const Policy& pol, const ValueTable& vt, std::uint64_t seed) {
    if (!vt.solved()) throw std::invalid_argument("run_trajectory: value table not solved");
    Trajectory traj;
    traj.spec = vt.spec;
    traj.steps.reserve(vt.spec.n);
    rng::SplitMix64 gen(seed);
    detail::run_steps(pol, vt, [&] { return gen.next_double(); },
                      [&](int, double x, const Decision& dec, double y, double d_inc) {
                          traj.steps.push_back({x, dec.a, dec.b, dec.accepted,
                                                dec.new_state.s, dec.new_state.k, y, d_inc});
                          traj.final_length = dec.new_state.count;
                      });
    return traj;
}

// Injected-stream variant; xs must supply exactly n observations.
inline Trajectory run_trajectory(const Policy& pol, const ValueTable& vt,
                                 std::span<const double> xs) {
    if (!vt.solved()) throw std::invalid_argument("run_trajectory: value table not solved");
    if (static_cast<int>(xs.size()) != vt.spec.n)
        throw std::invalid_argument("run_trajectory: stream length must equal n");
    Trajectory traj;
    traj.spec = vt.spec;
    traj.steps.reserve(vt.spec.n);
    std::size_t pos = 0;
    detail::run_steps(pol, vt, [&] { return xs[pos++]; },
                      [&](int, double x, const Decision& dec, double y, double d_inc) {
                          traj.steps.push_back({x, dec.a, dec.b, dec.accepted,
                                                dec.new_state.s, dec.new_state.k, y, d_inc});
                          traj.final_length = dec.new_state.count;
                      });
    return traj;
}

// Sum of squared interval widths plus the bookkeeping value
// g(S_n, R_n) = S_n if R_n = 0 else 2 - S_n; defined for d = 1 only.
inline std::pair<double, double> telescoping_statistic(const Trajectory& traj) {
    if (traj.spec.d != 1)
        throw std::invalid_argument("telescoping_statistic: defined only for d = 1");
    double sum_sq = 0.0;
    for (const auto& st : traj.steps) {
        const double w = st.b - st.a;
        sum_sq += w * w;
    }
    const auto& last = traj.steps.back();
    const double g = (last.k_after == 0) ? last.s_after : 2.0 - last.s_after;
    return {sum_sq, g};
}

inline bool feasible(const Trajectory& traj) {
    bool have_prev = false;
    double prev_s = 0.0;
    int prev_k = 0;
    for (const auto& st : traj.steps) {
        if (!st.accepted) continue;
        if (st.k_after > traj.spec.d || st.k_after < 0) return false;
        if (have_prev) {
            if (st.k_after < prev_k) return false;
            if (st.k_after == prev_k) {
                const bool up = (prev_k % 2 == 0);
                if (up ? st.s_after <= prev_s : st.s_after >= prev_s) return false;
            }
        }
        prev_s = st.s_after;
        prev_k = st.k_after;
        have_prev = true;
    }
    return true;
}

struct BatchSummary {
    ProblemSpec spec;
    PolicyKind policy = PolicyKind::optimal;
    std::uint64_t base_seed = 0;
    int reps = 0;

    double sample_mean = 0.0;
    double sample_variance = 0.0;
    double stderr_mean = 0.0;
    double telescoping_mean = 0.0;
    double g_terminal_mean = std::numeric_limits<double>::quiet_NaN();  // d = 1 only
    stats::Moments4 clt_moments;
    double max_abs_increment = 0.0;
    bool all_feasible = true;

    // Per-run series retained for downstream statistics; not part of the
    // serialized summary.
    std::vector<double> lengths;
    std::vector<double> sum_sq_increments;
    std::vector<double> telescoping;
    std::vector<double> g_terminal;
};

inline BatchSummary run_batch(const Policy& pol, const ValueTable& vt, int reps,
                              std::uint64_t base_seed, int threads = 1) {
    if (reps < 1) throw std::invalid_argument("run_batch: reps must be >= 1");
    if (!vt.solved()) throw std::invalid_argument("run_batch: value table not solved");

    std::vector<detail::RunStats> runs(reps);
    if (threads < 1) threads = 1;
    threads = std::min<int>(threads, reps);
    if (threads == 1) {
        for (int j = 0; j < reps; ++j)
            runs[j] = detail::run_reduced(pol, vt, rng::run_seed(base_seed, j));
    } else {
        // Static sharding; per-run seeds make results order-independent.
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        const int chunk = (reps + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int lo = t * chunk;
            const int hi = std::min(reps, lo + chunk);
            pool.emplace_back([&, lo, hi, t] {
                try {
                    for (int j = lo; j < hi; ++j)
                        runs[j] = detail::run_reduced(pol, vt, rng::run_seed(base_seed, j));
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    BatchSummary out;
    out.spec = vt.spec;
    out.policy = pol.kind;
    out.base_seed = base_seed;
    out.reps = reps;
    out.lengths.reserve(reps);
    out.sum_sq_increments.reserve(reps);
    out.telescoping.reserve(reps);
    if (vt.spec.d == 1) out.g_terminal.reserve(reps);

    for (const auto& rs : runs) {
        out.lengths.push_back(static_cast<double>(rs.length));
        out.sum_sq_increments.push_back(rs.sum_sq_inc);
        out.telescoping.push_back(rs.telescoping);
        if (vt.spec.d == 1)
            out.g_terminal.push_back(rs.k_final == 0 ? rs.s_final : 2.0 - rs.s_final);
        out.max_abs_increment = std::max(out.max_abs_increment, rs.max_abs_inc);
        out.all_feasible = out.all_feasible && rs.feasible;
    }

    const auto mom = stats::moments4(out.lengths);
    out.sample_mean = mom.mean;
    out.sample_variance = mom.variance;
    out.stderr_mean = std::sqrt(mom.variance / reps);
    out.telescoping_mean = stats::moments4(out.telescoping).mean;
    if (vt.spec.d == 1) out.g_terminal_mean = stats::moments4(out.g_terminal).mean;

    std::vector<double> z(out.lengths.size());
    for (std::size_t j = 0; j < z.size(); ++j)
        z[j] = stats::clt_transform(out.lengths[j], vt.spec.n, vt.spec.d);
    out.clt_moments = stats::moments4(z);
    return out;
}

// Trajectory dump, one row per step.
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::string out = "step,x,a,b,accepted,s,k,y,d_inc\n";
    int i = 1;
    for (const auto& st : traj.steps) {
        out += std::to_string(i++);
        for (double v : {st.x, st.a, st.b}) {
            out.push_back(',');
            bellman::detail::append_double(out, v);
        }
        out += st.accepted ? ",1," : ",0,";
        bellman::detail::append_double(out, st.s_after);
        out.push_back(',');
        out += std::to_string(st.k_after);
        for (double v : {st.y, st.d_inc}) {
            out.push_back(',');
            bellman::detail::append_double(out, v);
        }
        out.push_back('\n');
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write_trajectory_csv: write failed for " + path);
}

} // namespace uss::simulate
