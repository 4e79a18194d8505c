#pragma once

// Acceptance policies over chooser states.
//
// The optimal policy accepts exactly inside the solved acceptance interval
// [a(i,s,k), b(i,s,k)]; an acceptance on the turning side of s (below s in
// an increasing block, above s in a decreasing block) advances the block
// index. The split-window heuristic divides the horizon into d+1 equal
// phases of floor(n/(d+1)) steps with window width w = sqrt(2(d+1)/n):
// increasing phases accept in [s, min(1, s+w)], decreasing phases in
// [max(0, s-w), s], and s is re-anchored at each phase boundary (0 entering
// an increasing phase, 1 entering a decreasing one). Trailing n mod (d+1)
// observations are ignored.

#include <cmath>
#include <stdexcept>

#include "uss/bellman.hpp"

namespace uss::policy {

using bellman::ProblemSpec;
using bellman::ThresholdTable;

struct ChooserState {
    int i = 1;        // next observation index, 1..n+1
    double s = 0.0;   // last selected value (S_0 = 0)
    int k = 0;        // current block index (R_0 = 0)
    int count = 0;    // selections so far
};

struct Decision {
    bool accepted = false;
    ChooserState new_state;
    double a = 0.0;   // acceptance interval consulted for this step
    double b = 0.0;
};

inline Decision optimal_accept(const ThresholdTable& tt, const ChooserState& state, double x) {
    const int n = tt.spec.n;
    if (state.i > n) throw std::out_of_range("optimal_accept: horizon exhausted");
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("optimal_accept: x outside [0,1]");

    const auto [a, b] = threshold_at(tt, state.i, state.s, state.k);
    Decision dec;
    dec.a = a;
    dec.b = b;
    dec.accepted = (x >= a && x <= b);
    dec.new_state = state;
    dec.new_state.i = state.i + 1;
    if (dec.accepted) {
        // Turning side is collapsed (a = s or b = s) when k = d, so a turn
        // here can only occur with k < d.
        const bool turn = (state.k % 2 == 0) ? (x < state.s) : (x > state.s);
        dec.new_state.s = x;
        dec.new_state.k = state.k + (turn ? 1 : 0);
        dec.new_state.count = state.count + 1;
    }
    return dec;
}

inline Decision heuristic_window_accept(const ProblemSpec& spec, const ChooserState& state,
                                        double x) {
    spec.validate();
    const int n = spec.n, d = spec.d;
    if (state.i > n) throw std::out_of_range("heuristic_window_accept: horizon exhausted");
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error("heuristic_window_accept: x outside [0,1]");

    Decision dec;
    dec.new_state = state;
    dec.new_state.i = state.i + 1;

    const int phase_len = n / (d + 1);
    if (phase_len == 0 || state.i > (d + 1) * phase_len) {
        // Trailing remainder: no window is consulted, nothing is accepted.
        dec.a = dec.b = state.s;
        return dec;
    }

    const int phase = (state.i - 1) / phase_len;
    double s = state.s;
    if (phase >= 1 && state.i == phase * phase_len + 1)
        s = (phase % 2 == 1) ? 1.0 : 0.0;   // re-anchor entering a new phase

    const double w = std::sqrt(2.0 * (d + 1) / n);
    if (phase % 2 == 0) {
        dec.a = s;
        dec.b = std::min(1.0, s + w);
    } else {
        dec.a = std::max(0.0, s - w);
        dec.b = s;
    }
    dec.accepted = (x >= dec.a && x <= dec.b);
    if (dec.accepted) {
        dec.new_state.s = x;
        // An empty phase skips its block index; the decomposition simply
        // contains an empty block, which keeps the run d-modal.
        dec.new_state.k = phase;
        dec.new_state.count = state.count + 1;
    } else {
        dec.new_state.s = s;   // phase re-anchoring persists across rejections
    }
    return dec;
}

enum class PolicyKind { optimal, heuristic };

// Lightweight policy handle: the optimal policy needs solved thresholds, the
// heuristic only the problem parameters.
struct Policy {
    PolicyKind kind = PolicyKind::optimal;
    const ThresholdTable* thresholds = nullptr;

    static Policy optimal(const ThresholdTable& tt) { return {PolicyKind::optimal, &tt}; }
    static Policy heuristic() { return {PolicyKind::heuristic, nullptr}; }
};

inline Decision decide(const Policy& pol, const ProblemSpec& spec, const ChooserState& state,
                       double x) {
    if (pol.kind == PolicyKind::optimal) {
        if (pol.thresholds == nullptr || !(pol.thresholds->spec == spec))
            throw std::invalid_argument("decide: thresholds missing or spec mismatch");
        return optimal_accept(*pol.thresholds, state, x);
    }
    return heuristic_window_accept(spec, state, x);
}

} // namespace uss::policy
