#pragma once

// Off-line (full-information) subsequence oracles: longest increasing,
// longest unimodal, and longest d-modal subsequence of a realized sequence,
// together with the deterministic guarantee formulas they are tested
// against. Values must be pairwise distinct, which makes weak and strict
// monotonicity coincide.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uss/rng.hpp"

namespace uss::offline {

struct Sequence {
    std::vector<double> xs;

    Sequence() = default;
    explicit Sequence(std::vector<double> values) : xs(std::move(values)) {
        std::vector<double> sorted(xs);
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("Sequence: values must be pairwise distinct");
    }

    std::size_t size() const { return xs.size(); }
    Sequence reflected() const {
        std::vector<double> neg(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) neg[i] = -xs[i];
        Sequence out;
        out.xs = std::move(neg);   // distinctness is preserved under negation
        return out;
    }
};

namespace detail {

// inc[i] = length of the longest increasing subsequence ending exactly at i,
// via patience sorting.
inline std::vector<int> lis_end_lengths(std::span<const double> xs) {
    std::vector<double> tails;
    std::vector<int> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        auto it = std::lower_bound(tails.begin(), tails.end(), xs[i]);
        out[i] = static_cast<int>(it - tails.begin()) + 1;
        if (it == tails.end()) tails.push_back(xs[i]);
        else *it = xs[i];
    }
    return out;
}

// dec[i] = length of the longest decreasing subsequence starting at i;
// equals the LIS ending length at the mirrored position of the reversed
// sequence (no negation: reversal alone flips both order and direction).
inline std::vector<int> lds_start_lengths(std::span<const double> xs) {
    std::vector<double> rev(xs.rbegin(), xs.rend());
    std::vector<int> r = lis_end_lengths(rev);
    std::reverse(r.begin(), r.end());
    return r;
}

// Fenwick tree over value ranks supporting prefix-max queries.
class MaxFenwick {
  public:
    explicit MaxFenwick(int n) : t_(n + 1, 0) {}
    void update(int idx, int val) {
        for (int i = idx + 1; i < static_cast<int>(t_.size()); i += i & -i)
            t_[i] = std::max(t_[i], val);
    }
    // max over ranks in [0, idx); 0 when empty
    int prefix_max(int idx) const {
        int best = 0;
        for (int i = idx; i > 0; i -= i & -i) best = std::max(best, t_[i]);
        return best;
    }

  private:
    std::vector<int> t_;
};

inline std::vector<int> ranks(std::span<const double> xs) {
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> r(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        r[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), xs[i]) -
                                sorted.begin());
    return r;
}

// Minimal number of alternating monotone blocks (first block increasing,
// leading empty block permitted) needed to carry a candidate subsequence.
inline int blocks_needed(std::span<const double> sub) {
    if (sub.size() <= 1) return 1;
    int groups = 1;
    bool first_up = sub[1] > sub[0];
    bool up = first_up;
    for (std::size_t i = 2; i < sub.size(); ++i) {
        const bool step_up = sub[i] > sub[i - 1];
        if (step_up != up) { ++groups; up = step_up; }
    }
    return groups + (first_up ? 0 : 1);
}

} // namespace detail

inline int lis_length(const Sequence& seq) {
    if (seq.xs.empty()) return 0;   // documented: empty input yields 0
    const auto inc = detail::lis_end_lengths(seq.xs);
    return *std::max_element(inc.begin(), inc.end());
}

struct LusResult {
    int u_n = 0;   // longest up-then-down
    int d_n = 0;   // longest down-then-up
    int l_n = 0;   // max of the two
};

inline LusResult lus_length(const Sequence& seq) {
    if (seq.xs.empty()) return {};
    const auto up = [](std::span<const double> xs) {
        const auto inc = detail::lis_end_lengths(xs);
        const auto dec = detail::lds_start_lengths(xs);
        int best = 0;   // pivot element is shared by both pieces
        for (std::size_t i = 0; i < xs.size(); ++i)
            best = std::max(best, inc[i] + dec[i] - 1);
        return best;
    };
    LusResult out;
    out.u_n = up(seq.xs);
    out.d_n = up(seq.reflected().xs);
    out.l_n = std::max(out.u_n, out.d_n);
    return out;
}

// Longest subsequence splittable into at most d+1 alternating monotone
// blocks, first block increasing. DP over (element, minimal block index k):
// a sequence at even k extends with a larger value (same k) or turns from
// k-1; odd k mirrors. One prefix-max Fenwick per (k, query direction).
inline int dmodal_offline_length(const Sequence& seq, int d) {
    if (d < 0) throw std::invalid_argument("dmodal_offline_length: d must be >= 0");
    const int n = static_cast<int>(seq.size());
    if (n == 0) return 0;
    const int kmax = std::min(d, n - 1);
    const auto rk = detail::ranks(seq.xs);

    // asc[k]: indexed by rank, serves "largest previous below x" queries;
    // desc[k]: indexed by reversed rank, serves "above x" queries.
    std::vector<detail::MaxFenwick> asc(kmax + 1, detail::MaxFenwick(n));
    std::vector<detail::MaxFenwick> desc(kmax + 1, detail::MaxFenwick(n));
    std::vector<int> g(kmax + 1);
    int best = 0;

    for (int p = 0; p < n; ++p) {
        const int r = rk[p];
        for (int k = 0; k <= kmax; ++k) {
            int cand;
            if (k % 2 == 0) {
                cand = asc[k].prefix_max(r);
                if (k > 0) cand = std::max(cand, asc[k - 1].prefix_max(r));
            } else {
                cand = desc[k].prefix_max(n - 1 - r);
                cand = std::max(cand, desc[k - 1].prefix_max(n - 1 - r));
            }
            if (k == 0) g[k] = 1 + cand;
            else g[k] = (cand > 0) ? 1 + cand : 0;   // 0 marks unreachable
        }
        for (int k = 0; k <= kmax; ++k) {
            if (g[k] == 0) continue;
            best = std::max(best, g[k]);
            asc[k].update(r, g[k]);
            desc[k].update(n - 1 - r, g[k]);
        }
    }
    return best;
}

inline int dmodal_best_of_both(const Sequence& seq, int d) {
    return std::max(dmodal_offline_length(seq, d),
                    dmodal_offline_length(seq.reflected(), d));
}

// Exhaustive reference oracle over all subsequences; n <= 20.
inline int dmodal_offline_bruteforce(const Sequence& seq, int d) {
    if (d < 0) throw std::invalid_argument("dmodal_offline_bruteforce: d must be >= 0");
    const int n = static_cast<int>(seq.size());
    if (n > 20) throw std::invalid_argument("dmodal_offline_bruteforce: sequence longer than 20");
    if (n == 0) return 0;
    int best = 0;
    std::vector<double> sub;
    sub.reserve(n);
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        if (std::popcount(mask) <= best) continue;
        sub.clear();
        for (int i = 0; i < n; ++i)
            if (mask >> i & 1u) sub.push_back(seq.xs[i]);
        if (detail::blocks_needed(sub) <= d + 1)
            best = static_cast<int>(sub.size());
    }
    return best;
}

// Smallest l with l(l+1) + 1 >= 3n, the guaranteed unimodal length
// ceil(sqrt(3n - 3/4) - 1/2) evaluated in exact integer arithmetic.
inline int guaranteed_unimodal_length(long long n) {
    if (n < 1) throw std::invalid_argument("guaranteed_unimodal_length: n must be >= 1");
    long long l = std::max(1LL, static_cast<long long>(std::sqrt(3.0 * n)) - 2);
    while (l * (l + 1) + 1 < 3 * n) ++l;
    return static_cast<int>(l);
}

inline int ceil_sqrt(long long n) {
    long long t = std::max(0LL, static_cast<long long>(std::sqrt(static_cast<double>(n))) - 1);
    while (t * t < n) ++t;
    return static_cast<int>(t);
}

struct OfflineResult {
    int lis = 0;
    int lds = 0;
    int u_n = 0;
    int d_n = 0;
    int l_n = 0;
    std::map<int, int> dmodal;   // d -> length, starting-increasing orientation
};

inline OfflineResult offline_result(const Sequence& seq, int dmax) {
    OfflineResult out;
    out.lis = lis_length(seq);
    out.lds = lis_length(seq.reflected());
    const auto lus = lus_length(seq);
    out.u_n = lus.u_n;
    out.d_n = lus.d_n;
    out.l_n = lus.l_n;
    for (int d = 0; d <= dmax; ++d)
        out.dmodal[d] = dmodal_offline_length(seq, d);
    return out;
}

inline Sequence random_sequence(int n, std::uint64_t seed) {
    rng::SplitMix64 gen(seed);
    std::vector<double> xs(n);
    for (auto& x : xs) x = gen.next_double();
    return Sequence(std::move(xs));
}

// Random permutation of {1..n} as doubles (always distinct).
inline Sequence random_permutation(int n, std::uint64_t seed) {
    rng::SplitMix64 gen(seed);
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = i + 1.0;
    for (int i = n - 1; i > 0; --i)
        std::swap(xs[i], xs[gen.next_below(static_cast<std::uint64_t>(i) + 1)]);
    Sequence out;
    out.xs = std::move(xs);
    return out;
}

// One value per line; blank lines and '#' comments are skipped.
inline Sequence read_sequence_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_sequence_csv: cannot open " + path);
    std::vector<double> xs;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        try {
            xs.push_back(std::stod(line));
        } catch (const std::exception&) {
            throw std::runtime_error("read_sequence_csv: malformed line in " + path);
        }
    }
    return Sequence(std::move(xs));
}

} // namespace uss::offline
