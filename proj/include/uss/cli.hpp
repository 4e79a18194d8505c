#pragma once

// Command-line orchestration. Five subcommands share one RunConfig:
//
//   solve     solve tables, print the value and its bounds, persist USS1
//   simulate  load tables, run a policy batch, emit JSON / trajectory CSVs
//   offline   off-line oracles on a CSV file or on generated streams
//   compare   bound report with prophet ratio (online vs off-line)
//   report    conjecture diagnostics (variance/mean, normality) for a batch
//
// Commands are deterministic given their flags; seeds appear in all outputs
// and no output carries a timestamp. Exit codes: 0 success, 1 invariant
// violation, 2 usage or configuration error.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uss/bellman.hpp"
#include "uss/offline.hpp"
#include "uss/policy.hpp"
#include "uss/rng.hpp"
#include "uss/simulate.hpp"
#include "uss/stats.hpp"
#include "uss/table_io.hpp"

namespace uss::cli {

inline constexpr const char* report_format = "uss-report-1";

struct RunConfig {
    std::string command;
    int n = 1000;
    int d = 1;
    int grid_size = 1001;
    int reps = 1000;
    int offline_reps = 100;
    int traj_count = 1;
    int threads = 1;
    std::uint64_t seed = 20120704;
    double c_slack = stats::default_c_slack;
    std::string policy = "optimal";            // optimal | heuristic
    std::string orientation;                   // up-first | best-of-both
    std::string table_in;
    std::string table_out;
    std::string json_out;
    std::string csv_out;
    std::string traj_csv;
    std::string input_csv;
};

namespace detail {

inline std::string fixed6(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << v;
    return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw std::runtime_error("write failed for " + path);
}

inline nlohmann::json spec_json(const bellman::ProblemSpec& spec) {
    return {{"n", spec.n}, {"d", spec.d}, {"grid", spec.m}};
}

inline nlohmann::json moments_json(const stats::Moments4& m) {
    return {{"mean", m.mean},
            {"variance", m.variance},
            {"skewness", m.skewness},
            {"excess_kurtosis", m.excess_kurtosis}};
}

inline nlohmann::json summary_json(const simulate::BatchSummary& s) {
    nlohmann::json j{
        {"format", report_format},
        {"command", "simulate"},
        {"spec", spec_json(s.spec)},
        {"policy", s.policy == policy::PolicyKind::optimal ? "optimal" : "heuristic"},
        {"seed", s.base_seed},
        {"seed_rule", "run_seed(j) = output j of the splitmix64 stream seeded with seed"},
        {"reps", s.reps},
        {"sample_mean", s.sample_mean},
        {"sample_variance", s.sample_variance},
        {"stderr_mean", s.stderr_mean},
        {"telescoping_mean", s.telescoping_mean},
        {"clt_moments", moments_json(s.clt_moments)},
        {"max_abs_increment", s.max_abs_increment},
        {"all_feasible", s.all_feasible},
    };
    if (s.spec.d == 1) j["g_terminal_mean"] = s.g_terminal_mean;
    return j;
}

inline nlohmann::json bound_json(const stats::BoundReport& r) {
    return {{"n", r.n},
            {"d", r.d},
            {"solver_value", r.solver_value},
            {"upper_bound", r.upper_bound},
            {"lower_bound", r.lower_bound},
            {"mc_mean", r.mc_mean},
            {"mc_variance", r.mc_variance},
            {"mc_stderr", r.mc_stderr},
            {"var_over_mean", r.var_over_mean},
            {"prophet_ratio", r.prophet_ratio},
            {"offline_mean", r.offline_mean},
            {"clt_moments", moments_json(r.clt_moments)},
            {"violations", r.violations}};
}

// Flat row for external plotting; unavailable cells stay empty.
inline std::string report_csv_row(const bellman::ProblemSpec& spec, const std::string& pol,
                                  const stats::BoundReport* br, const stats::Moments4& clt,
                                  double ks, bool have_ks) {
    std::string out =
        "n,d,policy,solver_value,upper_bound,lower_bound,mc_mean,mc_variance,mc_stderr,"
        "var_over_mean,prophet_ratio,clt_mean,clt_variance,clt_skewness,clt_excess_kurtosis,"
        "ks_distance\n";
    out += std::to_string(spec.n) + "," + std::to_string(spec.d) + "," + pol + ",";
    if (br) {
        out += fixed6(br->solver_value) + "," + fixed6(br->upper_bound) + "," +
               fixed6(br->lower_bound) + "," + fixed6(br->mc_mean) + "," +
               fixed6(br->mc_variance) + "," + fixed6(br->mc_stderr) + "," +
               fixed6(br->var_over_mean) + "," + fixed6(br->prophet_ratio) + ",";
    } else {
        out += ",,,,,,,,";
    }
    out += fixed6(clt.mean) + "," + fixed6(clt.variance) + "," + fixed6(clt.skewness) + "," +
           fixed6(clt.excess_kurtosis) + ",";
    if (have_ks) out += fixed6(ks);
    out += "\n";
    return out;
}

inline bellman::ProblemSpec spec_from(const RunConfig& cfg) {
    bellman::ProblemSpec spec{cfg.n, cfg.d, cfg.grid_size};
    spec.validate();
    return spec;
}

inline void require_up_first(const RunConfig& cfg) {
    if (!cfg.orientation.empty() && cfg.orientation != "up-first")
        throw std::invalid_argument(
            "only up-first orientation is supported here; reflect inputs x -> 1-x for the "
            "down-first chooser");
}

struct SolvedTables {
    bellman::ValueTable vt;
    bellman::ThresholdTable tt;
};

inline SolvedTables obtain_tables(const RunConfig& cfg) {
    if (!cfg.table_in.empty()) {
        auto [vt, tt] = bellman::load_tables(cfg.table_in);
        const auto spec = spec_from(cfg);
        if (!(vt.spec == spec))
            throw std::invalid_argument("table file does not match --n/--d/--grid");
        return {std::move(vt), std::move(tt)};
    }
    auto vt = bellman::solve_value_table(spec_from(cfg));
    auto tt = bellman::compute_thresholds(vt);
    return {std::move(vt), std::move(tt)};
}

// Off-line replication mean; seeds are offset past the online batch range so
// the two sides never share a stream.
inline double offline_replication_mean(const RunConfig& cfg, int n, int d) {
    const bool both = cfg.orientation != "up-first";
    double total = 0.0;
    for (int r = 0; r < cfg.offline_reps; ++r) {
        const auto seq =
            offline::random_sequence(n, rng::run_seed(cfg.seed, cfg.reps + r));
        int len;
        if (d == 1) {
            const auto lus = offline::lus_length(seq);
            len = both ? lus.l_n : lus.u_n;
        } else {
            len = both ? offline::dmodal_best_of_both(seq, d)
                       : offline::dmodal_offline_length(seq, d);
        }
        total += len;
    }
    return total / cfg.offline_reps;
}

} // namespace detail

inline int cmd_solve(const RunConfig& cfg) {
    detail::require_up_first(cfg);
    const auto spec = detail::spec_from(cfg);
    const auto vt = bellman::solve_value_table(spec);
    const double v = bellman::value_at(vt, 1, 0.0, 0);
    const double upper = stats::upper_bound_value(spec.n, spec.d);
    const double lower = stats::lower_bound_value(spec.n, spec.d, cfg.c_slack);

    std::cout << "n = " << spec.n << "  d = " << spec.d << "  grid = " << spec.m << "\n"
              << "v1(0,0) = " << detail::fixed6(v) << "\n"
              << "upper_bound = " << detail::fixed6(upper) << "\n"
              << "lower_bound = " << detail::fixed6(lower) << "\n";

    if (!cfg.table_out.empty()) {
        const auto tt = bellman::compute_thresholds(vt);
        bellman::save_tables(cfg.table_out, vt, tt);
        std::cout << "tables written to " << cfg.table_out << "\n";
    }
    if (!(v < upper) || !(v > lower)) {
        std::cerr << "bound violation: value " << detail::fixed6(v) << " outside ("
                  << detail::fixed6(lower) << ", " << detail::fixed6(upper) << ")\n";
        return 1;
    }
    return 0;
}

inline int cmd_simulate(const RunConfig& cfg) {
    detail::require_up_first(cfg);
    if (cfg.table_in.empty())
        throw std::invalid_argument("simulate requires --table (produce one with solve --out)");
    auto [vt, tt] = bellman::load_tables(cfg.table_in);

    policy::Policy pol;
    if (cfg.policy == "optimal") pol = policy::Policy::optimal(tt);
    else if (cfg.policy == "heuristic") pol = policy::Policy::heuristic();
    else throw std::invalid_argument("unknown policy: " + cfg.policy);

    const auto summary = simulate::run_batch(pol, vt, cfg.reps, cfg.seed, cfg.threads);

    std::cout << "policy = " << cfg.policy << "  reps = " << cfg.reps << "  seed = " << cfg.seed
              << "\n"
              << "sample_mean = " << detail::fixed6(summary.sample_mean) << "\n"
              << "sample_variance = " << detail::fixed6(summary.sample_variance) << "\n"
              << "stderr_mean = " << detail::fixed6(summary.stderr_mean) << "\n"
              << "telescoping_mean = " << detail::fixed6(summary.telescoping_mean) << "\n";
    if (vt.spec.d == 1)
        std::cout << "g_terminal_mean = " << detail::fixed6(summary.g_terminal_mean) << "\n";
    std::cout << "max_abs_increment = " << detail::fixed6(summary.max_abs_increment) << "\n";

    if (!cfg.json_out.empty())
        detail::write_text(cfg.json_out, detail::summary_json(summary).dump(2) + "\n");

    if (!cfg.traj_csv.empty()) {
        for (int j = 0; j < cfg.traj_count; ++j) {
            const auto traj =
                simulate::run_trajectory(pol, vt, rng::run_seed(cfg.seed, j));
            const std::string path =
                (cfg.traj_count == 1) ? cfg.traj_csv : cfg.traj_csv + "." + std::to_string(j);
            simulate::write_trajectory_csv(path, traj);
        }
    }

    bool ok = summary.all_feasible;
    if (!summary.all_feasible) std::cerr << "invariant violation: infeasible trajectory\n";
    if (cfg.policy == "optimal") {
        const double bound = 1.0 + 2.0 / (vt.spec.m - 1);
        if (summary.max_abs_increment > bound) {
            std::cerr << "invariant violation: |d_i| = "
                      << detail::fixed6(summary.max_abs_increment) << " exceeds "
                      << detail::fixed6(bound) << "\n";
            ok = false;
        }
    }
    return ok ? 0 : 1;
}

inline int cmd_offline(const RunConfig& cfg) {
    nlohmann::json j{{"format", report_format}, {"command", "offline"}};

    if (!cfg.input_csv.empty()) {
        const auto seq = offline::read_sequence_csv(cfg.input_csv);
        const auto res = offline::offline_result(seq, cfg.d);
        const int n = static_cast<int>(seq.size());
        std::cout << "n = " << n << "\n"
                  << "lis = " << res.lis << "  lds = " << res.lds << "\n"
                  << "u_n = " << res.u_n << "  d_n = " << res.d_n << "  l_n = " << res.l_n
                  << "\n";
        for (const auto& [d, len] : res.dmodal)
            std::cout << "dmodal[" << d << "] = " << len << "\n";
        j["input"] = cfg.input_csv;
        j["n"] = n;
        j["lis"] = res.lis;
        j["lds"] = res.lds;
        j["u_n"] = res.u_n;
        j["d_n"] = res.d_n;
        j["l_n"] = res.l_n;
        for (const auto& [d, len] : res.dmodal) j["dmodal"][std::to_string(d)] = len;
        if (n >= 1) {
            j["unimodal_guarantee"] = offline::guaranteed_unimodal_length(n);
            j["monotone_guarantee"] = offline::ceil_sqrt(n);
        }
        if (!cfg.json_out.empty()) detail::write_text(cfg.json_out, j.dump(2) + "\n");
        return 0;
    }

    // Generated mode: aggregate the prophet statistic over seeded streams.
    if (cfg.reps < 1) throw std::invalid_argument("offline: --reps must be >= 1");
    const bool both = cfg.orientation != "up-first";
    const int uni_min = offline::guaranteed_unimodal_length(cfg.n);
    const int mono_min = offline::ceil_sqrt(cfg.n);
    std::vector<double> lens(cfg.reps);
    bool uni_ok = true, mono_ok = true;
    for (int r = 0; r < cfg.reps; ++r) {
        const auto seq = offline::random_sequence(cfg.n, rng::run_seed(cfg.seed, r));
        const auto lus = offline::lus_length(seq);
        int len;
        if (cfg.d == 1) len = both ? lus.l_n : lus.u_n;
        else len = both ? offline::dmodal_best_of_both(seq, cfg.d)
                        : offline::dmodal_offline_length(seq, cfg.d);
        lens[r] = len;
        if (lus.l_n < uni_min) uni_ok = false;
        const int lds = lis_length(seq.reflected());
        if (std::max(lis_length(seq), lds) < mono_min) mono_ok = false;
    }
    const auto m = stats::moments4(lens);
    std::cout << "n = " << cfg.n << "  d = " << cfg.d << "  reps = " << cfg.reps
              << "  seed = " << cfg.seed << "\n"
              << "mean_length = " << detail::fixed6(m.mean) << "\n"
              << "stddev = " << detail::fixed6(std::sqrt(m.variance)) << "\n";
    if (cfg.d == 1) {
        const double target = 2.0 * std::sqrt(2.0 * cfg.n);
        std::cout << "asymptote 2*sqrt(2n) = " << detail::fixed6(target)
                  << "  ratio = " << detail::fixed6(m.mean / target) << "\n";
        j["asymptote"] = target;
    }
    std::cout << "unimodal_guarantee = " << uni_min << (uni_ok ? " (held)" : " (VIOLATED)")
              << "\n";

    j["n"] = cfg.n;
    j["d"] = cfg.d;
    j["reps"] = cfg.reps;
    j["seed"] = cfg.seed;
    j["orientation"] = both ? "best-of-both" : "up-first";
    j["mean_length"] = m.mean;
    j["stddev"] = std::sqrt(m.variance);
    j["unimodal_guarantee"] = uni_min;
    j["unimodal_guarantee_held"] = uni_ok;
    j["monotone_guarantee"] = mono_min;
    j["monotone_guarantee_held"] = mono_ok;
    if (!cfg.json_out.empty()) detail::write_text(cfg.json_out, j.dump(2) + "\n");
    return (uni_ok && mono_ok) ? 0 : 1;
}

inline int cmd_compare(const RunConfig& cfg) {
    auto tables = detail::obtain_tables(cfg);
    const auto pol = policy::Policy::optimal(tables.tt);
    const auto online = simulate::run_batch(pol, tables.vt, cfg.reps, cfg.seed, cfg.threads);
    const double off_mean =
        detail::offline_replication_mean(cfg, tables.vt.spec.n, tables.vt.spec.d);
    const auto report = stats::bound_report(tables.vt, online, off_mean, cfg.c_slack);

    std::cout << "n = " << report.n << "  d = " << report.d << "  seed = " << cfg.seed << "\n"
              << "solver_value = " << detail::fixed6(report.solver_value) << "\n"
              << "upper_bound = " << detail::fixed6(report.upper_bound) << "\n"
              << "lower_bound = " << detail::fixed6(report.lower_bound) << "\n"
              << "mc_mean = " << detail::fixed6(report.mc_mean) << "\n"
              << "mc_variance = " << detail::fixed6(report.mc_variance) << "\n"
              << "var_over_mean = " << detail::fixed6(report.var_over_mean) << "\n"
              << "offline_mean = " << detail::fixed6(report.offline_mean) << "\n"
              << "prophet_ratio = " << detail::fixed6(report.prophet_ratio) << "\n";
    for (const auto& v : report.violations) std::cerr << "violation: " << v << "\n";

    nlohmann::json j = detail::bound_json(report);
    j["format"] = report_format;
    j["command"] = "compare";
    j["seed"] = cfg.seed;
    j["reps"] = cfg.reps;
    j["offline_reps"] = cfg.offline_reps;
    j["orientation"] = cfg.orientation == "up-first" ? "up-first" : "best-of-both";
    if (!cfg.json_out.empty()) detail::write_text(cfg.json_out, j.dump(2) + "\n");
    if (!cfg.csv_out.empty()) {
        const auto ks = stats::ks_distance_normal(
            stats::clt_statistic(online.lengths, report.n, report.d).values);
        detail::write_text(cfg.csv_out,
                           detail::report_csv_row(tables.vt.spec, "optimal", &report,
                                                  report.clt_moments, ks, true));
    }
    return report.passed() ? 0 : 1;
}

inline int cmd_report(const RunConfig& cfg) {
    auto tables = detail::obtain_tables(cfg);
    const auto pol = policy::Policy::optimal(tables.tt);
    const auto online = simulate::run_batch(pol, tables.vt, cfg.reps, cfg.seed, cfg.threads);
    const auto conj = stats::conjecture_report(online);
    const auto clt =
        stats::clt_statistic(online.lengths, tables.vt.spec.n, tables.vt.spec.d);

    std::cout << "n = " << tables.vt.spec.n << "  d = " << tables.vt.spec.d
              << "  reps = " << cfg.reps << "  seed = " << cfg.seed << "\n"
              << "var_over_mean = " << detail::fixed6(conj.var_over_mean) << "  CI = ["
              << detail::fixed6(conj.ci_low) << ", " << detail::fixed6(conj.ci_high) << "]\n"
              << "consistent_with_1/3 = " << (conj.consistent_with_one_third ? "yes" : "no")
              << "\n"
              << "clt_mean = " << detail::fixed6(clt.moments.mean)
              << "  clt_variance = " << detail::fixed6(clt.moments.variance) << "\n"
              << "clt_skewness = " << detail::fixed6(clt.moments.skewness)
              << "  clt_excess_kurtosis = " << detail::fixed6(clt.moments.excess_kurtosis)
              << "\n"
              << "ks_distance = " << detail::fixed6(clt.ks_distance) << "\n";
    if (clt.ks_distance >= 0.05)
        std::cout << "warning: KS distance exceeds 0.05 (conjecture check, soft)\n";
    if (conj.var_over_mean < 0.25 || conj.var_over_mean > 0.45)
        std::cout << "warning: var_over_mean outside [0.25, 0.45] (conjecture check, soft)\n";
    if (conj.d0_lower_check)
        std::cout << "d0_variance_lower_check = " << (*conj.d0_lower_check ? "pass" : "fail")
                  << "\n";
    if (!conj.var_le_mean) std::cerr << "violation: sample variance exceeds sample mean\n";

    nlohmann::json j{
        {"format", report_format},
        {"command", "report"},
        {"spec", detail::spec_json(tables.vt.spec)},
        {"seed", cfg.seed},
        {"reps", cfg.reps},
        {"var_over_mean", conj.var_over_mean},
        {"var_over_mean_ci", {conj.ci_low, conj.ci_high}},
        {"consistent_with_one_third", conj.consistent_with_one_third},
        {"var_le_mean", conj.var_le_mean},
        {"clt_moments", detail::moments_json(clt.moments)},
        {"ks_distance", clt.ks_distance},
    };
    if (conj.d0_lower_check) j["d0_variance_lower_check"] = *conj.d0_lower_check;
    if (!cfg.json_out.empty()) detail::write_text(cfg.json_out, j.dump(2) + "\n");
    if (!cfg.csv_out.empty())
        detail::write_text(cfg.csv_out,
                           detail::report_csv_row(tables.vt.spec, "optimal", nullptr,
                                                  clt.moments, clt.ks_distance, true));
    return conj.var_le_mean ? 0 : 1;
}

inline int run(const std::vector<std::string>& args) {
    RunConfig cfg;
    CLI::App app{"sequential selection of d-modal subsequences: solver and simulation harness"};
    app.require_subcommand(1);

    auto add_spec = [&](CLI::App* c) {
        c->add_option("--n", cfg.n, "horizon length");
        c->add_option("--d", cfg.d, "turn budget");
        c->add_option("--grid", cfg.grid_size, "grid points on [0,1]");
    };

    auto* solve = app.add_subcommand("solve", "solve value and threshold tables");
    add_spec(solve);
    solve->add_option("--c-slack", cfg.c_slack, "slack constant in the lower bound");
    solve->add_option("--out", cfg.table_out, "write USS1 table file");
    solve->add_option("--orientation", cfg.orientation, "up-first (only)");

    auto* sim = app.add_subcommand("simulate", "run a policy batch against solved tables");
    sim->add_option("--table", cfg.table_in, "USS1 table file from solve")->required();
    sim->add_option("--reps", cfg.reps, "number of runs");
    sim->add_option("--seed", cfg.seed, "base seed");
    sim->add_option("--policy", cfg.policy, "optimal | heuristic");
    sim->add_option("--threads", cfg.threads, "worker threads (results are unaffected)");
    sim->add_option("--json", cfg.json_out, "write batch summary JSON");
    sim->add_option("--traj-csv", cfg.traj_csv, "write trajectory CSV(s)");
    sim->add_option("--traj-count", cfg.traj_count, "number of trajectories to dump");
    sim->add_option("--orientation", cfg.orientation, "up-first (only)");

    auto* off = app.add_subcommand("offline", "off-line oracles on a file or generated streams");
    off->add_option("--input", cfg.input_csv, "sequence CSV, one value per line");
    off->add_option("--n", cfg.n, "length of generated sequences");
    off->add_option("--d", cfg.d, "turn budget for the d-modal oracle");
    off->add_option("--reps", cfg.reps, "generated replications");
    off->add_option("--seed", cfg.seed, "base seed");
    off->add_option("--orientation", cfg.orientation, "up-first | best-of-both");
    off->add_option("--json", cfg.json_out, "write report JSON");

    auto* cmp = app.add_subcommand("compare", "online optimal policy vs off-line prophet");
    add_spec(cmp);
    cmp->add_option("--reps", cfg.reps, "online runs");
    cmp->add_option("--offline-reps", cfg.offline_reps, "off-line replications");
    cmp->add_option("--seed", cfg.seed, "base seed");
    cmp->add_option("--c-slack", cfg.c_slack, "slack constant in the lower bound");
    cmp->add_option("--threads", cfg.threads, "worker threads");
    cmp->add_option("--table", cfg.table_in, "reuse a USS1 table file");
    cmp->add_option("--orientation", cfg.orientation, "up-first | best-of-both");
    cmp->add_option("--json", cfg.json_out, "write report JSON");
    cmp->add_option("--csv", cfg.csv_out, "write flat CSV row");

    auto* rep = app.add_subcommand("report", "conjecture diagnostics for an optimal batch");
    add_spec(rep);
    rep->add_option("--reps", cfg.reps, "online runs (>= 1000)");
    rep->add_option("--seed", cfg.seed, "base seed");
    rep->add_option("--c-slack", cfg.c_slack, "slack constant in the lower bound");
    rep->add_option("--threads", cfg.threads, "worker threads");
    rep->add_option("--table", cfg.table_in, "reuse a USS1 table file");
    rep->add_option("--json", cfg.json_out, "write report JSON");
    rep->add_option("--csv", cfg.csv_out, "write flat CSV row");

    try {
        // CLI11 consumes the vector back to front.
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (solve->parsed()) { cfg.command = "solve"; return cmd_solve(cfg); }
        if (sim->parsed()) { cfg.command = "simulate"; return cmd_simulate(cfg); }
        if (off->parsed()) { cfg.command = "offline"; return cmd_offline(cfg); }
        if (cmp->parsed()) { cfg.command = "compare"; return cmd_compare(cfg); }
        cfg.command = "report";
        return cmd_report(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

inline int run(int argc, const char* const* argv) {
    return run(std::vector<std::string>(argv + 1, argv + argc));
}

} // namespace uss::cli
