#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uss/cli.hpp"

namespace {

struct CliResult {
    int exit_code = 0;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    auto* old_out = std::cout.rdbuf(out.rdbuf());
    auto* old_err = std::cerr.rdbuf(err.rdbuf());
    CliResult r;
    try {
        r.exit_code = uss::cli::run(args);
    } catch (...) {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
        throw;
    }
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Cleanup {
    std::vector<std::string> paths;
    ~Cleanup() {
        for (const auto& p : paths) std::remove(p.c_str());
    }
};

} // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run_cli({}).exit_code != 0);
    CHECK(run_cli({"solve", "--bogus"}).exit_code == 2);
    CHECK(run_cli({"frobnicate"}).exit_code == 2);
    CHECK(run_cli({"solve", "--n", "0"}).exit_code == 2);
    CHECK(run_cli({"simulate", "--reps", "5"}).exit_code == 2);          // --table required
    CHECK(run_cli({"simulate", "--table", "/nonexistent.uss"}).exit_code == 2);
    CHECK(run_cli({"solve", "--n", "2", "--d", "0", "--grid", "101",
                   "--orientation", "best-of-both"}).exit_code == 2);
}

TEST_CASE("solve prints the value and its bounds") {
    const auto r = run_cli({"solve", "--n", "2", "--d", "0", "--grid", "1001"});
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("v1(0,0) = 1.500000") != std::string::npos);
    CHECK(r.out.find("upper_bound = 2.000000") != std::string::npos);
    CHECK(r.out.find("lower_bound = ") != std::string::npos);

    const auto r2 = run_cli({"solve", "--n", "1", "--d", "2", "--grid", "101",
                             "--orientation", "up-first"});
    CHECK(r2.exit_code == 0);
    CHECK(r2.out.find("v1(0,0) = 1.000000") != std::string::npos);
}

TEST_CASE("solve then simulate through a table file") {
    Cleanup files{{"cli_tbl.uss", "cli_sum1.json", "cli_sum2.json",
                   "cli_traj.csv.0", "cli_traj.csv.1"}};

    auto r = run_cli({"solve", "--n", "30", "--d", "1", "--grid", "201",
                      "--out", "cli_tbl.uss"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("tables written to cli_tbl.uss") != std::string::npos);

    r = run_cli({"simulate", "--table", "cli_tbl.uss", "--reps", "400", "--seed", "42",
                 "--threads", "2", "--json", "cli_sum1.json",
                 "--traj-csv", "cli_traj.csv", "--traj-count", "2"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("sample_mean = ") != std::string::npos);
    CHECK(r.out.find("g_terminal_mean = ") != std::string::npos);

    // Same flags give a byte-identical report; threads don't matter.
    const auto r2 = run_cli({"simulate", "--table", "cli_tbl.uss", "--reps", "400",
                             "--seed", "42", "--threads", "1", "--json", "cli_sum2.json"});
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp("cli_sum1.json") == slurp("cli_sum2.json"));

    const auto j = nlohmann::json::parse(slurp("cli_sum1.json"));
    CHECK(j.at("format") == "uss-report-1");
    CHECK(j.at("reps") == 400);
    CHECK(j.at("seed") == 42);
    CHECK(j.at("spec").at("n") == 30);
    CHECK(j.at("all_feasible") == true);
    CHECK(j.contains("g_terminal_mean"));
    CHECK_FALSE(j.contains("timestamp"));

    // Trajectory dumps: one file per run, suffixed by run index.
    const auto t0 = slurp("cli_traj.csv.0");
    CHECK(t0.rfind("step,x,a,b,accepted,s,k,y,d_inc\n", 0) == 0);
    CHECK(slurp("cli_traj.csv.1") != t0);

    CHECK(run_cli({"simulate", "--table", "cli_tbl.uss", "--policy", "nonsense"}).exit_code ==
          2);
    const auto rh = run_cli({"simulate", "--table", "cli_tbl.uss", "--reps", "200",
                             "--policy", "heuristic"});
    CHECK(rh.exit_code == 0);

    const auto r1 = run_cli({"simulate", "--table", "cli_tbl.uss", "--reps", "1"});
    CHECK(r1.exit_code == 0);
    CHECK(r1.out.find("sample_variance = 0.000000") != std::string::npos);
}

TEST_CASE("compare on the single-observation problem") {
    Cleanup files{{"cli_cmp1.json"}};
    const auto r = run_cli({"compare", "--n", "1", "--d", "0", "--grid", "51",
                            "--reps", "50", "--offline-reps", "20",
                            "--json", "cli_cmp1.json"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("prophet_ratio = 1.000000") != std::string::npos);
    CHECK(r.out.find("mc_mean = 1.000000") != std::string::npos);

    const auto j = nlohmann::json::parse(slurp("cli_cmp1.json"));
    CHECK(j.at("prophet_ratio") == 1.0);
    CHECK(j.at("violations").empty());
    CHECK(j.at("command") == "compare");
}

TEST_CASE("compare batches online against the prophet") {
    Cleanup files{{"cli_cmp.json", "cli_cmp.csv", "cli_tbl2.uss"}};
    const auto r = run_cli({"compare", "--n", "100", "--d", "1", "--grid", "301",
                            "--reps", "1500", "--offline-reps", "300", "--seed", "7",
                            "--threads", "2", "--json", "cli_cmp.json",
                            "--csv", "cli_cmp.csv"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("solver_value = ") != std::string::npos);
    CHECK(r.out.find("prophet_ratio = ") != std::string::npos);

    const auto j = nlohmann::json::parse(slurp("cli_cmp.json"));
    CHECK(j.at("violations").empty());
    CHECK(j.at("prophet_ratio").get<double>() > 1.0);
    CHECK(j.at("orientation") == "best-of-both");

    const auto csv = slurp("cli_cmp.csv");
    CHECK(csv.rfind("n,d,policy,solver_value,", 0) == 0);
    CHECK(csv.find("\n100,1,optimal,") != std::string::npos);

    // Reusing a table requires matching spec flags.
    REQUIRE(run_cli({"solve", "--n", "20", "--d", "1", "--grid", "101",
                     "--out", "cli_tbl2.uss"}).exit_code == 0);
    CHECK(run_cli({"compare", "--table", "cli_tbl2.uss", "--n", "21", "--d", "1",
                   "--grid", "101", "--reps", "50"}).exit_code == 2);
    CHECK(run_cli({"compare", "--table", "cli_tbl2.uss", "--n", "20", "--d", "1",
                   "--grid", "101", "--reps", "50", "--offline-reps", "20"}).exit_code == 0);
}

TEST_CASE("offline file mode reports every oracle") {
    Cleanup files{{"cli_seq.csv", "cli_off.json"}};
    {
        std::ofstream out("cli_seq.csv");
        out << "0.5\n0.1\n0.9\n";
    }
    const auto r = run_cli({"offline", "--input", "cli_seq.csv", "--d", "2",
                            "--json", "cli_off.json"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("lis = 2") != std::string::npos);
    CHECK(r.out.find("u_n = 2  d_n = 3  l_n = 3") != std::string::npos);
    CHECK(r.out.find("dmodal[1] = 2") != std::string::npos);

    const auto j = nlohmann::json::parse(slurp("cli_off.json"));
    CHECK(j.at("l_n") == 3);
    CHECK(j.at("dmodal").at("0") == 2);
    CHECK(j.at("unimodal_guarantee") == 3);
}

TEST_CASE("offline generated mode checks the guarantees") {
    const auto r = run_cli({"offline", "--n", "40", "--d", "1", "--reps", "100",
                            "--seed", "5"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("mean_length = ") != std::string::npos);
    CHECK(r.out.find("asymptote 2*sqrt(2n) = ") != std::string::npos);
    CHECK(r.out.find("unimodal_guarantee = 11 (held)") != std::string::npos);
}

TEST_CASE("report prints conjecture diagnostics") {
    Cleanup files{{"cli_rep.json", "cli_rep.csv"}};
    const auto r = run_cli({"report", "--n", "100", "--d", "0", "--grid", "301",
                            "--reps", "1000", "--seed", "13", "--threads", "2",
                            "--json", "cli_rep.json", "--csv", "cli_rep.csv"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("var_over_mean = ") != std::string::npos);
    CHECK(r.out.find("ks_distance = ") != std::string::npos);
    CHECK(r.out.find("d0_variance_lower_check = pass") != std::string::npos);

    const auto j = nlohmann::json::parse(slurp("cli_rep.json"));
    CHECK(j.at("command") == "report");
    CHECK(j.at("var_le_mean") == true);
    CHECK(j.at("d0_variance_lower_check") == true);
    CHECK(j.at("var_over_mean_ci").size() == 2);

    const auto csv = slurp("cli_rep.csv");
    CHECK(csv.rfind("n,d,policy,", 0) == 0);
    CHECK(csv.find(",,,,,,,,") != std::string::npos);   // bound columns stay empty

    // Too few runs for the bootstrap is a configuration error.
    CHECK(run_cli({"report", "--n", "50", "--d", "1", "--grid", "101",
                   "--reps", "200"}).exit_code == 2);
}
