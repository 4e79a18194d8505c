#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>
#include <vector>

#include "uss/bellman.hpp"
#include "uss/policy.hpp"
#include "uss/simulate.hpp"

using namespace uss;
using Catch::Approx;

TEST_CASE("injected stream, monotone acceptance") {
    const auto vt = bellman::solve_value_table({2, 1, 1001});
    const auto tt = bellman::compute_thresholds(vt);
    const auto pol = policy::Policy::optimal(tt);

    const std::vector<double> xs{0.3, 0.6};
    const auto traj = simulate::run_trajectory(pol, vt, xs);
    REQUIRE(traj.steps.size() == 2);
    CHECK(traj.final_length == 2);
    CHECK(traj.steps[0].accepted);
    CHECK(traj.steps[1].accepted);
    CHECK(traj.steps[0].k_after == 0);
    CHECK(traj.steps[1].k_after == 0);
    CHECK(simulate::feasible(traj));

    // Y_0 = v_1(0,0) and Y_n = selected length.
    CHECK(traj.steps[0].y - traj.steps[0].d_inc ==
          Approx(bellman::value_at(vt, 1, 0.0, 0)).margin(1e-12));
    CHECK(traj.steps[1].y == Approx(2.0).margin(1e-12));

    CHECK_THROWS_AS(simulate::run_trajectory(pol, vt, std::vector<double>{0.5}),
                    std::invalid_argument);
}

TEST_CASE("injected stream with a turn") {
    const auto vt = bellman::solve_value_table({3, 1, 1001});
    const auto tt = bellman::compute_thresholds(vt);
    const auto pol = policy::Policy::optimal(tt);

    // With three steps every observation is acceptable from (0,0): the run
    // takes 0.5, rides up to 0.9, then turns down onto 0.4.
    const std::vector<double> xs{0.5, 0.9, 0.4};
    const auto traj = simulate::run_trajectory(pol, vt, xs);
    CHECK(traj.final_length == 3);
    CHECK(traj.steps[0].k_after == 0);
    CHECK(traj.steps[1].k_after == 0);
    CHECK(traj.steps[2].k_after == 1);
    CHECK(simulate::feasible(traj));

    const auto [sum_sq, g] = simulate::telescoping_statistic(traj);
    CHECK(sum_sq == Approx(3.0).margin(1e-9));   // all three intervals are [0,1]
    CHECK(g == Approx(1.6).margin(1e-12));       // 2 - 0.4

    // Terminal bookkeeping value is defined for d = 1 only.
    const auto vt0 = bellman::solve_value_table({1, 0, 101});
    const auto tt0 = bellman::compute_thresholds(vt0);
    const auto traj0 = simulate::run_trajectory(policy::Policy::optimal(tt0), vt0,
                                                std::vector<double>{0.7});
    CHECK(traj0.final_length == 1);
    CHECK_THROWS_AS(simulate::telescoping_statistic(traj0), std::invalid_argument);
}

TEST_CASE("telescoping sum over empty intervals is zero") {
    simulate::Trajectory traj;
    traj.spec = bellman::ProblemSpec{2, 1, 11};
    traj.steps.push_back({0.4, 0.2, 0.2, false, 0.2, 1, 0.0, 0.0});
    traj.steps.push_back({0.9, 0.2, 0.2, false, 0.2, 1, 0.0, 0.0});
    const auto [sum_sq, g] = simulate::telescoping_statistic(traj);
    CHECK(sum_sq == 0.0);
    CHECK(g == Approx(1.8));
}

TEST_CASE("seeded runs are reproducible") {
    const auto vt = bellman::solve_value_table({50, 1, 201});
    const auto tt = bellman::compute_thresholds(vt);
    const auto pol = policy::Policy::optimal(tt);

    const auto t1 = simulate::run_trajectory(pol, vt, 12345);
    const auto t2 = simulate::run_trajectory(pol, vt, 12345);
    REQUIRE(t1.steps.size() == t2.steps.size());
    for (std::size_t j = 0; j < t1.steps.size(); ++j) {
        CHECK(t1.steps[j].x == t2.steps[j].x);
        CHECK(t1.steps[j].y == t2.steps[j].y);
        CHECK(t1.steps[j].accepted == t2.steps[j].accepted);
    }
    const auto t3 = simulate::run_trajectory(pol, vt, 54321);
    bool differs = false;
    for (std::size_t j = 0; j < t1.steps.size(); ++j)
        differs = differs || t1.steps[j].x != t3.steps[j].x;
    CHECK(differs);
}

TEST_CASE("batch summaries are deterministic and thread-invariant") {
    const auto vt = bellman::solve_value_table({60, 1, 201});
    const auto tt = bellman::compute_thresholds(vt);
    const auto pol = policy::Policy::optimal(tt);

    const auto s1 = simulate::run_batch(pol, vt, 300, 777, 1);
    const auto s2 = simulate::run_batch(pol, vt, 300, 777, 1);
    const auto s4 = simulate::run_batch(pol, vt, 300, 777, 4);
    REQUIRE(s1.lengths.size() == 300);
    for (const auto* other : {&s2, &s4}) {
        CHECK(s1.sample_mean == other->sample_mean);
        CHECK(s1.sample_variance == other->sample_variance);
        CHECK(s1.telescoping_mean == other->telescoping_mean);
        CHECK(s1.max_abs_increment == other->max_abs_increment);
        for (std::size_t j = 0; j < s1.lengths.size(); ++j) {
            CHECK(s1.lengths[j] == other->lengths[j]);
            CHECK(s1.sum_sq_increments[j] == other->sum_sq_increments[j]);
        }
    }

    const auto one = simulate::run_batch(pol, vt, 1, 99, 1);
    CHECK(one.sample_variance == 0.0);
    CHECK(one.stderr_mean == 0.0);
    CHECK(one.sample_mean == one.lengths[0]);

    CHECK_THROWS_AS(simulate::run_batch(pol, vt, 0, 1, 1), std::invalid_argument);
}

TEST_CASE("martingale increments and variance identity") {
    const auto vt = bellman::solve_value_table({200, 1, 501});
    const auto tt = bellman::compute_thresholds(vt);
    const auto pol = policy::Policy::optimal(tt);

    const auto batch = simulate::run_batch(pol, vt, 2000, 424242, 4);
    CHECK(batch.all_feasible);

    // Hard bound: one selection plus twice the interpolation slack.
    const double bound = 1.0 + 2.0 / (vt.spec.m - 1);
    CHECK(batch.max_abs_increment <= bound);

    // Var[length] equals E[sum of squared increments] for a martingale with
    // Y_n = length; compare at four combined standard errors.
    const auto inc = stats::moments4(batch.sum_sq_increments);
    const double se_inc = std::sqrt(inc.variance / batch.reps);
    const double se_var =
        batch.sample_variance * std::sqrt(2.0 / (batch.reps - 1));
    const double tol = 4.0 * std::sqrt(se_inc * se_inc + se_var * se_var);
    CHECK(std::abs(batch.sample_variance - inc.mean) <= tol);

    // Terminal bookkeeping value stays in [0,2]; the telescoping sum is
    // bounded by 4 in expectation (individual runs may exceed it).
    REQUIRE(batch.g_terminal.size() == static_cast<std::size_t>(batch.reps));
    for (double g : batch.g_terminal) {
        CHECK(g >= 0.0);
        CHECK(g <= 2.0);
    }
    CHECK(batch.telescoping_mean < 4.0);
    for (double t : batch.telescoping) {
        CHECK(t >= 0.0);
        CHECK(t <= batch.spec.n);
    }
}

TEST_CASE("g_terminal is reported only for one turn") {
    const auto vt = bellman::solve_value_table({30, 0, 201});
    const auto tt = bellman::compute_thresholds(vt);
    const auto batch = simulate::run_batch(policy::Policy::optimal(tt), vt, 50, 5, 1);
    CHECK(batch.g_terminal.empty());
    CHECK(std::isnan(batch.g_terminal_mean));
    CHECK(batch.all_feasible);
}

TEST_CASE("heuristic batches stay feasible") {
    const auto vt = bellman::solve_value_table({90, 2, 201});
    const auto batch = simulate::run_batch(policy::Policy::heuristic(), vt, 500, 31337, 2);
    CHECK(batch.all_feasible);
    CHECK(batch.sample_mean > 0.0);
}

TEST_CASE("increments are conditionally centered within state bins") {
    const auto vt = bellman::solve_value_table({50, 1, 201});
    const auto tt = bellman::compute_thresholds(vt);
    const auto pol = policy::Policy::optimal(tt);

    struct Cell {
        double sum = 0.0, sumsq = 0.0;
        int cnt = 0;
    };
    std::map<std::tuple<int, int, int>, Cell> cells;   // (step, s-bin of 0.05, k)

    const int reps = 20000;
    for (int r = 0; r < reps; ++r) {
        const auto traj = simulate::run_trajectory(pol, vt, rng::run_seed(600613, r));
        double s_before = 0.0;
        int k_before = 0;
        for (std::size_t t = 0; t < traj.steps.size(); ++t) {
            const auto& st = traj.steps[t];
            const int bin = std::min(19, static_cast<int>(s_before * 20.0));
            auto& c = cells[{static_cast<int>(t) + 1, bin, k_before}];
            c.sum += st.d_inc;
            c.sumsq += st.d_inc * st.d_inc;
            ++c.cnt;
            s_before = st.s_after;
            k_before = st.k_after;
        }
    }

    int tested = 0;
    for (const auto& [key, c] : cells) {
        if (c.cnt < 200) continue;
        ++tested;
        const double mean = c.sum / c.cnt;
        const double var = std::max(0.0, (c.sumsq - c.cnt * mean * mean) / (c.cnt - 1));
        const double sd = std::sqrt(var);
        CHECK(std::abs(mean) <= 4.0 * sd / std::sqrt(double(c.cnt)) + 1e-9);
    }
    CHECK(tested > 100);   // the sweep actually exercised many populated cells
}

TEST_CASE("trajectory CSV dump") {
    const auto vt = bellman::solve_value_table({5, 1, 101});
    const auto tt = bellman::compute_thresholds(vt);
    const auto traj = simulate::run_trajectory(policy::Policy::optimal(tt), vt, 2024);

    const std::string path = "traj_dump_test.csv";
    simulate::write_trajectory_csv(path, traj);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "step,x,a,b,accepted,s,k,y,d_inc");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 5);
    in.close();
    std::remove(path.c_str());
}

TEST_CASE("unsolved tables are rejected") {
    bellman::ValueTable unsolved;
    unsolved.spec = bellman::ProblemSpec{2, 0, 11};
    const auto pol = policy::Policy::heuristic();
    CHECK_THROWS_AS(simulate::run_trajectory(pol, unsolved, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate::run_batch(pol, unsolved, 10, 1, 1), std::invalid_argument);
}
