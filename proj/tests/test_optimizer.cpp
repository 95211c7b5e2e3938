#include <doctest.h>

#include <cmath>
#include <random>

#include "ige/errors.hpp"
#include "ige/harness.hpp"
#include "ige/optimizer.hpp"
#include "ige/rng.hpp"

using namespace ige;

namespace {

// Tiny scheduling instances built from real scenarios (3 nodes -> 4 links).
ScheduleProblem tiny_problem(std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.num_nodes = 3;
    cfg.area_side = 65.0;
    cfg.antennas = 32;
    Scenario sc = build_scenario(cfg, seed);
    ScheduleProblem p = make_schedule_problem(cfg, sc, nullptr, false);
    return p;
}

}  // namespace

TEST_CASE("sinr_hat arithmetic") {
    Eigen::MatrixXd gh = Eigen::MatrixXd::Zero(1, 1);
    Eigen::MatrixXd db = Eigen::MatrixXd::Zero(1, 1);
    Eigen::VectorXd gc(1), pw(1);
    gc << 2.0;
    pw << 3.0;
    CHECK(sinr_hat(gh, db, gc, pw, 0, 1.0) == doctest::Approx(6.0));
}

TEST_CASE("sinr_hat with zero bounds equals the plain SINR") {
    Eigen::MatrixXd gh(2, 2);
    gh << 1e-6, 2e-9, 3e-9, 2e-6;
    Eigen::MatrixXd db = Eigen::MatrixXd::Zero(2, 2);
    Eigen::VectorXd gc(2), pw(2);
    gc << 1e-6, 2e-6;
    pw << 1000.0, 900.0;
    const double expect = 1e-6 * 1000.0 / (1e-9 + 3e-9 * 900.0);
    CHECK(sinr_hat(gh, db, gc, pw, 0, 1e-9) == doctest::Approx(expect));
    // conservative: adding bounds only lowers it
    Eigen::MatrixXd db2 = Eigen::MatrixXd::Constant(2, 2, 1e-9);
    CHECK(sinr_hat(gh, db2, gc, pw, 0, 1e-9) < expect);
}

TEST_CASE("surrogate inequality holds on random triples with equality at phi = a/d") {
    auto rng = rng_stream(3);
    std::uniform_real_distribution<double> uni(1e-6, 10.0);
    for (int t = 0; t < 100000; ++t) {
        const double d = uni(rng), a = uni(rng), phi = uni(rng);
        const double lhs = d * a;
        const double rhs = phi / 2.0 * d * d + a * a / (2.0 * phi);
        CHECK(lhs <= rhs * (1.0 + 1e-12) + 1e-15);
    }
    const double d = 0.37, a = 2.1;
    const double phi = a / d;
    CHECK(d * a == doctest::Approx(phi / 2.0 * d * d + a * a / (2.0 * phi)).epsilon(1e-12));
}

TEST_CASE("demand feasibility pre-check") {
    ScheduleProblem p = tiny_problem(1);
    CHECK(demand_fits_period(p));
    ScheduleProblem bad = p;
    for (auto& r : bad.required_slots) r = bad.period;  // node loads overflow
    CHECK_FALSE(demand_fits_period(bad));
    CHECK_THROWS_AS(solve_p2_sca(bad), Infeasible);
}

TEST_CASE("two isolated links get minimum-power single slots") {
    // Constructed instance: zero cross gains, one required slot each.
    ScheduleProblem p;
    p.topo.nodes = {{0, 0, 0}, {1, 30, 0}, {2, 0, 30}, {3, 30, 30}};
    p.topo.gateway = 0;
    p.topo.links = {{0, 1}, {2, 3}};
    p.period = 2;
    p.g_ub = Eigen::MatrixXd::Zero(2, 2);
    p.g_comm = Eigen::VectorXd(2);
    p.g_comm << 2e-6, 4e-6;
    p.g_ub(0, 0) = 2e-6;
    p.g_ub(1, 1) = 4e-6;
    p.required_slots = {1, 1};
    p.sinr_min = Eigen::VectorXd(2);
    p.sinr_min << 44.7, 44.7;
    p.noise_mw = 2e-5;  // raise noise so the SINR floor exceeds P_min on both links
    p.p_min_mw = 200.0;
    p.p_max_mw = 1200.0;
    Schedule s = solve_p2_sca(p);
    // closed form: p = gamma W / g per link, one active block each
    const double p0 = 44.7 * 2e-5 / 2e-6, p1 = 44.7 * 2e-5 / 4e-6;
    CHECK(s.total_power == doctest::Approx(p0 + p1).epsilon(1e-3));
    CheckReport rep = check_schedule(p, s.delta, s.P);
    CHECK(rep.ok);
}

TEST_CASE("SCA matches the exhaustive oracle on tiny instances") {
    int solved = 0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        ScheduleProblem p = tiny_problem(seed);
        Schedule s = solve_p2_sca(p);
        OracleResult o = brute_force_oracle(p);
        const double ratio = s.total_power / o.objective;
        CHECK(ratio >= 1.0 - 1e-9);
        CHECK(ratio <= 1.05);
        CheckReport rep = check_schedule(p, s.delta, s.P);
        CHECK(rep.ok);
        ++solved;
    }
    CHECK(solved == 6);
}

TEST_CASE("oracle rejects oversized instances") {
    ScenarioConfig cfg;
    Scenario sc = build_scenario(cfg, 2);
    ScheduleProblem p = make_schedule_problem(cfg, sc, nullptr, false);
    CHECK_THROWS_AS(brute_force_oracle(p), TooLarge);
}

TEST_CASE("oracle on one link equals the closed form") {
    ScheduleProblem p;
    p.topo.nodes = {{0, 0, 0}, {1, 30, 0}};
    p.topo.gateway = 0;
    p.topo.links = {{0, 1}};
    p.period = 1;
    p.g_ub = Eigen::MatrixXd::Constant(1, 1, 3e-6);
    p.g_comm = Eigen::VectorXd::Constant(1, 3e-6);
    p.required_slots = {1};
    p.sinr_min = Eigen::VectorXd::Constant(1, 44.7);
    p.noise_mw = 2e-5;
    p.p_min_mw = 100.0;
    p.p_max_mw = 1200.0;
    OracleResult o = brute_force_oracle(p);
    CHECK(o.objective == doctest::Approx(44.7 * 2e-5 / 3e-6).epsilon(1e-9));
}

TEST_CASE("P3 converges with monotone e and certified kappa") {
    for (std::uint64_t seed : {1, 3, 5}) {
        ScheduleProblem p = tiny_problem(seed);
        Schedule s = solve_p2_sca(p);
        P3Options opt;
        opt.seed = seed;
        P3Result r = solve_p3(p, s.delta, s.total_power, s.P, opt);
        CHECK(r.kappa * r.kappa <= r.gamma * (1.0 + 1e-6));
        for (std::size_t k = 1; k < r.e_history.size(); ++k)
            CHECK(r.e_history[k] <= r.e_history[k - 1] * (1.0 + 1e-6) + 1e-12);
        CHECK(r.iterations <= 15);
        CheckReport rep = check_schedule(p, s.delta, r.power.P);
        CHECK(rep.ok);
        // full rank reached
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(r.power.P);
        CHECK(svd.singularValues()(svd.singularValues().size() - 1) > 1e-6);
    }
}

TEST_CASE("joint schedule is deterministic and evaluation is sane") {
    ScheduleProblem p = tiny_problem(7);
    JointResult a = joint_schedule(p);
    JointResult b = joint_schedule(p);
    CHECK(a.baseline.total_power == doctest::Approx(b.baseline.total_power).epsilon(1e-9));
    CHECK(a.shaped.power.P.sum() == doctest::Approx(b.shaped.power.P.sum()).epsilon(1e-6));
    ScheduleMetrics m = evaluate_schedule(p, a.baseline.delta, a.shaped.power.P,
                                          a.baseline.P);
    CHECK(m.power_overhead >= 0.0);
    CHECK(m.unsatisfied_ratio == 0.0);  // true gains equal planning gains here
    ScheduleMetrics same = evaluate_schedule(p, a.baseline.delta, a.baseline.P, a.baseline.P);
    CHECK(same.power_overhead == doctest::Approx(0.0));
}
