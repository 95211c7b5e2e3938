#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ige/errors.hpp"
#include "ige/estimator.hpp"
#include "ige/harness.hpp"
#include "ige/linalg.hpp"
#include "ige/rng.hpp"

using namespace ige;

namespace {

Schedule01 all_on(int nb, int E) { return Schedule01::Ones(nb, E); }

}  // namespace

TEST_CASE("1x1 power matrix") {
    Schedule01 s = all_on(1, 1);
    PowerMatrix pm = build_power_matrix(s, 1, PowerStrategy::kRandom, 1, 800, 1200);
    CHECK(pm.P(0, 0) >= 800.0);
    CHECK(pm.P(0, 0) <= 1200.0);
}

TEST_CASE("random 18x16 matrix is full rank (SVD oracle)") {
    Schedule01 s = all_on(18, 16);
    PowerMatrix pm = build_power_matrix(s, 18, PowerStrategy::kRandom, 3, 800, 1200);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(pm.P);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-9 * svd.singularValues()(0)) ++rank;
    CHECK(rank == 16);
}

TEST_CASE("append-singular surplus never worsens the square base (dense pattern)") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        Schedule01 s = all_on(18, 16);
        PowerMatrix pm =
            build_power_matrix(s, 18, PowerStrategy::kAppendSingular, seed, 800, 1200);
        const double k_full = condition_number(pm.P);
        const double k_base = condition_number(pm.P.topRows(16));
        CHECK(k_full <= k_base * (1.0 + 1e-9));
        // monotone along the appended sequence
        const double k17 = condition_number(pm.P.topRows(17));
        CHECK(k17 <= k_base * (1.0 + 1e-9));
        CHECK(k_full <= k17 * (1.0 + 1e-9));
    }
}

TEST_CASE("condition number basics") {
    CHECK(condition_number(Eigen::MatrixXd::Identity(4, 4)) == doctest::Approx(1.0));
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 1.0;
    CHECK(condition_number(d) == doctest::Approx(2.0));
    Eigen::MatrixXd sing = Eigen::MatrixXd::Ones(3, 3);
    CHECK_THROWS_AS(condition_number(sing), RankDeficient);
}

TEST_CASE("condition number matches a power-iteration oracle") {
    auto rng = rng_stream(8);
    std::uniform_real_distribution<double> uni(800.0, 1200.0);
    Eigen::MatrixXd P(18, 16);
    for (int i = 0; i < 18; ++i)
        for (int j = 0; j < 16; ++j) P(i, j) = uni(rng);
    // oracle: power iteration on P^T P and on (P^T P)^{-1}
    Eigen::MatrixXd G = P.transpose() * P;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(16).normalized();
    for (int it = 0; it < 4000; ++it) v = (G * v).normalized();
    const double lmax = v.dot(G * v);
    Eigen::MatrixXd Ginv = G.inverse();
    Eigen::VectorXd w = Eigen::VectorXd::Ones(16).normalized();
    for (int it = 0; it < 4000; ++it) w = (Ginv * w).normalized();
    const double lmin = 1.0 / w.dot(Ginv * w);
    const double oracle = std::sqrt(lmax / lmin);
    CHECK(condition_number(P) == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("exact recovery on a consistent noiseless system") {
    auto rng = rng_stream(5);
    std::uniform_real_distribution<double> uni(800.0, 1200.0);
    Eigen::MatrixXd P(10, 8);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 8; ++j) P(i, j) = uni(rng);
    Eigen::VectorXd g(8);
    for (int j = 0; j < 8; ++j) g(j) = std::pow(10.0, -6.0 - 0.3 * j);
    const double w = 1e-9;
    Eigen::VectorXd bbar = P * g;
    bbar.array() += w;
    Eigen::VectorXd ghat = estimate_gains(P, bbar, w);
    CHECK((ghat - g).norm() / g.norm() < 1e-9);
}

TEST_CASE("diagonal system recovers directly") {
    Eigen::MatrixXd P = 1000.0 * Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd g(4);
    g << 1e-6, 2e-6, 3e-6, 4e-6;
    Eigen::VectorXd bbar = 1000.0 * g;
    bbar.array() += 0.5e-9;
    Eigen::VectorXd ghat = estimate_gains(P, bbar, 0.5e-9);
    CHECK((ghat - g).norm() < 1e-15);
}

TEST_CASE("negative estimates clip to the smallest positive one") {
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd bbar(3);
    bbar << 1.0, -0.5, 2.0;
    Eigen::VectorXd ghat = estimate_gains(P, bbar, 0.0);
    CHECK(ghat(1) == doctest::Approx(1.0));  // clipped to min positive
    CHECK(ghat.minCoeff() >= 1.0);
}

TEST_CASE("Theorem-3 inequality holds for random perturbations") {
    auto rng = rng_stream(21);
    std::uniform_real_distribution<double> uni(800.0, 1200.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd P(12, 10);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 10; ++j) P(i, j) = uni(rng);
    Eigen::VectorXd g(10);
    for (int j = 0; j < 10; ++j) g(j) = std::abs(gauss(rng)) * 1e-6 + 1e-8;
    const double kappa = condition_number(P);
    Eigen::VectorXd b = P * g;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd f(12);
        for (int i = 0; i < 12; ++i) f(i) = gauss(rng) * 1e-7 * b.norm();
        Eigen::VectorXd ghat = solve_least_squares(P, b + f);
        const double lhs = (ghat - g).norm();
        const double rhs = kappa * g.norm() * (f.norm() / b.norm());
        CHECK(lhs <= rhs * (1.0 + 1e-9));
    }
}

TEST_CASE("per-pair bound covers empirical errors at the stated rate") {
    // Monte-Carlo guarantee check on a synthetic linear system with additive
    // measurement noise of known scale.
    auto rng = rng_stream(33);
    std::uniform_real_distribution<double> uni(800.0, 1200.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int nb = 12, E = 10;
    Eigen::MatrixXd P(nb, E);
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < E; ++j) P(i, j) = uni(rng);
    Eigen::MatrixXd pinv = left_inverse(P);
    Eigen::VectorXd g(E);
    for (int j = 0; j < E; ++j) g(j) = std::abs(gauss(rng)) * 1e-6 + 1e-7;
    Eigen::VectorXd b = P * g;

    // Pretend the measurement error per block concentrates within A_sum with
    // probability 1 - beta: draw f accordingly and count bound violations.
    ErrorBoundParams ebp = ErrorBoundParams::equal_split(0.05, 1000.0, 1e-9);
    Eigen::VectorXd s2 = Eigen::VectorXd::Constant(E, 500.0);
    Eigen::Vector3d A = compute_A_terms(g, g.cwiseProduct(g), s2, 0, ebp, 1024);
    const double fscale = A.sum() / std::sqrt(double(nb));
    int viol = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        Eigen::VectorXd f(nb);
        for (int i = 0; i < nb; ++i) f(i) = gauss(rng) * fscale * 0.3;
        Eigen::VectorXd ghat = solve_least_squares(P, b + f);
        for (int j = 0; j < E; ++j) {
            const double bound = per_pair_error_bound(pinv, j, A, ebp).delta;
            if (std::abs(ghat(j) - g(j)) > bound) ++viol;
        }
    }
    CHECK(double(viol) / double(trials * E) <= ebp.composite_beta());
}

TEST_CASE("noiseless expected-power injection recovers gains exactly") {
    ScenarioConfig cfg;
    cfg.num_nodes = 5;
    cfg.area_side = 80.0;
    cfg.antennas = 16;
    Scenario sc = build_scenario(cfg, 4);
    IgeOptions opt;
    opt.frame = cfg.frame_config();
    opt.noiseless_expected_power = true;
    opt.seed = 4;
    GraphEstimate est = run_ige(sc.topo, sc.channels, opt);
    const double rel = (est.g_hat - est.g_true).norm() / est.g_true.norm();
    CHECK(rel < 1e-9);
}

TEST_CASE("end-to-end waveform measurement round: accurate significant gains") {
    ScenarioConfig cfg;  // 9 nodes, 16 links, defaults
    cfg.n_subcarriers = 1024;
    Scenario sc = build_scenario(cfg, 12);
    IgeOptions opt;
    opt.frame = cfg.frame_config();
    opt.seed = 12;
    GraphEstimate est = run_ige(sc.topo, sc.channels, opt);
    const double gmax = est.g_true.maxCoeff();
    std::vector<double> errs;
    const int E = sc.topo.num_links();
    for (int j = 0; j < E; ++j)
        for (int i = 0; i < E; ++i) {
            if (est.g_true(j, i) < gmax * 1e-3) continue;  // significant pairs
            errs.push_back(std::abs(
                10.0 * std::log10(est.g_hat(j, i) / est.g_true(j, i))));
        }
    std::sort(errs.begin(), errs.end());
    CHECK(errs[errs.size() / 2] < 0.8);  // median under the paper-scale figure
    CHECK(errs.back() < 5.0);
    CHECK(est.kappa > 1.0);
}

TEST_CASE("estimation error in dB is invariant to a global power rescale") {
    auto rng = rng_stream(77);
    std::uniform_real_distribution<double> uni(800.0, 1200.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd P(10, 8);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 8; ++j) P(i, j) = uni(rng);
    Eigen::VectorXd g(8);
    for (int j = 0; j < 8; ++j) g(j) = std::abs(gauss(rng)) * 1e-6 + 1e-8;
    Eigen::VectorXd f(10);
    for (int i = 0; i < 10; ++i) f(i) = gauss(rng) * 1e-6;
    Eigen::VectorXd bbar = P * g + f;
    Eigen::VectorXd ghat1 = estimate_gains(P, bbar, 0.0);
    const double c = 37.5;
    Eigen::VectorXd ghat2 = estimate_gains(c * P, c * bbar, 0.0);
    for (int j = 0; j < 8; ++j)
        CHECK(std::log10(ghat1(j)) == doctest::Approx(std::log10(ghat2(j))).epsilon(1e-10));
}

TEST_CASE("coloring schedule honors per-node constraints and covers links") {
    Topology t = generate_topology(6, 9, 100.0, 15.0, 100.0);
    const int E = t.num_links();
    Schedule01 s = build_ige_schedule(t, E + 2);
    for (int b = 0; b < s.rows(); ++b) {
        std::vector<int> out(t.nodes.size(), 0), in(t.nodes.size(), 0);
        for (int l = 0; l < E; ++l) {
            if (!s(b, l)) continue;
            CHECK(++out[t.links[l].src] <= 1);
            CHECK(++in[t.links[l].dst] <= 1);
        }
    }
    for (int l = 0; l < E; ++l) {
        int cnt = 0;
        for (int b = 0; b < s.rows(); ++b) cnt += s(b, l);
        CHECK(cnt >= 1);
    }
}
