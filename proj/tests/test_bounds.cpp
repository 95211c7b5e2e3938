#include <doctest.h>

#include <cmath>

#include "ige/bounds.hpp"
#include "ige/errors.hpp"
#include "ige/linalg.hpp"

using namespace ige;

TEST_CASE("equal-energy constellations short-circuit to zero") {
    QamConstellation q(4);
    const double b =
        tx_power_deviation_bound(DeviationBoundInputs::from_qam(q, 1024, 72, 10, 0.01));
    CHECK(b == 0.0);
}

TEST_CASE("bad tolerance raises") {
    QamConstellation q(16);
    auto in = DeviationBoundInputs::from_qam(q, 1024, 72, 10, 0.0);
    CHECK_THROWS_AS(tx_power_deviation_bound(in), BadTolerance);
}

TEST_CASE("16-QAM threshold for delta=0.01 lies in the expected window") {
    QamConstellation q(16);
    const int nk = deviation_bound_symbol_threshold(q, 1024, 72, 0.01, 0.01);
    // independent scipy evaluation of the same two-term bound gives 77
    CHECK(nk >= 75);
    CHECK(nk <= 90);
    CHECK(nk == 77);
}

TEST_CASE("64-QAM threshold sits near 86 symbols") {
    QamConstellation q(64);
    const int nk = deviation_bound_symbol_threshold(q, 1024, 72, 0.01, 0.01);
    CHECK(std::abs(nk - 86) <= 9);  // scipy oracle: 87
    CHECK(nk == 87);
}

TEST_CASE("256-QAM behaves like 64-QAM") {
    QamConstellation q(256);
    const int nk = deviation_bound_symbol_threshold(q, 1024, 72, 0.01, 0.01);
    CHECK(nk == 89);  // scipy oracle
}

TEST_CASE("relaxing delta to 0.02 slashes the requirement") {
    QamConstellation q(16);
    const int nk = deviation_bound_symbol_threshold(q, 1024, 72, 0.02, 0.01);
    CHECK(nk == 20);  // scipy oracle
}

TEST_CASE("bound is monotone non-increasing in the symbol count") {
    QamConstellation q(16);
    double prev = 2.0;
    for (int nk = 1; nk <= 120; nk += 7) {
        const double b =
            tx_power_deviation_bound(DeviationBoundInputs::from_qam(q, 1024, 72, nk, 0.01));
        CHECK(b <= prev + 1e-12);
        prev = b;
    }
}

TEST_CASE("A3 with unit variance, 100 samples and 1 percent beta is one") {
    ErrorBoundParams p;
    p.m_samples << 100.0, 100.0, 100.0;
    p.beta << 0.01, 0.01, 0.01;
    p.noise_mw = 1.0;
    Eigen::VectorXd g(1), g2(1), s2(1);
    g << 0.0;
    g2 << 0.0;
    s2 << 1.0;
    Eigen::Vector3d A = compute_A_terms(g, g2, s2, 0, p, 1024);
    CHECK(A(2) == doctest::Approx(1.0).epsilon(1e-12));
    // single link: the cross-term double sum is empty
    CHECK(A(0) == 0.0);
}

TEST_CASE("two-link A terms match hand arithmetic") {
    ErrorBoundParams p;
    p.m_samples << 10.0, 20.0, 5.0;
    p.beta << 0.1, 0.2, 0.5;
    p.noise_mw = 2.0;
    Eigen::VectorXd g(2), g2(2), s2(2);
    g << 3.0, 4.0;
    g2 << 9.5, 16.25;
    s2 << 0.5, 0.25;
    const int nc = 4;
    Eigen::Vector3d A = compute_A_terms(g, g2, s2, 0, p, nc);
    // A1^2 = 4/(m1 b1) * 2 * s0 s1 g0 g1 = 4 * (2*0.5*0.25*12)
    const double a1sq = 4.0 / (10.0 * 0.1) * 2.0 * (0.5 * 0.25 * 3.0 * 4.0);
    CHECK(A(0) * A(0) == doctest::Approx(a1sq).epsilon(1e-12));
    // sigma^4 = (sigma^2)^2: 0.25 for link 0, 0.0625 for link 1
    const double a2sq =
        (9.5 * (4 * 0.25 - 4 * 0.25 / nc) + 16.25 * (4 * 0.0625 - 4 * 0.0625 / nc)) /
        (20.0 * 0.2);
    CHECK(A(1) * A(1) == doctest::Approx(a2sq).epsilon(1e-9));
    CHECK(A(2) * A(2) == doctest::Approx(4.0 / (5.0 * 0.5)).epsilon(1e-12));
}

TEST_CASE("per-link bound arithmetic and degenerate cases") {
    CHECK(per_link_error_bound(1.0, 1.0, 0.1) == doctest::Approx(0.1));
    CHECK(per_link_error_bound(5.0, 2.0, 0.0) == 0.0);
    CHECK_THROWS_AS(per_link_error_bound(-1.0, 1.0, 1.0), BadTolerance);
}

TEST_CASE("per-pair bound: orthonormal rows give the plain A sum") {
    Eigen::MatrixXd P = 4.0 * Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd pinv = left_inverse(P);  // rows of norm 1/4
    ErrorBoundParams p = ErrorBoundParams::equal_split(0.05, 100.0, 1e-9);
    Eigen::Vector3d A{1.0, 2.0, 3.0};
    PairBound pb = per_pair_error_bound(pinv, 1, A, p);
    CHECK(pb.delta == doctest::Approx(6.0 / 4.0).epsilon(1e-12));
    CHECK(pb.guarantee == doctest::Approx(0.95).epsilon(1e-12));
    Eigen::Vector3d zero = Eigen::Vector3d::Zero();
    CHECK(per_pair_error_bound(pinv, 0, zero, p).delta == 0.0);
}

TEST_CASE("equal beta split composes back to the requested total") {
    ErrorBoundParams p = ErrorBoundParams::equal_split(0.05, 50.0, 0.0);
    CHECK(p.composite_beta() == doctest::Approx(0.05).epsilon(1e-12));
}
