#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "ige/errors.hpp"
#include "ige/harness.hpp"
#include "ige/rng.hpp"
#include "ige/waveform.hpp"

using namespace ige;

TEST_CASE("QAM constellations carry unit average energy") {
    for (int order : {4, 16, 64, 256}) {
        QamConstellation q(order);
        CHECK(2.0 * q.sigma2 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(q.imax > 0.0);
        if (order == 4) CHECK(q.e_abs4 == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(QamConstellation(4).constant_modulus());
    CHECK_FALSE(QamConstellation(16).constant_modulus());
}

TEST_CASE("modulate rejects wrong symbol counts") {
    Eigen::VectorXcd syms(10);
    CHECK_THROWS_AS(modulate(syms, 16, 4, 1.0), BadSymbolCount);
}

TEST_CASE("all-zero symbols modulate to silence") {
    Eigen::VectorXcd syms = Eigen::VectorXcd::Zero(64);
    Eigen::VectorXcd x = modulate(syms, 64, 8, 1.0);
    CHECK(x.norm() == 0.0);
    CHECK(x.size() == 72);
}

TEST_CASE("a single subcarrier gives a pure complex exponential") {
    const int nc = 64, ng = 8, r = 5;
    Eigen::VectorXcd syms = Eigen::VectorXcd::Zero(nc);
    syms(r) = 1.0;
    Eigen::VectorXcd x = modulate(syms, nc, ng, 1.0);
    for (int i = 0; i < nc + ng; ++i)
        CHECK(std::abs(x(i)) == doctest::Approx(1.0 / std::sqrt(double(nc))).epsilon(1e-9));
    // CP is a copy of the tail
    for (int i = 0; i < ng; ++i)
        CHECK(std::abs(x(i) - x(nc + i)) < 1e-12);
    // phase progression at frequency r across the data part
    const std::complex<double> step = x(ng + 1) / x(ng);
    CHECK(std::arg(step) == doctest::Approx(2.0 * M_PI * r / nc).epsilon(1e-9));
}

TEST_CASE("Parseval: data-sample energy equals symbol energy") {
    auto rng = rng_stream(17);
    QamConstellation q(16);
    std::uniform_int_distribution<std::size_t> pick(0, q.levels.size() - 1);
    const int nc = 256, ng = 32;
    Eigen::VectorXcd syms(nc);
    for (int r = 0; r < nc; ++r)
        syms(r) = std::complex<double>(q.levels[pick(rng)], q.levels[pick(rng)]);
    Eigen::VectorXcd x = modulate(syms, nc, ng, 1.0);
    const double data_energy = x.tail(nc).squaredNorm();
    CHECK(data_energy == doctest::Approx(syms.squaredNorm()).epsilon(1e-9));
}

namespace {

struct TinyWorld {
    Topology topo;
    FrameConfig fc;
};

TinyWorld two_link_world() {
    TinyWorld w;
    w.topo.nodes = {{0, 0.0, 0.0}, {1, 30.0, 0.0}, {2, 60.0, 0.0}};
    w.topo.gateway = 1;
    attach_tree_links(w.topo, compute_routes(w.topo));
    w.fc.n_subcarriers = 64;
    w.fc.cp_samples = 8;
    w.fc.symbols_per_slot = 4;
    return w;
}

}  // namespace

TEST_CASE("identity channel, no impairments: y equals x") {
    TinyWorld w = two_link_world();
    const int E = w.topo.num_links();
    QamConstellation q(4);
    std::vector<SampleStream> streams;
    for (int l = 0; l < E; ++l)
        streams.push_back(build_link_stream(l, w.fc, q, {l == 0 ? 1.0 : 0.0}, 5, 0));
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(E, E);
    h(0, 1) = 1.0;  // only link 0's transmitter reaches link 1's receiver
    LinkImpairments imp = draw_impairments(w.topo, 5, 0, 0.0);
    Eigen::VectorXcd y = synthesize_rx(1, w.topo, streams, h, imp, w.fc, 1, 5, 0.0);
    CHECK((y - streams[0].samples.head(y.size())).norm() < 1e-12);
}

TEST_CASE("CFO-only rotation preserves sample magnitudes") {
    TinyWorld w = two_link_world();
    const int E = w.topo.num_links();
    QamConstellation q(4);
    std::vector<SampleStream> streams;
    for (int l = 0; l < E; ++l)
        streams.push_back(build_link_stream(l, w.fc, q, {l == 0 ? 1.0 : 0.0}, 6, 0));
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(E, E);
    h(0, 1) = 1.0;
    LinkImpairments imp = draw_impairments(w.topo, 6, 0, 0.5);
    Eigen::VectorXcd y = synthesize_rx(1, w.topo, streams, h, imp, w.fc, 1, 6, 0.0);
    for (int i = 0; i < y.size(); ++i)
        CHECK(std::abs(y(i)) == doctest::Approx(std::abs(streams[0].samples(i))).epsilon(1e-9));
}

TEST_CASE("two shifted sources match a naive superposition oracle") {
    TinyWorld w = two_link_world();
    const int E = w.topo.num_links();
    QamConstellation q(16);
    const int lead = 16;
    std::vector<double> powers{1.0, 0.7};
    std::vector<SampleStream> streams;
    for (int l = 0; l < E; ++l) {
        std::vector<double> p(2, 0.0);
        if (l < 2) p = {powers[l], powers[l] * 0.5};
        streams.push_back(build_link_stream(l, w.fc, q, p, 7, lead));
    }
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(E, E);
    h(0, 1) = std::complex<double>(0.3, -0.2);
    h(1, 1) = std::complex<double>(-0.1, 0.05);
    LinkImpairments imp;
    imp.timing_offset = {3, 11, 0, 0};
    imp.node_clock = {0.2, -0.1, 0.05};
    Eigen::VectorXcd y = synthesize_rx(1, w.topo, streams, h, imp, w.fc, 2, 7, 0.0);

    // naive double loop oracle
    const int m = w.fc.samples_per_block();
    const int rx_node = w.topo.links[1].dst;
    for (int i = 0; i < 2 * m; i += 97) {
        std::complex<double> acc = 0.0;
        for (int j : {0, 1}) {
            const double phi = imp.node_clock[w.topo.links[j].src] - imp.node_clock[rx_node];
            const std::complex<double> rot =
                std::polar(1.0, 2.0 * M_PI * phi * i / w.fc.n_subcarriers);
            acc += h(j, 1) * rot * streams[j].samples(lead + i - imp.timing_offset[j]);
        }
        CHECK(std::abs(y(i) - acc) < 1e-9);
    }
}

TEST_CASE("block power of a constant-amplitude stream is the squared amplitude") {
    Eigen::VectorXcd s = Eigen::VectorXcd::Constant(100, std::complex<double>(2.0, 0.0));
    Eigen::VectorXd p = measure_block_power(s, 50);
    REQUIRE(p.size() == 2);
    CHECK(p(0) == doctest::Approx(4.0));
    CHECK(p(1) == doctest::Approx(4.0));
    CHECK_THROWS_AS(measure_block_power(s, 0), EmptyBlock);
}

TEST_CASE("QPSK without CP hits the commanded power exactly") {
    FrameConfig fc;
    fc.n_subcarriers = 128;
    fc.cp_samples = 0;  // constant-modulus exactness holds over the data part
    fc.symbols_per_slot = 3;
    QamConstellation q(4);
    SampleStream st = build_link_stream(0, fc, q, {2.5}, 11, 0);
    CHECK(st.average_power[0] == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("16-QAM block powers concentrate within 2 percent") {
    FrameConfig fc;
    fc.n_subcarriers = 1024;
    fc.cp_samples = 72;
    fc.symbols_per_slot = 14;
    QamConstellation q(16);
    int ok = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        SampleStream st = build_link_stream(0, fc, q, {1.0}, 1000 + t, 0);
        if (std::abs(st.average_power[0] - 1.0) < 0.02) ++ok;
    }
    CHECK(double(ok) / trials >= 0.99);
}

TEST_CASE("expected_rx_power arithmetic") {
    Eigen::VectorXd g(2), p(2);
    g << 1.0, 2.0;
    p << 3.0, 4.0;
    CHECK(expected_rx_power(g, p, 0.5) == doctest::Approx(11.5));
    CHECK(expected_rx_power(g, Eigen::VectorXd::Zero(2), 0.5) == doctest::Approx(0.5));
    Eigen::VectorXd bad(3);
    CHECK_THROWS_AS(expected_rx_power(g, bad, 0.0), DimensionMismatch);
}

TEST_CASE("Monte-Carlo mean block power matches the linear model within 1 percent") {
    // Lemma-1 linearity under TO and CFO: average over symbol/noise draws.
    TinyWorld w = two_link_world();
    const int E = w.topo.num_links();
    QamConstellation q(16);
    Eigen::MatrixXcd h(E, E);
    auto rng = rng_stream(99);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < E; ++j)
        for (int i = 0; i < E; ++i) h(j, i) = std::complex<double>(gauss(rng), gauss(rng)) * 0.1;
    const double noise = 0.01;
    Eigen::VectorXd powers(E);
    powers << 1.0, 0.8, 0.6, 0.9;

    const int rx = 2;
    double acc = 0.0;
    const int draws = 200;
    for (int d = 0; d < draws; ++d) {
        std::vector<SampleStream> streams;
        for (int l = 0; l < E; ++l)
            streams.push_back(build_link_stream(l, w.fc, q, {powers(l)}, 3000 + d * 31 + l, 24));
        LinkImpairments imp = draw_impairments(w.topo, 4000 + d, 20, 0.5);
        Eigen::VectorXcd y = synthesize_rx(rx, w.topo, streams, h, imp, w.fc, 1,
                                           5000 + d, noise);
        acc += measure_block_power(y, w.fc.samples_per_block())(0);
    }
    acc /= draws;
    Eigen::VectorXd gains_col(E);
    for (int j = 0; j < E; ++j) gains_col(j) = std::norm(h(j, rx));
    const double model = expected_rx_power(gains_col, powers, noise);
    CHECK(std::abs(acc - model) / model < 0.01);
}

TEST_CASE("doubling one transmitter's power doubles its contribution") {
    TinyWorld w = two_link_world();
    const int E = w.topo.num_links();
    Eigen::MatrixXcd h(E, E);
    h.setZero();
    h(0, 2) = 0.5;
    h(1, 2) = 0.25;
    Eigen::VectorXd g(E);
    for (int j = 0; j < E; ++j) g(j) = std::norm(h(j, 2));
    Eigen::VectorXd p1(E), p2(E);
    p1 << 1.0, 1.0, 0, 0;
    p2 << 2.0, 1.0, 0, 0;
    const double d_model = expected_rx_power(g, p2, 0.0) - expected_rx_power(g, p1, 0.0);
    CHECK(d_model == doctest::Approx(g(0) * 1.0));
}
