#include "ige/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ige/errors.hpp"
#include "ige/linalg.hpp"
#include "ige/rng.hpp"

namespace ige {

Schedule01 build_ige_schedule(const Topology& topo, int n_blocks) {
    const int E = topo.num_links();
    if (n_blocks < E) throw RankDeficient("need at least |E| blocks for estimation");

    // Greedy edge coloring: each class holds links with distinct sources and
    // distinct destinations.
    std::vector<std::vector<int>> classes;
    for (int l = 0; l < E; ++l) {
        bool placed = false;
        for (auto& c : classes) {
            bool ok = true;
            for (int m : c)
                if (topo.links[m].src == topo.links[l].src ||
                    topo.links[m].dst == topo.links[l].dst) {
                    ok = false;
                    break;
                }
            if (ok) {
                c.push_back(l);
                placed = true;
                break;
            }
        }
        if (!placed) classes.push_back({l});
    }

    Schedule01 sched = Schedule01::Zero(n_blocks, E);
    const int ncls = static_cast<int>(classes.size());
    for (int b = 0; b < n_blocks; ++b)
        for (int l : classes[b % ncls]) sched(b, l) = 1;
    return sched;
}

namespace {

// Affine fit of vector v (restricted to `idx`) into [pmin, pmax] with an
// optional shrink toward the box center; the surplus-row candidate of the
// constructive condition-number step.
Eigen::VectorXd fit_row(const Eigen::VectorXd& v, const std::vector<int>& idx, int E,
                        double pmin, double pmax, double scale) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(E);
    double lo = std::numeric_limits<double>::max(), hi = -lo;
    for (int i : idx) {
        lo = std::min(lo, v(i));
        hi = std::max(hi, v(i));
    }
    const double mid = 0.5 * (pmin + pmax);
    if (hi - lo < 1e-12) {
        for (int i : idx) row(i) = mid;
        return row;
    }
    const double half = 0.5 * (pmax - pmin) * scale;
    const double ctr = 0.5 * (hi + lo);
    for (int i : idx) row(i) = mid + (v(i) - ctr) * (2.0 * half / (hi - lo));
    return row;
}

std::vector<std::vector<int>> active_groups(const Schedule01& sched) {
    // Distinct activity patterns present in the schedule, usable for surplus rows.
    std::vector<std::vector<int>> groups;
    for (int b = 0; b < sched.rows(); ++b) {
        std::vector<int> g;
        for (int l = 0; l < sched.cols(); ++l)
            if (sched(b, l)) g.push_back(l);
        if (g.empty()) continue;
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    }
    return groups;
}

}  // namespace

PowerMatrix build_power_matrix(const Schedule01& schedule, int n_blocks, PowerStrategy strategy,
                               std::uint64_t seed, double p_min_mw, double p_max_mw) {
    const int E = static_cast<int>(schedule.cols());
    if (schedule.rows() < n_blocks)
        throw DimensionMismatch("build_power_matrix: schedule shorter than n_blocks");
    if (n_blocks < E) throw RankDeficient("build_power_matrix: n_blocks < |E|");
    if (strategy == PowerStrategy::kOptimized)
        throw ConfigInvalid("optimized strategy is produced by the scheduler, not here");

    auto rng = rng_stream(seed, rng_tag::kPowerMatrix);
    std::uniform_real_distribution<double> uni(p_min_mw, p_max_mw);

    PowerMatrix pm;
    const int base_rows = (strategy == PowerStrategy::kAppendSingular) ? E : n_blocks;
    for (int attempt = 0; attempt < 32; ++attempt) {
        Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n_blocks, E);
        for (int b = 0; b < base_rows; ++b)
            for (int l = 0; l < E; ++l)
                if (schedule(b, l)) P(b, l) = uni(rng);
        if (smallest_singular_value(P.topRows(base_rows)) <= 1e-9 * p_max_mw) continue;

        if (strategy == PowerStrategy::kAppendSingular) {
            const auto groups = active_groups(schedule);
            for (int extra = E; extra < n_blocks; ++extra) {
                Eigen::MatrixXd cur = P.topRows(extra);
                Eigen::JacobiSVD<Eigen::MatrixXd> svd(cur, Eigen::ComputeThinV);
                Eigen::VectorXd v = svd.matrixV().col(E - 1);
                double best_k = std::numeric_limits<double>::max();
                Eigen::VectorXd best_row;
                for (const auto& g : groups) {
                    for (double sign : {1.0, -1.0}) {
                        for (double scale : {1.0, 0.5, 0.25}) {
                            Eigen::VectorXd row =
                                fit_row(sign * v, g, E, p_min_mw, p_max_mw, scale);
                            Eigen::MatrixXd aug(extra + 1, E);
                            aug << cur, row.transpose();
                            Eigen::JacobiSVD<Eigen::MatrixXd> s2(aug);
                            const auto& sv = s2.singularValues();
                            const double k = sv(0) / sv(E - 1);
                            if (k < best_k) {
                                best_k = k;
                                best_row = row;
                            }
                        }
                    }
                }
                P.row(extra) = best_row.transpose();
            }
        }
        if (smallest_singular_value(P) > 1e-9 * p_max_mw) {
            pm.P = P;
            return pm;
        }
    }
    throw RankDeficient("build_power_matrix: could not reach full column rank");
}

Eigen::VectorXd estimate_gains(const Eigen::MatrixXd& P, const Eigen::VectorXd& measured_bbar,
                               double noise_mw) {
    if (P.rows() != measured_bbar.size())
        throw DimensionMismatch("estimate_gains: block count mismatch");
    Eigen::VectorXd b = measured_bbar.array() - noise_mw;
    Eigen::VectorXd g = solve_least_squares(P, b);
    // Clip non-positive estimates to the smallest positive one in the same
    // receiver's solution.
    double floor = std::numeric_limits<double>::max();
    for (int i = 0; i < g.size(); ++i)
        if (g(i) > 0.0) floor = std::min(floor, g(i));
    if (floor == std::numeric_limits<double>::max()) floor = 0.0;
    for (int i = 0; i < g.size(); ++i)
        if (g(i) <= 0.0) g(i) = floor;
    return g;
}

GraphEstimate run_ige(const Topology& topo, const ChannelSet& cs, const IgeOptions& opt) {
    const int E = topo.num_links();
    const int n_b = E + opt.surplus_blocks;
    const Schedule01 sched = build_ige_schedule(topo, n_b);
    PowerMatrix pm =
        build_power_matrix(sched, n_b, opt.strategy, opt.seed, opt.p_min_mw, opt.p_max_mw);
    return run_ige_with_power(topo, cs, opt, pm);
}

GraphEstimate run_ige_with_power(const Topology& topo, const ChannelSet& cs,
                                 const IgeOptions& opt, const PowerMatrix& pm) {
    const int E = topo.num_links();
    const int n_b = static_cast<int>(pm.P.rows());
    if (n_b < E) throw RankDeficient("run_ige: n_b < |E|");

    GraphEstimate est;
    est.power = pm;
    est.kappa = condition_number(pm.P);
    est.g_true = cs.gains;
    est.g_hat.resize(E, E);
    est.pair_bound.resize(E, E);
    est.residual.resize(n_b, E);

    const double w = cs.params.noise_mw;
    const int m = opt.frame.samples_per_block();

    Eigen::MatrixXd bbar(n_b, E);
    if (opt.noiseless_expected_power) {
        for (int i = 0; i < E; ++i)
            for (int b = 0; b < n_b; ++b)
                bbar(b, i) = expected_rx_power(cs.gains.col(i), pm.P.row(b).transpose(), w);
    } else {
        const LinkImpairments imp =
            draw_impairments(topo, opt.seed, opt.to_max_samples, opt.cfo_range);
        int lead_in = 0;
        for (int l = 0; l < E; ++l) lead_in = std::max(lead_in, imp.timing_offset[l]);

        std::vector<SampleStream> streams;
        streams.reserve(E);
        std::vector<QamConstellation> qams;
        for (int l = 0; l < E; ++l) {
            std::vector<double> powers(pm.P.col(l).data(), pm.P.col(l).data() + n_b);
            QamConstellation qam(opt.frame.qam_order);
            streams.push_back(
                build_link_stream(l, opt.frame, qam, powers, opt.seed, lead_in));
        }
        for (int i = 0; i < E; ++i) {
            Eigen::VectorXcd y = synthesize_rx(i, topo, streams, cs.h_eq, imp, opt.frame, n_b,
                                               opt.seed, w);
            bbar.col(i) = measure_block_power(y, m);
        }
    }

    // Per-receiver least squares plus Theorem-5 bounds from prior-round moments
    // (bootstrap: the measured estimates themselves stand in for E[g], E[g^2]).
    const Eigen::MatrixXd pinv = left_inverse(pm.P);
    ErrorBoundParams ebp = ErrorBoundParams::equal_split(opt.beta_total, double(m), w);
    Eigen::VectorXd sigma2_tx(E);
    for (int l = 0; l < E; ++l) {
        double pbar = 0.0;
        int cnt = 0;
        for (int b = 0; b < n_b; ++b)
            if (pm.P(b, l) > 0) {
                pbar += pm.P(b, l);
                ++cnt;
            }
        sigma2_tx(l) = cnt ? pbar / cnt / 2.0 : 0.0;  // E|x|^2 = 2 sigma_s^2 = p
    }
    for (int i = 0; i < E; ++i) {
        Eigen::VectorXd ghat = estimate_gains(pm.P, bbar.col(i), w);
        est.g_hat.col(i) = ghat;
        Eigen::VectorXd b_model(n_b);
        for (int b = 0; b < n_b; ++b)
            b_model(b) = expected_rx_power(cs.gains.col(i), pm.P.row(b).transpose(), 0.0);
        est.residual.col(i) = (bbar.col(i).array() - w) - b_model.array();

        Eigen::VectorXd eg = ghat.cwiseMax(0.0);
        Eigen::VectorXd eg2 = eg.cwiseProduct(eg);
        const Eigen::Vector3d A =
            compute_A_terms(eg, eg2, sigma2_tx, i, ebp, opt.frame.n_subcarriers);
        for (int j = 0; j < E; ++j) {
            est.pair_bound(j, i) = per_pair_error_bound(pinv, j, A, ebp).delta;
        }
        est.guarantee = 1.0 - ebp.composite_beta();
    }
    return est;
}

std::string estimate_csv(const Topology& topo, const GraphEstimate& est) {
    std::ostringstream os;
    os << "tx_src,tx_dst,rx_src,rx_dst,true_db,est_db,err_db,bound\n";
    const int E = topo.num_links();
    for (int j = 0; j < E; ++j)
        for (int i = 0; i < E; ++i) {
            const double t = est.g_true(j, i), h = est.g_hat(j, i);
            os << topo.links[j].src << "," << topo.links[j].dst << "," << topo.links[i].src
               << "," << topo.links[i].dst << ","
               << 10.0 * std::log10(std::max(t, 1e-300)) << ","
               << 10.0 * std::log10(std::max(h, 1e-300)) << ","
               << 10.0 * std::log10(std::max(h, 1e-300) / std::max(t, 1e-300)) << ","
               << est.pair_bound(j, i) << "\n";
        }
    return os.str();
}

}  // namespace ige
