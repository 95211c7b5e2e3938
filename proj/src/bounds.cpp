#include "ige/bounds.hpp"

#include <cmath>

#include "ige/errors.hpp"

namespace ige {

namespace {

// Bennett's function h(u) = (1+u)log(1+u) - u.
double bennett_h(double u) { return (1.0 + u) * std::log1p(u) - u; }

}  // namespace

DeviationBoundInputs DeviationBoundInputs::from_qam(const QamConstellation& q, int nc, int ng,
                                                    int nk, double delta) {
    DeviationBoundInputs in;
    in.sigma2 = q.sigma2;
    in.imax = q.imax;
    in.e_abs4 = q.e_abs4;
    in.n_subcarriers = nc;
    in.cp_samples = ng;
    in.n_symbols = nk;
    in.delta = delta;
    return in;
}

double tx_power_deviation_bound(const DeviationBoundInputs& in) {
    if (!(in.delta > 0.0 && in.delta <= 1.0)) throw BadTolerance("delta must lie in (0, 1]");
    if (in.n_symbols < 1) throw BadTolerance("N_k must be >= 1");
    const double eta2 = in.eta2();
    if (eta2 <= 1e-15) return 0.0;  // equal-energy symbols: average power is exact

    const double nc = in.n_subcarriers;
    const double ng = in.cp_samples;
    const double ns = nc + ng;
    const double nk = in.n_symbols;
    const double s2 = in.sigma2;
    const double s4 = s2 * s2;
    const double imax2 = in.imax * in.imax;
    const double b = in.b_k();
    const double mu_delta = in.mu() * in.delta;

    const double c1 = nk * ng * (nc * nc - nc) * s4 / (4.0 * imax2 * imax2);
    const double a1 = imax2 * ns / (ng * (nc - 1.0) * s4);
    const double c2 = nk * nc * eta2 / (b * b);
    const double a2 = b / eta2;

    auto total = [&](double d) {
        const double f1 = -c1 * bennett_h(a1 * d);
        const double f2 = -c2 * bennett_h(a2 * (mu_delta - d));
        return std::exp(f1) + std::exp(f2);
    };

    // Golden-section search over the split point Delta in (0, mu*delta).
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = mu_delta * 1e-12, hi = mu_delta * (1.0 - 1e-12);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = total(x1), f2 = total(x2);
    for (int it = 0; it < 200 && (hi - lo) > 1e-6 * mu_delta; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = total(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = total(x2);
        }
    }
    return std::min(1.0, 2.0 * std::min(f1, f2));
}

int deviation_bound_symbol_threshold(const QamConstellation& q, int nc, int ng, double delta,
                                     double target, int n_max) {
    for (int nk = 1; nk <= n_max; ++nk) {
        if (tx_power_deviation_bound(DeviationBoundInputs::from_qam(q, nc, ng, nk, delta)) <=
            target)
            return nk;
    }
    return -1;
}

ErrorBoundParams ErrorBoundParams::equal_split(double beta_total, double m, double noise_mw) {
    ErrorBoundParams p;
    const double bj = 1.0 - std::cbrt(1.0 - beta_total);
    p.beta.setConstant(bj);
    p.m_samples.setConstant(m);
    p.noise_mw = noise_mw;
    return p;
}

Eigen::Vector3d compute_A_terms(const Eigen::VectorXd& expected_g,
                                const Eigen::VectorXd& expected_g2,
                                const Eigen::VectorXd& sigma2_tx, int rx_index,
                                const ErrorBoundParams& params, int n_subcarriers) {
    const int E = static_cast<int>(expected_g.size());
    if (expected_g2.size() != E || sigma2_tx.size() != E)
        throw DimensionMismatch("compute_A_terms: input length mismatch");

    // A_1: cross-link interaction term (empty double sum for a single link).
    double a1sq = 0.0;
    for (int s = 0; s < E; ++s)
        for (int l = 0; l < E; ++l) {
            if (l == s) continue;
            a1sq += sigma2_tx(s) * sigma2_tx(l) * expected_g(s) * expected_g(l);
        }
    a1sq *= 4.0 / (params.m_samples(0) * params.beta(0));

    // A_2: per-link fourth-moment term.
    double a2sq = 0.0;
    for (int s = 0; s < E; ++s) {
        const double s4 = sigma2_tx(s) * sigma2_tx(s);
        a2sq += expected_g2(s) * (4.0 * s4 - 4.0 * s4 / n_subcarriers);
    }
    a2sq /= params.m_samples(1) * params.beta(1);

    // A_3: noise power concentration.
    const double a3sq =
        params.noise_mw * params.noise_mw / (params.m_samples(2) * params.beta(2));

    (void)rx_index;
    return {std::sqrt(a1sq), std::sqrt(a2sq), std::sqrt(a3sq)};
}

double per_link_error_bound(double kappa, double g_norm, double eps_b) {
    if (kappa < 0 || g_norm < 0 || eps_b < 0) throw BadTolerance("inputs must be nonnegative");
    return kappa * g_norm * eps_b;
}

PairBound per_pair_error_bound(const Eigen::MatrixXd& left_inv, int pair_index,
                               const Eigen::Vector3d& A, const ErrorBoundParams& params) {
    if (pair_index < 0 || pair_index >= left_inv.rows())
        throw DimensionMismatch("per_pair_error_bound: bad pair index");
    PairBound pb;
    pb.delta = left_inv.row(pair_index).norm() * A.sum();
    pb.guarantee = 1.0 - params.composite_beta();
    return pb;
}

}  // namespace ige
