#ifndef IGE_BOUNDS_HPP
#define IGE_BOUNDS_HPP

#include <Eigen/Dense>

#include "ige/waveform.hpp"

namespace ige {

struct DeviationBoundInputs {
    double sigma2 = 0.5;   // per-dimension symbol variance
    double imax = 0.0;     // X^{I,max}
    double e_abs4 = 0.0;   // E|X|^4
    int n_subcarriers = 1024;
    int cp_samples = 72;
    int n_symbols = 1;     // N_k
    double delta = 0.01;   // tolerable relative approximation error

    static DeviationBoundInputs from_qam(const QamConstellation& q, int nc, int ng, int nk,
                                         double delta);
    double mu() const { return 2.0 * sigma2; }
    double b_k() const { return 2.0 * imax * imax - 2.0 * sigma2; }
    double eta2() const { return e_abs4 - 4.0 * sigma2 * sigma2; }
    double big_b1() const { return 2.0 * imax * imax; }
};

// Upper bound on P[|avg tx power - expected| >= mu*delta]: the two-term
// Bennett bound minimized over the split point Delta by golden-section
// search.  Constant-modulus constellations short-circuit to zero.
double tx_power_deviation_bound(const DeviationBoundInputs& in);

// Smallest N_k whose bound is at or below `target`; searches 1..n_max.
int deviation_bound_symbol_threshold(const QamConstellation& q, int nc, int ng, double delta,
                                     double target, int n_max = 4096);

struct ErrorBoundParams {
    Eigen::Vector3d m_samples{1.0, 1.0, 1.0};  // m_1..m_3
    Eigen::Vector3d beta{0.05, 0.05, 0.05};    // beta_1..beta_3
    double noise_mw = 0.0;                     // sigma_v^2

    double composite_beta() const {
        return 1.0 - (1.0 - beta(0)) * (1.0 - beta(1)) * (1.0 - beta(2));
    }
    // Equal split: 1 - beta_j = (1 - beta)^{1/3}.
    static ErrorBoundParams equal_split(double beta_total, double m, double noise_mw);
};

// Lemma-3 concentration radii for the three components of the received-power
// error.  expected_g / expected_g2 are per-transmit-link moments of the gains
// into the receiver at hand; sigma2_tx is the per-dimension symbol variance
// scaled by transmit power (E|x|^2 = 2 sigma_s^2 = p).
Eigen::Vector3d compute_A_terms(const Eigen::VectorXd& expected_g,
                                const Eigen::VectorXd& expected_g2,
                                const Eigen::VectorXd& sigma2_tx, int rx_index,
                                const ErrorBoundParams& params, int n_subcarriers);

// Theorem-3 per-link (vector) error bound kappa * ||g|| * eps_b.
double per_link_error_bound(double kappa, double g_norm, double eps_b);

// Theorem-5 per-pair bound: ||r_i|| * (A_1 + A_2 + A_3) with guarantee 1-beta.
struct PairBound {
    double delta = 0.0;
    double guarantee = 0.0;
};
PairBound per_pair_error_bound(const Eigen::MatrixXd& left_inv, int pair_index,
                               const Eigen::Vector3d& A, const ErrorBoundParams& params);

}  // namespace ige

#endif
