#ifndef IGE_OPTIMIZER_HPP
#define IGE_OPTIMIZER_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ige/estimator.hpp"
#include "ige/topology.hpp"

namespace ige {

// Scheduling instance.  Gains are physical (linear power ratios); the solvers
// normalize internally (noise -> 1, powers -> units of P_max).
struct ScheduleProblem {
    Topology topo;
    int period = 0;                  // |I| blocks
    Eigen::MatrixXd g_ub;            // (tx link, rx link) conservative gains
    Eigen::VectorXd g_comm;          // per-link communication gain
    std::vector<int> required_slots; // C4
    Eigen::VectorXd sinr_min;        // linear thresholds
    double p_min_mw = 800.0;
    double p_max_mw = 1200.0;
    double noise_mw = 9.9526e-10;
    double tau_slots = 1.0;          // block length in slots
};

struct Schedule {
    Schedule01 delta;     // period x |E|
    Eigen::MatrixXd P;    // mW, zero where off
    double total_power = 0.0;      // sum of P entries (mW-blocks)
    double objective_relaxed = 0.0;    // f_1 analog: relaxed, no penalty
    double objective_penalized = 0.0;  // f_2: relaxed with penalty terms
    int sca_iterations = 0;
    int lambda_rounds = 0;
};

struct CheckReport {
    bool ok = true;
    double min_sinr_margin = std::numeric_limits<double>::infinity();  // min SINR/gamma
    std::vector<std::string> violations;
};

struct ScaOptions {
    double tol_obj = 1e-4;
    double tol_bin = 1e-3;
    int max_iterations = 50;
    int max_lambda_rounds = 8;
    double phi_floor = 1e-6;
    int repair_passes = 3;
};

struct P3Options {
    double alpha = 0.2;        // condition-number weight (power weight 1-alpha)
    int max_iterations = 50;
    double eps_margin = 1e-3;  // spectral pin margin realizing the strict C9 side
    std::uint64_t seed = 1;
};

struct P3Result {
    PowerMatrix power;
    double kappa = 0.0;
    double gamma = 0.0;          // condition-number proxy; kappa^2 <= gamma
    double objective = 0.0;      // f_3
    int iterations = 0;
    std::vector<double> e_history;
};

// Conservative SINR of link (k,z) under inflated interference gains.
double sinr_hat(const Eigen::MatrixXd& g_hat, const Eigen::MatrixXd& delta_bound,
                const Eigen::VectorXd& g_comm, const Eigen::VectorXd& powers, int link,
                double noise_mw);

// Independent schedule checker (shares no code with the solvers); verifies
// C1/C2, C4, C6/C7 and the SINR constraint against the gains stored in the
// problem (pass true gains in g_ub to audit a deployed schedule).
CheckReport check_schedule(const ScheduleProblem& prob, const Schedule01& delta,
                           const Eigen::MatrixXd& P_mw);

// Necessary-and-sufficient slot-count feasibility for C1/C2/C4.
bool demand_fits_period(const ScheduleProblem& prob);

// SCA with binary penalties; returns the rounded, polished schedule.
Schedule solve_p2_sca(const ScheduleProblem& prob, const ScaOptions& opt = ScaOptions());

// Minimum-power polish with delta fixed: per-block monotone fixed point.
// Returns false when some block cannot meet C5 within the power box.
bool polish_powers(const ScheduleProblem& prob, const Schedule01& delta, Eigen::MatrixXd& P_mw);

// Iterative rank-constrained SDP for the measurement-aware power plan.
P3Result solve_p3(const ScheduleProblem& prob, const Schedule01& delta, double p_star_socp,
                  const Eigen::MatrixXd& polished_P, const P3Options& opt = P3Options());

struct JointResult {
    Schedule baseline;   // P2* only (no measurement shaping)
    P3Result shaped;     // P3 output on the same delta
    double f2 = 0.0;
    double f3 = 0.0;
};

JointResult joint_schedule(const ScheduleProblem& prob, const ScaOptions& sca = ScaOptions(),
                           const P3Options& p3 = P3Options());

// Exhaustive optimum for tiny instances (<= 4 links, period <= 6): per-block
// action enumeration with minimum-power pricing and demand-coverage search.
struct OracleResult {
    double objective = 0.0;  // sum of powers (mW-blocks)
    Schedule01 delta;
    Eigen::MatrixXd P;
};
OracleResult brute_force_oracle(const ScheduleProblem& prob);

struct ScheduleMetrics {
    double power_overhead = 0.0;
    double unsatisfied_ratio = 0.0;
    std::vector<double> link_margin;  // min true-SINR/threshold per link
};

// True-gain evaluation of a shaped schedule against its baseline.
ScheduleMetrics evaluate_schedule(const ScheduleProblem& prob_true_gains,
                                  const Schedule01& delta, const Eigen::MatrixXd& P_shaped,
                                  const Eigen::MatrixXd& P_baseline);

}  // namespace ige

#endif
