#ifndef IGE_ESTIMATOR_HPP
#define IGE_ESTIMATOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ige/bounds.hpp"
#include "ige/channel.hpp"
#include "ige/topology.hpp"
#include "ige/waveform.hpp"

namespace ige {

// On/off schedule: delta(i, l) says link l transmits in block i.
using Schedule01 = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

// Round-robin edge coloring honoring the one-outgoing / one-incoming
// per-node-per-block rule; every link is active in roughly n_b / n_colors
// blocks.  Used by measurement-only runs that have no traffic schedule.
Schedule01 build_ige_schedule(const Topology& topo, int n_blocks);

enum class PowerStrategy { kRandom, kAppendSingular, kOptimized };

struct PowerMatrix {
    Eigen::MatrixXd P;  // n_b x |E|, mW; zero where the schedule is off
    int block_slots = 1;
};

// Random entries in [P_min, P_max] on the active pattern; rank verified and
// regenerated on failure.  "append-singular" rebuilds surplus rows (rows past
// the first |E|) from the smallest right-singular vector of the submatrix,
// affinely fitted into the power box over a candidate activity group.
PowerMatrix build_power_matrix(const Schedule01& schedule, int n_blocks, PowerStrategy strategy,
                               std::uint64_t seed, double p_min_mw, double p_max_mw);

// Least squares on P ghat = bbar - w; negative entries clipped to the
// receiver's smallest positive estimate.
Eigen::VectorXd estimate_gains(const Eigen::MatrixXd& P, const Eigen::VectorXd& measured_bbar,
                               double noise_mw);

struct GraphEstimate {
    Eigen::MatrixXd g_hat;        // (tx link, rx link) estimated gains
    Eigen::MatrixXd g_true;       // ground truth for diagnostics
    Eigen::MatrixXd pair_bound;   // Theorem-5 Delta per pair
    double guarantee = 0.0;       // 1 - beta
    double kappa = 0.0;           // condition number of P
    Eigen::MatrixXd residual;     // bbar - b per receiver (diagnostic f_z)
    PowerMatrix power;
};

struct IgeOptions {
    FrameConfig frame;
    PowerStrategy strategy = PowerStrategy::kAppendSingular;
    int surplus_blocks = 2;
    double p_min_mw = 800.0;
    double p_max_mw = 1200.0;
    int to_max_samples = 0;
    double cfo_range = 0.0;
    double beta_total = 0.05;
    bool noiseless_expected_power = false;  // inject Eq.-(5) powers instead of waveforms
    std::uint64_t seed = 1;
};

// Full measurement round: schedule + power matrix -> per-link streams ->
// per-receiver block powers -> per-receiver least squares -> bounds.
GraphEstimate run_ige(const Topology& topo, const ChannelSet& cs, const IgeOptions& opt);

// Same pipeline with an externally built power matrix (e.g. the scheduler's
// optimized plan).
GraphEstimate run_ige_with_power(const Topology& topo, const ChannelSet& cs,
                                 const IgeOptions& opt, const PowerMatrix& pm);

// Estimate export CSV: src link, dst link, true/estimated gain (dB), error,
// Theorem-5 bound.
std::string estimate_csv(const Topology& topo, const GraphEstimate& est);

}  // namespace ige

#endif
