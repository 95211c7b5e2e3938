#ifndef IGE_WAVEFORM_HPP
#define IGE_WAVEFORM_HPP

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ige/channel.hpp"
#include "ige/topology.hpp"

namespace ige {

struct FrameConfig {
    int n_subcarriers = 1024;   // N_c
    int cp_samples = 72;        // N_g
    int symbols_per_slot = 14;
    int slots_per_block = 1;
    int qam_order = 16;         // default when no per-link order is given

    int samples_per_symbol() const { return n_subcarriers + cp_samples; }
    int symbols_per_block() const { return symbols_per_slot * slots_per_block; }
    int samples_per_block() const { return symbols_per_block() * samples_per_symbol(); }
};

// Square M-QAM with unit average symbol energy; per-dimension levels are the
// odd integers scaled so that E|X|^2 = 1.
struct QamConstellation {
    explicit QamConstellation(int order);
    int order = 4;
    std::vector<double> levels;     // per real dimension
    double sigma2 = 0.5;            // Var(X^I) = Var(X^Q)
    double imax = 0.0;              // X^{I,max}
    double e_abs4 = 0.0;            // E|X|^4
    bool constant_modulus() const { return levels.size() == 1 || order == 4; }
};

struct LinkImpairments {
    std::vector<int> timing_offset;        // per link, samples
    std::vector<double> cfo;               // per link pair key tx-node source; see below
    // cfo is stored per link as the offset of the link's transmitter clock;
    // the rotation seen at receiver z is clock(tx) - clock(z).
    std::vector<double> node_clock;        // per node, subcarrier spacings
};

// Uniform draws: TO in [0, to_max_samples], node clocks in
// [-cfo_range/2, +cfo_range/2] so pairwise CFOs span [-cfo_range, +cfo_range].
LinkImpairments draw_impairments(const Topology& topo, std::uint64_t seed, int to_max_samples,
                                 double cfo_range);

// IDFT with cyclic prefix: returns N_c + N_g samples per OFDM symbol, the
// first N_g being a copy of the tail.  Amplitudes scale by sqrt(power_scale).
Eigen::VectorXcd modulate(const Eigen::VectorXcd& symbols, int n_subcarriers, int cp_samples,
                          double power_scale);

// Whole-period transmit stream of one link: symbols drawn per (seed, link,
// block); block b occupies samples [b*m, (b+1)*m) plus a lead-in symbol that
// covers timing offsets.  Blocks with zero power transmit nothing.
struct SampleStream {
    Eigen::VectorXcd samples;  // lead_in + n_blocks*m samples
    int lead_in = 0;
    std::vector<double> expected_power;  // commanded p per block
    std::vector<double> average_power;   // actual mean |x|^2 per block
};

SampleStream build_link_stream(int link, const FrameConfig& fc, const QamConstellation& qam,
                               const std::vector<double>& block_powers_mw, std::uint64_t seed,
                               int lead_in);

// Received samples of one receiving link across the whole period per Eq.-(2)
// superposition: per-link integer shift, per-pair CFO rotation, AWGN, and the
// receiver's own residual SI (already folded into h_eq).
Eigen::VectorXcd synthesize_rx(int rx_link, const Topology& topo,
                               const std::vector<SampleStream>& streams,
                               const Eigen::MatrixXcd& h_eq, const LinkImpairments& imp,
                               const FrameConfig& fc, int n_blocks, std::uint64_t noise_seed,
                               double noise_mw);

// Arithmetic mean of |y|^2 over each block given uniform block length.
Eigen::VectorXd measure_block_power(const Eigen::VectorXcd& samples, int samples_per_block);

// Lemma-1 linear model: sum_j g_j p_j + W.
double expected_rx_power(const Eigen::VectorXd& gains_col, const Eigen::VectorXd& tx_powers,
                         double noise_mw);

}  // namespace ige

#endif
