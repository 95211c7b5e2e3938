#ifndef IGE_CHANNEL_HPP
#define IGE_CHANNEL_HPP

#include <complex>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ige/topology.hpp"

namespace ige {

struct ChannelParams {
    double k_factor = 2.0;        // Rician zeta
    double rho1 = 2.0;   // path-loss distance exponent
    // Frequency term enters as rho2 * log10(4 pi / lambda); free space needs 20.
    double rho2 = 20.0;
    double carrier_hz = 28e9;     // f_c
    int antennas = 100;           // M per array
    double sic_linear = 1e-10;    // eta (-100 dB)
    double noise_mw = 9.9526e-10; // sigma_v^2 per receive chain, -174dBm/Hz x 250MHz
    double aoa_sweep_deg = 0.5;   // beam detection sweep resolution

    double wavelength() const { return 299792458.0 / carrier_hz; }
};

// Immutable after construction; shared read-only across threads.
struct ChannelSet {
    ChannelParams params;
    int num_nodes = 0;
    // H[(s,z)] for every ordered node pair s != z.
    std::map<std::pair<int, int>, Eigen::MatrixXcd> H;
    // Self-interference channel per node, CN(0,1) entries.
    std::vector<Eigen::MatrixXcd> H_si;
    // Unit-norm beams per directed link, aligned with Topology::links.
    std::vector<Eigen::VectorXcd> tx_beam;
    std::vector<Eigen::VectorXcd> rx_beam;

    // Equivalent complex channels / gains: entry (j, i) couples transmitter of
    // link j into the receiver of link i (the beamformed receiver of link i).
    // Row j == link whose source equals link i's destination holds the
    // eta-scaled residual self-interference channel.
    Eigen::MatrixXcd h_eq;
    Eigen::MatrixXd gains;  // |h_eq|^2

    // Large-scale path gain varpi for an ordered pair.
    double varpi(const Topology& topo, int s, int z) const;
};

// Large-scale gain from the log-distance model.
double path_gain(double distance_m, double rho1, double rho2, double wavelength_m);

// Unit-norm ULA steering vector at half-wavelength spacing.
Eigen::VectorXcd ula_steering(double angle_rad, int antennas);

// Rician channel draw for every ordered pair plus SI channels.  Beams and
// gains are left empty; call steer_beams / equivalent_gains next.
ChannelSet build_channels(const Topology& topo, const ChannelParams& params, std::uint64_t seed);

// Pick per-link beams by sweeping the detection angle grid.
void steer_beams(ChannelSet& cs, const Topology& topo);

// Fill h_eq/gains for every (transmitting link, receiving link) pair.
void equivalent_gains(ChannelSet& cs, const Topology& topo);

// CSV export (src link, dst link, gain dB) for golden-file checks.
std::string gains_csv(const ChannelSet& cs, const Topology& topo);

}  // namespace ige

#endif
