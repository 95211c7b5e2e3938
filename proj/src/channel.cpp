#include "ige/channel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ige/errors.hpp"
#include "ige/rng.hpp"

namespace ige {

namespace {
constexpr double kPi = std::numbers::pi;

Eigen::MatrixXcd complex_gaussian(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd m(rows, cols);
    const double scale = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            m(i, j) = std::complex<double>(gauss(rng) * scale, gauss(rng) * scale);
    return m;
}
}  // namespace

double path_gain(double distance_m, double rho1, double rho2, double wavelength_m) {
    const double loss_db =
        10.0 * rho1 * std::log10(distance_m) + rho2 * std::log10(4.0 * kPi / wavelength_m);
    return std::pow(10.0, -loss_db / 10.0);
}

Eigen::VectorXcd ula_steering(double angle_rad, int antennas) {
    Eigen::VectorXcd v(antennas);
    const double k = kPi * std::sin(angle_rad);  // half-wavelength spacing
    for (int n = 0; n < antennas; ++n) v(n) = std::polar(1.0, k * n);
    v /= std::sqrt(double(antennas));
    return v;
}

double ChannelSet::varpi(const Topology& topo, int s, int z) const {
    return path_gain(topo.distance(s, z), params.rho1, params.rho2, params.wavelength());
}

ChannelSet build_channels(const Topology& topo, const ChannelParams& params, std::uint64_t seed) {
    const int n = static_cast<int>(topo.nodes.size());
    const int M = params.antennas;
    ChannelSet cs;
    cs.params = params;
    cs.num_nodes = n;

    auto rng = rng_stream(seed, rng_tag::kChannel);
    const double zeta = params.k_factor;
    for (int s = 0; s < n; ++s) {
        for (int z = 0; z < n; ++z) {
            if (s == z) continue;
            const double w = path_gain(topo.distance(s, z), params.rho1, params.rho2,
                                       params.wavelength());
            const double th_t = std::atan2(topo.nodes[z].y - topo.nodes[s].y,
                                           topo.nodes[z].x - topo.nodes[s].x);
            const double th_r = std::atan2(topo.nodes[s].y - topo.nodes[z].y,
                                           topo.nodes[s].x - topo.nodes[z].x);
            // LOS: unit-modulus steering outer product at the geometric bearing.
            Eigen::VectorXcd ar = ula_steering(th_r, M) * std::sqrt(double(M));
            Eigen::VectorXcd at = ula_steering(th_t, M) * std::sqrt(double(M));
            Eigen::MatrixXcd Hl = ar * at.transpose();
            Eigen::MatrixXcd Hs = complex_gaussian(M, M, rng);
            cs.H[{s, z}] = std::sqrt(w * zeta / (zeta + 1.0)) * Hl +
                           std::sqrt(w / (zeta + 1.0)) * Hs;
        }
    }
    cs.H_si.resize(n);
    for (int z = 0; z < n; ++z) cs.H_si[z] = complex_gaussian(M, M, rng);
    return cs;
}

void steer_beams(ChannelSet& cs, const Topology& topo) {
    const int M = cs.params.antennas;
    const int E = topo.num_links();
    const double step = cs.params.aoa_sweep_deg * kPi / 180.0;
    const int n_angles = static_cast<int>(std::floor(kPi / step)) + 1;

    // Steering toward angle theta applies the conjugate of the array response,
    // so the sweep grid holds conjugated steering vectors for both ends (the
    // receive combiner enters as a plain transpose in the signal model).
    Eigen::MatrixXcd grid(M, n_angles);
    for (int a = 0; a < n_angles; ++a)
        grid.col(a) = ula_steering(-kPi / 2.0 + a * step, M).conjugate();

    // The coarse sweep can sit half a grid step off the true peak, which at
    // M = 100 already costs double-digit percent of the array gain; a local
    // refinement pass recovers the detected maximum.
    auto refine = [&](double coarse, const auto& power_at) {
        double lo = coarse - step, hi = coarse + step;
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = power_at(x1), f2 = power_at(x2);
        for (int it = 0; it < 48; ++it) {
            if (f1 > f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = power_at(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = power_at(x2);
            }
        }
        return f1 > f2 ? x1 : x2;
    };

    cs.tx_beam.assign(E, Eigen::VectorXcd());
    cs.rx_beam.assign(E, Eigen::VectorXcd());
    for (int l = 0; l < E; ++l) {
        const auto& lk = topo.links[l];
        const Eigen::MatrixXcd& Hm = cs.H.at({lk.src, lk.dst});
        // Transmit angle: direction maximizing the energy arriving at the
        // receiver array, i.e. the strongest detected signal over the sweep.
        Eigen::MatrixXcd radiated = Hm * grid;  // M x n_angles
        int best_t = 0;
        double best_tp = -1.0;
        for (int a = 0; a < n_angles; ++a) {
            const double p = radiated.col(a).squaredNorm();
            if (p > best_tp) {
                best_tp = p;
                best_t = a;
            }
        }
        const double theta_t = refine(-kPi / 2.0 + best_t * step, [&](double th) {
            return (Hm * ula_steering(th, M).conjugate()).squaredNorm();
        });
        cs.tx_beam[l] = ula_steering(theta_t, M).conjugate();
        // Receive angle: maximize combined power given the transmit beam.
        Eigen::VectorXcd rx_field = Hm * cs.tx_beam[l];
        int best_r = 0;
        double best_rp = -1.0;
        for (int a = 0; a < n_angles; ++a) {
            const double p = std::norm(grid.col(a).cwiseProduct(rx_field).sum());
            if (p > best_rp) {
                best_rp = p;
                best_r = a;
            }
        }
        const double theta_r = refine(-kPi / 2.0 + best_r * step, [&](double th) {
            return std::norm(
                ula_steering(th, M).conjugate().cwiseProduct(rx_field).sum());
        });
        cs.rx_beam[l] = ula_steering(theta_r, M).conjugate();
    }
}

void equivalent_gains(ChannelSet& cs, const Topology& topo) {
    const int E = topo.num_links();
    if (static_cast<int>(cs.tx_beam.size()) != E || static_cast<int>(cs.rx_beam.size()) != E)
        throw MissingBeam("equivalent_gains: beams not steered for this link set");
    cs.h_eq.resize(E, E);
    cs.gains.resize(E, E);
    const double sqrt_eta = std::sqrt(cs.params.sic_linear);
    for (int i = 0; i < E; ++i) {  // receiving link (k,z)
        const auto& rx = topo.links[i];
        const Eigen::VectorXcd& w = cs.rx_beam[i];
        for (int j = 0; j < E; ++j) {  // transmitting link (s,d)
            const auto& tx = topo.links[j];
            std::complex<double> h;
            if (tx.src == rx.dst) {
                // Transmitter co-located with the receiver: residual SI path.
                h = sqrt_eta * (w.transpose() * cs.H_si[rx.dst] * cs.tx_beam[j])(0, 0);
            } else {
                h = (w.transpose() * cs.H.at({tx.src, rx.dst}) * cs.tx_beam[j])(0, 0);
            }
            cs.h_eq(j, i) = h;
            cs.gains(j, i) = std::norm(h);
        }
    }
}

std::string gains_csv(const ChannelSet& cs, const Topology& topo) {
    std::ostringstream os;
    os << "src_link,dst_link,gain_db\n";
    for (int j = 0; j < cs.gains.rows(); ++j)
        for (int i = 0; i < cs.gains.cols(); ++i) {
            os << topo.links[j].src << "->" << topo.links[j].dst << ","
               << topo.links[i].src << "->" << topo.links[i].dst << ","
               << 10.0 * std::log10(std::max(cs.gains(j, i), 1e-300)) << "\n";
        }
    return os.str();
}

}  // namespace ige
