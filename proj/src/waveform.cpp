#include "ige/waveform.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

#include "ige/errors.hpp"
#include "ige/rng.hpp"

namespace ige {

namespace {

// FFTW plan creation is not thread-safe; execution on distinct buffers is.
class IdftPlanCache {
  public:
    static IdftPlanCache& instance() {
        static IdftPlanCache c;
        return c;
    }
    // Executes a backward DFT of size n, out may alias in.
    void idft(int n, fftw_complex* in, fftw_complex* out) {
        fftw_plan p;
        {
            std::lock_guard<std::mutex> lk(mu_);
            auto it = plans_.find(n);
            if (it == plans_.end()) {
                fftw_complex* buf = fftw_alloc_complex(n);
                p = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
                plans_[n] = {p, buf};
            } else {
                p = it->second.first;
            }
        }
        fftw_execute_dft(p, in, out);
    }

  private:
    std::mutex mu_;
    std::map<int, std::pair<fftw_plan, fftw_complex*>> plans_;
};

}  // namespace

QamConstellation::QamConstellation(int order_) {
    order = order_;
    const int m = static_cast<int>(std::lround(std::sqrt(double(order))));
    if (m * m != order || order < 4) throw ConfigInvalid("square QAM order required");
    // Odd levels +-1, +-3, ..., scaled to unit average symbol energy.
    double e2 = 0.0;
    for (int k = 0; k < m; ++k) {
        const double lv = -(m - 1) + 2.0 * k;
        e2 += lv * lv;
    }
    e2 /= m;  // E[I^2] before scaling, per dimension
    const double d = std::sqrt(1.0 / (2.0 * e2));
    double e4 = 0.0;
    for (int k = 0; k < m; ++k) {
        const double lv = (-(m - 1) + 2.0 * k) * d;
        levels.push_back(lv);
        e4 += lv * lv * lv * lv;
    }
    e4 /= m;
    sigma2 = e2 * d * d;
    imax = (m - 1) * d;
    // E|X|^4 = E[(I^2+Q^2)^2] = 2 E[I^4] + 2 (E[I^2])^2 for independent I/Q.
    e_abs4 = 2.0 * e4 + 2.0 * sigma2 * sigma2;
}

LinkImpairments draw_impairments(const Topology& topo, std::uint64_t seed, int to_max_samples,
                                 double cfo_range) {
    LinkImpairments imp;
    const int E = topo.num_links();
    const int n = static_cast<int>(topo.nodes.size());
    auto rng = rng_stream(seed, rng_tag::kImpairment);
    imp.timing_offset.resize(E, 0);
    if (to_max_samples > 0) {
        std::uniform_int_distribution<int> to(0, to_max_samples);
        for (int l = 0; l < E; ++l) imp.timing_offset[l] = to(rng);
    }
    imp.node_clock.resize(n, 0.0);
    if (cfo_range > 0.0) {
        std::uniform_real_distribution<double> ph(-cfo_range / 2.0, cfo_range / 2.0);
        for (int v = 0; v < n; ++v) imp.node_clock[v] = ph(rng);
    }
    return imp;
}

Eigen::VectorXcd modulate(const Eigen::VectorXcd& symbols, int n_subcarriers, int cp_samples,
                          double power_scale) {
    if (symbols.size() != n_subcarriers)
        throw BadSymbolCount("modulate: expected one symbol per subcarrier");
    const int nc = n_subcarriers;
    Eigen::VectorXcd data(nc);
    {
        std::vector<std::complex<double>> buf(symbols.data(), symbols.data() + nc);
        IdftPlanCache::instance().idft(nc, reinterpret_cast<fftw_complex*>(buf.data()),
                                       reinterpret_cast<fftw_complex*>(buf.data()));
        const double norm = std::sqrt(power_scale) / std::sqrt(double(nc));
        for (int i = 0; i < nc; ++i) data(i) = buf[i] * norm;
    }
    Eigen::VectorXcd out(nc + cp_samples);
    out.head(cp_samples) = data.tail(cp_samples);
    out.tail(nc) = data;
    return out;
}

SampleStream build_link_stream(int link, const FrameConfig& fc, const QamConstellation& qam,
                               const std::vector<double>& block_powers_mw, std::uint64_t seed,
                               int lead_in) {
    const int m = fc.samples_per_block();
    const int n_blocks = static_cast<int>(block_powers_mw.size());
    const int ns = fc.samples_per_symbol();

    SampleStream st;
    st.lead_in = lead_in;
    st.samples = Eigen::VectorXcd::Zero(lead_in + std::int64_t(n_blocks) * m);
    st.expected_power = block_powers_mw;
    st.average_power.assign(n_blocks, 0.0);

    std::uniform_int_distribution<std::size_t> pick(0, qam.levels.size() - 1);
    auto fill_symbol = [&](std::mt19937_64& rng, double power, std::int64_t at, int count) {
        Eigen::VectorXcd X(fc.n_subcarriers);
        for (int r = 0; r < fc.n_subcarriers; ++r)
            X(r) = std::complex<double>(qam.levels[pick(rng)], qam.levels[pick(rng)]);
        Eigen::VectorXcd x = modulate(X, fc.n_subcarriers, fc.cp_samples, power);
        st.samples.segment(at, count) = x.head(count);
        return x;
    };

    // Lead-in covers timing offsets with an extra symbol at block-0 power.
    if (lead_in > 0) {
        if (lead_in > ns) throw StreamTooShort("lead-in exceeds one OFDM symbol");
        auto rng = rng_stream(seed, rng_tag::kSymbols, std::uint64_t(link), 0xffffULL);
        if (block_powers_mw[0] > 0.0) fill_symbol(rng, block_powers_mw[0], 0, lead_in);
    }
    for (int b = 0; b < n_blocks; ++b) {
        if (block_powers_mw[b] <= 0.0) continue;
        auto rng = rng_stream(seed, rng_tag::kSymbols, std::uint64_t(link), std::uint64_t(b));
        double acc = 0.0;
        for (int s = 0; s < fc.symbols_per_block(); ++s) {
            const std::int64_t at = lead_in + std::int64_t(b) * m + std::int64_t(s) * ns;
            Eigen::VectorXcd x = fill_symbol(rng, block_powers_mw[b], at, ns);
            acc += x.squaredNorm();
        }
        st.average_power[b] = acc / m;
    }
    return st;
}

Eigen::VectorXcd synthesize_rx(int rx_link, const Topology& topo,
                               const std::vector<SampleStream>& streams,
                               const Eigen::MatrixXcd& h_eq, const LinkImpairments& imp,
                               const FrameConfig& fc, int n_blocks, std::uint64_t noise_seed,
                               double noise_mw) {
    const int E = topo.num_links();
    if (static_cast<int>(streams.size()) != E || h_eq.rows() != E)
        throw DimensionMismatch("synthesize_rx: stream/gain table mismatch");
    const int m = fc.samples_per_block();
    const std::int64_t total = std::int64_t(n_blocks) * m;
    const int rx_node = topo.links[rx_link].dst;

    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(total);
    for (int j = 0; j < E; ++j) {
        const auto& st = streams[j];
        const int mu = imp.timing_offset[j];
        if (st.lead_in < mu)
            throw StreamTooShort("synthesize_rx: stream lead-in shorter than timing offset");
        if (st.samples.size() - st.lead_in < total)
            throw StreamTooShort("synthesize_rx: stream shorter than the period");
        const std::complex<double> h = h_eq(j, rx_link);
        const double phi = imp.node_clock.empty()
                               ? 0.0
                               : imp.node_clock[topo.links[j].src] - imp.node_clock[rx_node];
        // Per-sample rotation e^{j 2 pi phi i / N_c}, advanced incrementally.
        const std::complex<double> step =
            std::polar(1.0, 2.0 * std::numbers::pi * phi / fc.n_subcarriers);
        for (int b = 0; b < n_blocks; ++b) {
            // A shifted stream can straddle block boundaries; skip only when
            // both the block and the straddling predecessor are silent.
            const bool cur_on = st.expected_power[b] > 0.0;
            const bool smear_from_prev = mu > 0 && b > 0 && st.expected_power[b - 1] > 0.0;
            if (!cur_on && !smear_from_prev) continue;
            std::complex<double> rot = std::polar(
                1.0, 2.0 * std::numbers::pi * phi * double(std::int64_t(b) * m) /
                         fc.n_subcarriers);
            const std::int64_t base = std::int64_t(b) * m;
            for (int i = 0; i < m; ++i) {
                y(base + i) += h * rot * st.samples(st.lead_in + base + i - mu);
                rot *= step;
            }
        }
    }
    if (noise_mw > 0.0) {
        auto rng = rng_stream(noise_seed, rng_tag::kNoise, std::uint64_t(rx_link));
        std::normal_distribution<double> gauss(0.0, std::sqrt(noise_mw / 2.0));
        for (std::int64_t i = 0; i < total; ++i)
            y(i) += std::complex<double>(gauss(rng), gauss(rng));
    }
    return y;
}

Eigen::VectorXd measure_block_power(const Eigen::VectorXcd& samples, int samples_per_block) {
    if (samples_per_block < 1) throw EmptyBlock("measure_block_power: empty block");
    const std::int64_t n_blocks = samples.size() / samples_per_block;
    if (n_blocks * samples_per_block != samples.size())
        throw DimensionMismatch("measure_block_power: sample count not a block multiple");
    Eigen::VectorXd out(n_blocks);
    for (std::int64_t b = 0; b < n_blocks; ++b)
        out(b) = samples.segment(b * samples_per_block, samples_per_block).squaredNorm() /
                 samples_per_block;
    return out;
}

double expected_rx_power(const Eigen::VectorXd& gains_col, const Eigen::VectorXd& tx_powers,
                         double noise_mw) {
    if (gains_col.size() != tx_powers.size())
        throw DimensionMismatch("expected_rx_power: gain/power length mismatch");
    return gains_col.dot(tx_powers) + noise_mw;
}

}  // namespace ige
