#ifndef IGE_HARNESS_HPP
#define IGE_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ige/channel.hpp"
#include "ige/estimator.hpp"
#include "ige/optimizer.hpp"
#include "ige/topology.hpp"

namespace ige {

struct ScenarioConfig {
    // Geometry / population
    int num_nodes = 9;
    double area_side = 100.0;
    double min_dist = 15.0;
    double max_dist = 100.0;
    // Radio
    int antennas = 100;
    double carrier_hz = 28e9;
    double bandwidth_hz = 250e6;
    double noise_dbm_hz = -174.0;
    double k_factor = 2.0;
    double rho1 = 2.0;
    double rho2 = 20.0;
    double sic_db = -100.0;
    // Frame
    int n_subcarriers = 1024;
    int cp_samples = 72;
    int symbols_per_slot = 14;
    int slots_per_block = 1;
    int qam_order = 16;
    // Measurement
    int surplus_blocks = 2;
    double p_min_mw = 800.0;
    double p_max_mw = 1200.0;
    double beta_total = 0.05;
    int to_max_cp_factor = 0;     // timing offsets up to this multiple of CP
    double cfo_range = 0.0;       // pairwise CFO span, subcarrier spacings
    // Optimization
    double power_weight = 0.8;    // (1 - alpha) in the scalarization
    bool single_mcs = true;       // pin every link to qam_order's MCS row
    // Trials
    std::uint64_t master_seed = 1;
    int trials = 30;
    int threads = 0;              // 0 = hardware concurrency

    double noise_mw() const {
        return std::pow(10.0, (noise_dbm_hz + 10.0 * std::log10(bandwidth_hz)) / 10.0);
    }
    ChannelParams channel_params() const;
    FrameConfig frame_config() const;
};

ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScenarioConfig& c);
// dotted-path override, e.g. "frame.n_subcarriers=256" or "trials=10"
void apply_override(nlohmann::json& j, const std::string& dotted, const std::string& value);
std::string config_hash(const nlohmann::json& canonical);

// One fully built scenario instance.
struct Scenario {
    Topology topo;
    ChannelSet channels;
    DemandSet demands;
    std::uint64_t seed = 0;
};

Scenario build_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

// Schedule problem with conservative gains from a measurement round (or the
// truth when use_estimate is false).
ScheduleProblem make_schedule_problem(const ScenarioConfig& cfg, const Scenario& sc,
                                      const GraphEstimate* est, bool inflate_with_bounds);

struct ExperimentRow {
    std::vector<std::pair<std::string, double>> values;
};

struct ExperimentReport {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    nlohmann::json summary;
    int failures = 0;
};

// Known experiment names.
const std::vector<std::string>& experiment_names();

ExperimentReport run_experiment(const ScenarioConfig& cfg, const std::string& name);

// Writes <name>.csv and <name>.summary.json under out_dir.
void write_report(const ExperimentReport& rep, const nlohmann::json& canonical_config,
                  const std::string& out_dir);

// Aggregates a written report back into a human-readable pass/fail summary.
std::string summarize_report(const std::string& out_dir, const std::string& name);

// Two-sample Kolmogorov-Smirnov asymptotic p-value.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

// Percentile of a sample (linear interpolation), p in [0, 100].
double percentile(std::vector<double> v, double p);

}  // namespace ige

#endif
