#include "ige/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "ige/bounds.hpp"
#include "ige/errors.hpp"
#include "ige/linalg.hpp"
#include "ige/rng.hpp"

namespace ige {

ChannelParams ScenarioConfig::channel_params() const {
    ChannelParams p;
    p.k_factor = k_factor;
    p.rho1 = rho1;
    p.rho2 = rho2;
    p.carrier_hz = carrier_hz;
    p.antennas = antennas;
    p.sic_linear = std::pow(10.0, sic_db / 10.0);
    p.noise_mw = noise_mw();
    return p;
}

FrameConfig ScenarioConfig::frame_config() const {
    FrameConfig f;
    f.n_subcarriers = n_subcarriers;
    f.cp_samples = cp_samples;
    f.symbols_per_slot = symbols_per_slot;
    f.slots_per_block = slots_per_block;
    f.qam_order = qam_order;
    return f;
}

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void validate(const ScenarioConfig& c) {
    auto bad = [](const std::string& m) { throw ConfigInvalid(m); };
    if (c.num_nodes < 2) bad("num_nodes must be >= 2");
    if (c.min_dist <= 0 || c.max_dist <= c.min_dist) bad("bad distance bounds");
    if (c.n_subcarriers < 8) bad("n_subcarriers too small");
    if (c.cp_samples < 0 || c.cp_samples >= c.n_subcarriers) bad("bad cp_samples");
    if (c.p_min_mw <= 0 || c.p_max_mw <= c.p_min_mw) bad("bad power range");
    if (c.surplus_blocks < 0) bad("surplus_blocks must be >= 0");
    if (c.trials < 1) bad("trials must be >= 1");
    if (!(c.power_weight >= 0.0 && c.power_weight <= 1.0)) bad("power_weight in [0,1]");
    const int m = static_cast<int>(std::lround(std::sqrt(double(c.qam_order))));
    if (m * m != c.qam_order || c.qam_order < 4) bad("qam_order must be a square");
    const double density = c.num_nodes / (c.area_side * c.area_side / 1e6);
    if (density < 700.0) bad("node density below 700 BSs/km^2");
}

}  // namespace

ScenarioConfig config_from_json(const nlohmann::json& j) {
    ScenarioConfig c;
    read_field(j, "num_nodes", c.num_nodes);
    read_field(j, "area_side", c.area_side);
    read_field(j, "min_dist", c.min_dist);
    read_field(j, "max_dist", c.max_dist);
    read_field(j, "antennas", c.antennas);
    read_field(j, "carrier_hz", c.carrier_hz);
    read_field(j, "bandwidth_hz", c.bandwidth_hz);
    read_field(j, "noise_dbm_hz", c.noise_dbm_hz);
    read_field(j, "k_factor", c.k_factor);
    read_field(j, "rho1", c.rho1);
    read_field(j, "rho2", c.rho2);
    read_field(j, "sic_db", c.sic_db);
    read_field(j, "n_subcarriers", c.n_subcarriers);
    read_field(j, "cp_samples", c.cp_samples);
    read_field(j, "symbols_per_slot", c.symbols_per_slot);
    read_field(j, "slots_per_block", c.slots_per_block);
    read_field(j, "qam_order", c.qam_order);
    read_field(j, "surplus_blocks", c.surplus_blocks);
    read_field(j, "p_min_mw", c.p_min_mw);
    read_field(j, "p_max_mw", c.p_max_mw);
    read_field(j, "beta_total", c.beta_total);
    read_field(j, "to_max_cp_factor", c.to_max_cp_factor);
    read_field(j, "cfo_range", c.cfo_range);
    read_field(j, "power_weight", c.power_weight);
    read_field(j, "single_mcs", c.single_mcs);
    read_field(j, "master_seed", c.master_seed);
    read_field(j, "trials", c.trials);
    read_field(j, "threads", c.threads);
    validate(c);
    return c;
}

nlohmann::json config_to_json(const ScenarioConfig& c) {
    return nlohmann::json{{"num_nodes", c.num_nodes},
                          {"area_side", c.area_side},
                          {"min_dist", c.min_dist},
                          {"max_dist", c.max_dist},
                          {"antennas", c.antennas},
                          {"carrier_hz", c.carrier_hz},
                          {"bandwidth_hz", c.bandwidth_hz},
                          {"noise_dbm_hz", c.noise_dbm_hz},
                          {"k_factor", c.k_factor},
                          {"rho1", c.rho1},
                          {"rho2", c.rho2},
                          {"sic_db", c.sic_db},
                          {"n_subcarriers", c.n_subcarriers},
                          {"cp_samples", c.cp_samples},
                          {"symbols_per_slot", c.symbols_per_slot},
                          {"slots_per_block", c.slots_per_block},
                          {"qam_order", c.qam_order},
                          {"surplus_blocks", c.surplus_blocks},
                          {"p_min_mw", c.p_min_mw},
                          {"p_max_mw", c.p_max_mw},
                          {"beta_total", c.beta_total},
                          {"to_max_cp_factor", c.to_max_cp_factor},
                          {"cfo_range", c.cfo_range},
                          {"power_weight", c.power_weight},
                          {"single_mcs", c.single_mcs},
                          {"master_seed", c.master_seed},
                          {"trials", c.trials},
                          {"threads", c.threads}};
}

void apply_override(nlohmann::json& j, const std::string& dotted, const std::string& value) {
    const auto eq = dotted.find('=');
    std::string path = dotted, val = value;
    if (eq != std::string::npos && value.empty()) {
        path = dotted.substr(0, eq);
        val = dotted.substr(eq + 1);
    }
    nlohmann::json* cur = &j;
    std::stringstream ss(path);
    std::string part, last;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) throw ConfigInvalid("empty override path");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) cur = &((*cur)[parts[i]]);
    last = parts.back();
    // Parse as number/bool when possible, else string.
    try {
        std::size_t pos = 0;
        const double d = std::stod(val, &pos);
        if (pos == val.size()) {
            if (val.find_first_of(".eE") == std::string::npos)
                (*cur)[last] = static_cast<std::int64_t>(d);
            else
                (*cur)[last] = d;
            return;
        }
    } catch (...) {
    }
    if (val == "true" || val == "false")
        (*cur)[last] = (val == "true");
    else
        (*cur)[last] = val;
}

std::string config_hash(const nlohmann::json& canonical) {
    const std::string s = canonical.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

Scenario build_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
    Scenario sc;
    sc.seed = seed;
    sc.topo = generate_topology(seed, cfg.num_nodes, cfg.area_side, cfg.min_dist, cfg.max_dist);
    sc.channels = build_channels(sc.topo, cfg.channel_params(), seed);
    steer_beams(sc.channels, sc.topo);
    equivalent_gains(sc.channels, sc.topo);
    const int period = sc.topo.num_links() + cfg.surplus_blocks;
    if (cfg.single_mcs) {
        std::map<int, double> one{{cfg.qam_order, default_mcs_table().at(cfg.qam_order)}};
        sc.demands = assign_demands(sc.topo, seed, period, one);
    } else {
        sc.demands = assign_demands(sc.topo, seed, period);
    }
    return sc;
}

ScheduleProblem make_schedule_problem(const ScenarioConfig& cfg, const Scenario& sc,
                                      const GraphEstimate* est, bool inflate_with_bounds) {
    ScheduleProblem p;
    p.topo = sc.topo;
    p.period = sc.topo.num_links() + cfg.surplus_blocks;
    const int E = sc.topo.num_links();
    p.g_comm.resize(E);
    for (int l = 0; l < E; ++l) p.g_comm(l) = sc.channels.gains(l, l);
    if (est) {
        p.g_ub = est->g_hat;
        if (inflate_with_bounds) p.g_ub += est->pair_bound;
        // Communication gains are tracked by demodulation, not the power
        // measurements; keep the true diagonal.
        for (int l = 0; l < E; ++l) p.g_ub(l, l) = sc.channels.gains(l, l);
    } else {
        p.g_ub = sc.channels.gains;
    }
    p.required_slots.resize(E);
    p.sinr_min.resize(E);
    for (int l = 0; l < E; ++l) {
        p.required_slots[l] = sc.demands.per_link[l].required_slots;
        p.sinr_min(l) = sc.demands.per_link[l].sinr_threshold;
    }
    p.p_min_mw = cfg.p_min_mw;
    p.p_max_mw = cfg.p_max_mw;
    p.noise_mw = cfg.noise_mw();
    p.tau_slots = cfg.slots_per_block;
    return p;
}

double percentile(std::vector<double> v, double p) {
    if (v.empty()) throw MissingData("percentile of empty sample");
    std::sort(v.begin(), v.end());
    const double idx = p / 100.0 * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
    const std::size_t hi = std::min(v.size() - 1, lo + 1);
    const double w = idx - lo;
    return v[lo] * (1.0 - w) + v[hi] * w;
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw MissingData("KS test needs nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    const double n = double(a.size()) * b.size() / (a.size() + b.size());
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

namespace {

struct TrialRows {
    std::vector<std::vector<double>> rows;
    bool failed = false;
    std::string error;
};

// Runs `fn` over trial indices on a small pool; row order stays by trial.
std::vector<TrialRows> run_trials(int trials, int threads,
                                  const std::function<TrialRows(int)>& fn) {
    std::vector<TrialRows> out(trials);
    if (threads <= 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<int>(threads, trials);
    std::atomic<int> next{0};
    auto worker = [&] {
        while (true) {
            const int t = next.fetch_add(1);
            if (t >= trials) return;
            try {
                out[t] = fn(t);
            } catch (const std::exception& e) {
                out[t].failed = true;
                out[t].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return out;
}

GraphEstimate measurement_round(const ScenarioConfig& cfg, const Scenario& sc,
                                PowerStrategy strategy, int surplus, int to_max, double cfo) {
    IgeOptions opt;
    opt.frame = cfg.frame_config();
    opt.strategy = strategy;
    opt.surplus_blocks = surplus;
    opt.p_min_mw = cfg.p_min_mw;
    opt.p_max_mw = cfg.p_max_mw;
    opt.to_max_samples = to_max;
    opt.cfo_range = cfo;
    opt.beta_total = cfg.beta_total;
    opt.seed = sc.seed;
    return run_ige(sc.topo, sc.channels, opt);
}

void append_error_rows(std::vector<std::vector<double>>& rows, double key, double seed,
                       const GraphEstimate& est) {
    const double gmax = est.g_true.maxCoeff();
    const int E = static_cast<int>(est.g_true.rows());
    for (int j = 0; j < E; ++j)
        for (int i = 0; i < E; ++i) {
            const double t = std::max(est.g_true(j, i), 1e-300);
            const double h = std::max(est.g_hat(j, i), 1e-300);
            rows.push_back({key, seed, double(j), double(i),
                            10.0 * std::log10(t), 10.0 * std::log10(h),
                            10.0 * std::log10(h / t), 10.0 * std::log10(t / gmax),
                            est.pair_bound(j, i), est.kappa});
        }
}

const std::vector<std::string> kErrCols = {"key",    "seed",   "tx",      "rx",   "true_db",
                                           "est_db", "err_db", "rel_db", "bound", "kappa"};

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "estimation-error", "to-sweep",      "cfo-sweep",        "surplus-blocks",
        "block-length",     "power-overhead", "unsatisfied-ratio", "sic-sweep",
        "bound-curves",     "convergence",   "weight-sweep",     "optimality-gap"};
    return names;
}

ExperimentReport run_experiment(const ScenarioConfig& cfg, const std::string& name) {
    ExperimentReport rep;
    rep.name = name;
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw ConfigInvalid("unknown experiment: " + name);

    auto seed_of = [&](int t) { return mix_seed(cfg.master_seed, 1000 + t); };

    if (name == "estimation-error" || name == "sic-sweep") {
        rep.columns = kErrCols;
        std::vector<double> keys{0.0};
        if (name == "sic-sweep") keys = {-70.0, -80.0, -90.0, -100.0};
        auto res = run_trials(cfg.trials, cfg.threads, [&](int t) {
            TrialRows tr;
            for (double key : keys) {
                ScenarioConfig c = cfg;
                if (name == "sic-sweep") c.sic_db = key;
                Scenario sc = build_scenario(c, seed_of(t));
                GraphEstimate est = measurement_round(
                    c, sc, PowerStrategy::kAppendSingular, c.surplus_blocks,
                    c.to_max_cp_factor * c.cp_samples, c.cfo_range);
                append_error_rows(tr.rows, key, double(seed_of(t)), est);
            }
            return tr;
        });
        for (auto& r : res) {
            if (r.failed) {
                ++rep.failures;
                continue;
            }
            for (auto& row : r.rows) rep.rows.push_back(row);
        }
    } else if (name == "to-sweep" || name == "cfo-sweep") {
        rep.columns = kErrCols;
        const std::vector<double> keys = (name == "to-sweep")
                                             ? std::vector<double>{0.0, 1.0, 2.0, 3.0}
                                             : std::vector<double>{0.0, 0.1, 0.25, 0.5};
        auto res = run_trials(cfg.trials, cfg.threads, [&](int t) {
            TrialRows tr;
            Scenario sc = build_scenario(cfg, seed_of(t));
            for (double key : keys) {
                const int to = name == "to-sweep" ? int(key) * cfg.cp_samples : 0;
                const double cfo = name == "cfo-sweep" ? key : 0.0;
                GraphEstimate est = measurement_round(cfg, sc, PowerStrategy::kAppendSingular,
                                                      cfg.surplus_blocks, to, cfo);
                append_error_rows(tr.rows, key, double(seed_of(t)), est);
            }
            return tr;
        });
        for (auto& r : res) {
            if (r.failed) {
                ++rep.failures;
                continue;
            }
            for (auto& row : r.rows) rep.rows.push_back(row);
        }
    } else if (name == "surplus-blocks") {
        rep.columns = {"surplus", "seed", "kappa_random", "kappa_appsing"};
        auto res = run_trials(cfg.trials, cfg.threads, [&](int t) {
            TrialRows tr;
            Scenario sc = build_scenario(cfg, seed_of(t));
            for (int surplus : {0, 1, 2, 3, 4}) {
                const int nb = sc.topo.num_links() + surplus;
                Schedule01 sched = build_ige_schedule(sc.topo, nb);
                PowerMatrix pr = build_power_matrix(sched, nb, PowerStrategy::kRandom,
                                                    sc.seed, cfg.p_min_mw, cfg.p_max_mw);
                PowerMatrix pa = build_power_matrix(sched, nb, PowerStrategy::kAppendSingular,
                                                    sc.seed, cfg.p_min_mw, cfg.p_max_mw);
                tr.rows.push_back({double(surplus), double(seed_of(t)),
                                   condition_number(pr.P), condition_number(pa.P)});
            }
            return tr;
        });
        for (auto& r : res) {
            if (r.failed) {
                ++rep.failures;
                continue;
            }
            for (auto& row : r.rows) rep.rows.push_back(row);
        }
    } else if (name == "block-length") {
        rep.columns = kErrCols;  // key = number of OFDM symbols per block
        auto res = run_trials(cfg.trials, cfg.threads, [&](int t) {
            TrialRows tr;
            Scenario sc = build_scenario(cfg, seed_of(t));
            for (int nsym : {1, 7, 14, 28}) {
                ScenarioConfig c = cfg;
                c.symbols_per_slot = nsym;
                GraphEstimate est = measurement_round(
                    c, sc, PowerStrategy::kAppendSingular, c.surplus_blocks, 0, 0.0);
                append_error_rows(tr.rows, double(nsym), double(seed_of(t)), est);
            }
            return tr;
        });
        for (auto& r : res) {
            if (r.failed) {
                ++rep.failures;
                continue;
            }
            for (auto& row : r.rows) rep.rows.push_back(row);
        }
    } else if (name == "power-overhead" || name == "unsatisfied-ratio" ||
               name == "weight-sweep") {
        if (name == "power-overhead")
            rep.columns = {"seed", "p_baseline", "p_shaped", "overhead", "kappa", "iters"};
        else if (name == "unsatisfied-ratio")
            rep.columns = {"seed", "with_bounds", "unsatisfied_ratio"};
        else
            rep.columns = {"alpha_power", "seed", "kappa", "power_norm"};
        auto res = run_trials(cfg.trials, cfg.threads, [&](int t) {
            TrialRows tr;
            Scenario sc = build_scenario(cfg, seed_of(t));
            GraphEstimate est = measurement_round(cfg, sc, PowerStrategy::kAppendSingular,
                                                  cfg.surplus_blocks, 0, 0.0);
            if (name == "power-overhead") {
                ScheduleProblem prob = make_schedule_problem(cfg, sc, &est, true);
                P3Options p3o;
                p3o.alpha = 1.0 - cfg.power_weight;
                p3o.seed = sc.seed;
                JointResult jr = joint_schedule(prob, ScaOptions(), p3o);
                const double p0 = jr.baseline.total_power;
                const double p1 = jr.shaped.power.P.sum();
                tr.rows.push_back({double(seed_of(t)), p0, p1, (p1 - p0) / p0,
                                   jr.shaped.kappa, double(jr.shaped.iterations)});
            } else if (name == "unsatisfied-ratio") {
                for (bool with_bounds : {true, false}) {
                    ScheduleProblem prob = make_schedule_problem(cfg, sc, &est, with_bounds);
                    Schedule sched = solve_p2_sca(prob);
                    ScheduleProblem truth = make_schedule_problem(cfg, sc, nullptr, false);
                    ScheduleMetrics m =
                        evaluate_schedule(truth, sched.delta, sched.P, sched.P);
                    tr.rows.push_back(
                        {double(seed_of(t)), with_bounds ? 1.0 : 0.0, m.unsatisfied_ratio});
                }
            } else {
                for (double pw : {0.2, 0.5, 0.8, 0.95}) {
                    ScheduleProblem prob = make_schedule_problem(cfg, sc, &est, true);
                    P3Options p3o;
                    p3o.alpha = 1.0 - pw;
                    p3o.seed = sc.seed;
                    JointResult jr = joint_schedule(prob, ScaOptions(), p3o);
                    tr.rows.push_back({pw, double(seed_of(t)), jr.shaped.kappa,
                                       jr.shaped.power.P.sum() / jr.baseline.total_power});
                }
            }
            return tr;
        });
        for (auto& r : res) {
            if (r.failed) {
                ++rep.failures;
                continue;
            }
            for (auto& row : r.rows) rep.rows.push_back(row);
        }
    } else if (name == "convergence") {
        rep.columns = {"seed", "iter", "e_value", "converged"};
        auto res = run_trials(cfg.trials, cfg.threads, [&](int t) {
            TrialRows tr;
            Scenario sc = build_scenario(cfg, seed_of(t));
            GraphEstimate est = measurement_round(cfg, sc, PowerStrategy::kAppendSingular,
                                                  cfg.surplus_blocks, 0, 0.0);
            ScheduleProblem prob = make_schedule_problem(cfg, sc, &est, true);
            Schedule sched = solve_p2_sca(prob);
            P3Options p3o;
            p3o.alpha = 1.0 - cfg.power_weight;
            p3o.seed = sc.seed;
            P3Result pr = solve_p3(prob, sched.delta, sched.total_power, sched.P, p3o);
            for (std::size_t k = 0; k < pr.e_history.size(); ++k)
                tr.rows.push_back({double(seed_of(t)), double(k), pr.e_history[k],
                                   k + 1 == pr.e_history.size() ? 1.0 : 0.0});
            return tr;
        });
        for (auto& r : res) {
            if (r.failed) {
                ++rep.failures;
                continue;
            }
            for (auto& row : r.rows) rep.rows.push_back(row);
        }
    } else if (name == "optimality-gap") {
        rep.columns = {"seed", "sca_power", "oracle_power", "ratio"};
        auto res = run_trials(cfg.trials, cfg.threads, [&](int t) {
            TrialRows tr;
            Scenario sc = build_scenario(cfg, seed_of(t));
            ScheduleProblem prob = make_schedule_problem(cfg, sc, nullptr, false);
            Schedule sched = solve_p2_sca(prob);
            OracleResult oracle = brute_force_oracle(prob);
            tr.rows.push_back({double(seed_of(t)), sched.total_power, oracle.objective,
                               sched.total_power / oracle.objective});
            return tr;
        });
        for (auto& r : res) {
            if (r.failed) {
                ++rep.failures;
                continue;
            }
            for (auto& row : r.rows) rep.rows.push_back(row);
        }
    } else if (name == "bound-curves") {
        rep.columns = {"qam", "delta", "n_symbols", "upper_bound", "empirical"};
        // Deterministic curve evaluation; the empirical side simulates the
        // average-power deviation event directly.
        for (int qam : {4, 16, 64, 256}) {
            QamConstellation q(qam);
            for (double delta : {0.01, 0.02}) {
                for (int nk : {5, 10, 25, 50, 78, 100}) {
                    const double ub = tx_power_deviation_bound(
                        DeviationBoundInputs::from_qam(q, cfg.n_subcarriers, cfg.cp_samples,
                                                       nk, delta));
                    int hits = 0;
                    const int mc = 400;
                    FrameConfig fc = cfg.frame_config();
                    fc.qam_order = qam;
                    fc.symbols_per_slot = nk;
                    for (int trial = 0; trial < mc; ++trial) {
                        SampleStream st = build_link_stream(
                            0, fc, q, {1.0}, mix_seed(cfg.master_seed, 7000 + trial), 0);
                        if (std::abs(st.average_power[0] - 1.0) >= delta) ++hits;
                    }
                    rep.rows.push_back({double(qam), delta, double(nk), ub,
                                        double(hits) / mc});
                }
            }
        }
    }

    // Shared summary statistics.
    rep.summary["experiment"] = name;
    rep.summary["trials"] = cfg.trials;
    rep.summary["failures"] = rep.failures;
    return rep;
}

void write_report(const ExperimentReport& rep, const nlohmann::json& canonical_config,
                  const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string csv_path = out_dir + "/" + rep.name + ".csv";
    std::ofstream csv(csv_path);
    for (std::size_t i = 0; i < rep.columns.size(); ++i)
        csv << rep.columns[i] << (i + 1 < rep.columns.size() ? "," : "\n");
    csv.precision(12);
    for (const auto& row : rep.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            csv << row[i] << (i + 1 < row.size() ? "," : "\n");
    }
    nlohmann::json s = rep.summary;
    s["config"] = canonical_config;
    s["config_hash"] = config_hash(canonical_config);
    s["rows"] = rep.rows.size();
    std::ofstream js(out_dir + "/" + rep.name + ".summary.json");
    js << s.dump(2) << "\n";
}

std::string summarize_report(const std::string& out_dir, const std::string& name) {
    namespace fs = std::filesystem;
    const std::string csv_path = out_dir + "/" + name + ".csv";
    const std::string sum_path = out_dir + "/" + name + ".summary.json";
    if (!fs::exists(csv_path) || !fs::exists(sum_path))
        throw MissingData("report files missing for " + name);
    std::ifstream js(sum_path);
    nlohmann::json s = nlohmann::json::parse(js);

    std::ifstream csv(csv_path);
    std::string header;
    std::getline(csv, header);
    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string c;
        std::vector<double> row;
        while (std::getline(ss, c, ',')) row.push_back(std::stod(c));
        rows.push_back(row);
    }
    if (rows.empty()) throw MissingData("no data rows in " + csv_path);

    std::ostringstream os;
    os << "experiment " << name << ": " << rows.size() << " rows, failures "
       << s.value("failures", 0) << "\n";
    auto col_of = [&](const std::string& want) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == want) return static_cast<int>(i);
        return -1;
    };
    const int err = col_of("err_db"), rel = col_of("rel_db");
    if (err >= 0 && rel >= 0) {
        std::vector<double> sig;
        for (const auto& r : rows)
            if (r[rel] >= -30.0) sig.push_back(std::abs(r[err]));
        if (!sig.empty())
            os << "  significant-pair |err| dB: median " << percentile(sig, 50.0) << ", p95 "
               << percentile(sig, 95.0) << "\n";
    }
    for (const std::string& c : {"overhead", "ratio", "unsatisfied_ratio", "kappa"}) {
        const int idx = col_of(c);
        if (idx < 0) continue;
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(r[idx]);
        os << "  " << c << ": median " << percentile(v, 50.0) << ", p95 "
           << percentile(v, 95.0) << "\n";
    }
    return os.str();
}

}  // namespace ige
