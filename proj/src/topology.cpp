#include "ige/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "ige/errors.hpp"
#include "ige/rng.hpp"

namespace ige {

double Topology::distance(int a, int b) const {
    const double dx = nodes[a].x - nodes[b].x;
    const double dy = nodes[a].y - nodes[b].y;
    return std::hypot(dx, dy);
}

int Topology::find_link(int src, int dst) const {
    for (std::size_t i = 0; i < links.size(); ++i)
        if (links[i].src == src && links[i].dst == dst) return static_cast<int>(i);
    return -1;
}

const std::map<int, double>& default_mcs_table() {
    static const std::map<int, double> table = {
        {4, 9.8}, {16, 16.5}, {64, 22.5}, {256, 28.4}};
    return table;
}

Topology generate_topology(std::uint64_t seed, int num_nodes, double area_side,
                           double min_dist, double max_dist) {
    if (num_nodes < 2) throw PlacementInfeasible("need at least 2 nodes");
    constexpr int kMaxAttempts = 100000;
    auto rng = rng_stream(seed, rng_tag::kTopology);
    std::uniform_real_distribution<double> uni(0.0, area_side);

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        std::vector<Node> nodes(num_nodes);
        for (int i = 0; i < num_nodes; ++i) nodes[i] = {i, uni(rng), uni(rng)};
        bool ok = true;
        for (int i = 0; i < num_nodes && ok; ++i) {
            for (int j = i + 1; j < num_nodes; ++j) {
                const double d = std::hypot(nodes[i].x - nodes[j].x, nodes[i].y - nodes[j].y);
                if (d < min_dist || d > max_dist) {
                    ok = false;
                    break;
                }
            }
        }
        if (!ok) continue;

        Topology topo;
        topo.nodes = std::move(nodes);
        topo.area_side = area_side;
        topo.seed = seed;
        // Gateway: node closest to the field centroid.
        double cx = 0.0, cy = 0.0;
        for (const auto& n : topo.nodes) {
            cx += n.x;
            cy += n.y;
        }
        cx /= num_nodes;
        cy /= num_nodes;
        int gw = 0;
        double best = std::numeric_limits<double>::max();
        for (int i = 0; i < num_nodes; ++i) {
            const double d = std::hypot(topo.nodes[i].x - cx, topo.nodes[i].y - cy);
            if (d < best) {
                best = d;
                gw = i;
            }
        }
        topo.gateway = gw;
        attach_tree_links(topo, compute_routes(topo));
        return topo;
    }
    throw PlacementInfeasible("rejection sampling exhausted; geometry over-constrained");
}

RouteTree compute_routes(const Topology& topo) {
    const int n = static_cast<int>(topo.nodes.size());
    RouteTree rt;
    rt.next_hop.assign(n, -1);
    rt.dist_to_gateway.assign(n, std::numeric_limits<double>::infinity());
    rt.path_to_gateway.assign(n, {});

    // Dijkstra from the gateway on the complete distance graph.
    std::vector<bool> settled(n, false);
    std::vector<int> prev(n, -1);
    rt.dist_to_gateway[topo.gateway] = 0.0;
    for (int iter = 0; iter < n; ++iter) {
        int u = -1;
        double du = std::numeric_limits<double>::infinity();
        for (int v = 0; v < n; ++v)
            if (!settled[v] && rt.dist_to_gateway[v] < du) {
                du = rt.dist_to_gateway[v];
                u = v;
            }
        if (u < 0) break;
        settled[u] = true;
        for (int v = 0; v < n; ++v) {
            if (settled[v] || v == u) continue;
            const double cand = du + topo.distance(u, v);
            if (cand < rt.dist_to_gateway[v]) {
                rt.dist_to_gateway[v] = cand;
                prev[v] = u;
            }
        }
    }
    rt.next_hop[topo.gateway] = topo.gateway;
    for (int v = 0; v < n; ++v) {
        if (v != topo.gateway) rt.next_hop[v] = prev[v];
        std::vector<int> path{v};
        int cur = v;
        while (cur != topo.gateway) {
            cur = rt.next_hop[cur];
            path.push_back(cur);
        }
        rt.path_to_gateway[v] = std::move(path);
    }
    return rt;
}

void attach_tree_links(Topology& topo, const RouteTree& routes) {
    topo.links.clear();
    for (int v = 0; v < static_cast<int>(topo.nodes.size()); ++v) {
        if (v == topo.gateway) continue;
        const int p = routes.next_hop[v];
        topo.links.push_back({p, v});  // downstream
        topo.links.push_back({v, p});  // upstream
    }
}

DemandSet assign_demands(const Topology& topo, std::uint64_t seed, int period_slots,
                         const std::map<int, double>& mcs_table) {
    if (period_slots < 1) throw ConfigInvalid("period_slots must be >= 1");
    const int E = topo.num_links();
    const int n = static_cast<int>(topo.nodes.size());
    auto rng = rng_stream(seed, rng_tag::kDemand);

    DemandSet ds;
    ds.period_slots = period_slots;
    ds.per_link.resize(E);

    std::uniform_int_distribution<int> slots(1, std::max(1, period_slots - 1));
    std::vector<int> req(E);
    for (int l = 0; l < E; ++l) req[l] = std::min(slots(rng), period_slots);

    // Per-node slot budgets: the sum of required slots over a node's outgoing
    // (resp. incoming) links must fit in the period, otherwise no schedule
    // satisfying the one-link-per-node-per-block constraints exists.
    auto node_load = [&](int node, bool outgoing) {
        int s = 0;
        for (int l = 0; l < E; ++l) {
            const auto& lk = topo.links[l];
            if ((outgoing && lk.src == node) || (!outgoing && lk.dst == node)) s += req[l];
        }
        return s;
    };
    for (int node = 0; node < n; ++node) {
        for (bool out : {true, false}) {
            while (node_load(node, out) > period_slots) {
                int worst = -1;
                for (int l = 0; l < E; ++l) {
                    const auto& lk = topo.links[l];
                    if ((out && lk.src == node) || (!out && lk.dst == node))
                        if (worst < 0 || req[l] > req[worst]) worst = l;
                }
                if (req[worst] <= 1) break;
                --req[worst];
            }
        }
    }

    // MCS: pick a modulation per link from the table; the waveform layer uses
    // the order, the scheduler uses the SINR threshold.
    std::vector<int> orders;
    for (const auto& [order, g] : mcs_table) orders.push_back(order);
    std::uniform_int_distribution<std::size_t> pick(0, orders.size() - 1);
    for (int l = 0; l < E; ++l) {
        auto& d = ds.per_link[l];
        d.required_slots = req[l];
        d.qam_order = orders[pick(rng)];
        d.sinr_threshold = std::pow(10.0, mcs_table.at(d.qam_order) / 10.0);
        // Rate bookkeeping: demand expressed directly in slots; keep a nominal
        // bits picture consistent with required_slots = ceil(D / (R tau)).
        d.rate_bits_per_slot = 14.0 * 1024.0 * std::log2(double(d.qam_order));
        d.demand_bits = d.rate_bits_per_slot * req[l];
    }
    return ds;
}

nlohmann::json topology_to_json(const Topology& topo) {
    nlohmann::json j;
    j["area_side"] = topo.area_side;
    j["seed"] = topo.seed;
    j["gateway"] = topo.gateway;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : topo.nodes) j["nodes"].push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}});
    j["links"] = nlohmann::json::array();
    for (const auto& l : topo.links) j["links"].push_back({{"src", l.src}, {"dst", l.dst}});
    return j;
}

Topology topology_from_json(const nlohmann::json& j) {
    Topology t;
    t.area_side = j.at("area_side").get<double>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.gateway = j.at("gateway").get<int>();
    for (const auto& n : j.at("nodes"))
        t.nodes.push_back({n.at("id").get<int>(), n.at("x").get<double>(), n.at("y").get<double>()});
    for (const auto& l : j.at("links"))
        t.links.push_back({l.at("src").get<int>(), l.at("dst").get<int>()});
    return t;
}

nlohmann::json demands_to_json(const DemandSet& d) {
    nlohmann::json j;
    j["period_slots"] = d.period_slots;
    j["demands"] = nlohmann::json::array();
    for (const auto& x : d.per_link)
        j["demands"].push_back({{"demand_bits", x.demand_bits},
                                {"rate_bits_per_slot", x.rate_bits_per_slot},
                                {"required_slots", x.required_slots},
                                {"qam_order", x.qam_order},
                                {"sinr_threshold", x.sinr_threshold}});
    return j;
}

DemandSet demands_from_json(const nlohmann::json& j) {
    DemandSet d;
    d.period_slots = j.at("period_slots").get<int>();
    for (const auto& x : j.at("demands")) {
        LinkDemand ld;
        ld.demand_bits = x.at("demand_bits").get<double>();
        ld.rate_bits_per_slot = x.at("rate_bits_per_slot").get<double>();
        ld.required_slots = x.at("required_slots").get<int>();
        ld.qam_order = x.at("qam_order").get<int>();
        ld.sinr_threshold = x.at("sinr_threshold").get<double>();
        d.per_link.push_back(ld);
    }
    return d;
}

}  // namespace ige
