#ifndef IGE_TOPOLOGY_HPP
#define IGE_TOPOLOGY_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ige {

struct Node {
    int id = 0;
    double x = 0.0;  // m
    double y = 0.0;  // m
};

// Directed link from node src to node dst.
struct Link {
    int src = 0;
    int dst = 0;
    bool operator==(const Link&) const = default;
};

struct Topology {
    std::vector<Node> nodes;
    int gateway = 0;
    // Both directions of every route-tree edge, ordered (parent->child then
    // child->parent per edge, edges in node-id order).
    std::vector<Link> links;
    double area_side = 100.0;  // m
    std::uint64_t seed = 0;

    double distance(int a, int b) const;
    int num_links() const { return static_cast<int>(links.size()); }
    int find_link(int src, int dst) const;  // -1 when absent
};

struct RouteTree {
    // next_hop[v] = next node on v's path to the gateway (gateway maps to itself).
    std::vector<int> next_hop;
    std::vector<double> dist_to_gateway;
    std::vector<std::vector<int>> path_to_gateway;  // per node, node ids incl. endpoints
};

struct LinkDemand {
    double demand_bits = 0.0;
    double rate_bits_per_slot = 0.0;
    int required_slots = 1;
    int qam_order = 16;
    double sinr_threshold = 0.0;  // linear
};

struct DemandSet {
    std::vector<LinkDemand> per_link;  // aligned with Topology::links
    int period_slots = 0;
};

// QAM order -> required SINR (dB).  Configuration, not ground truth.
const std::map<int, double>& default_mcs_table();

Topology generate_topology(std::uint64_t seed, int num_nodes, double area_side = 100.0,
                           double min_dist = 15.0, double max_dist = 100.0);

RouteTree compute_routes(const Topology& topo);

// Populates Topology::links from the route tree (both directions per edge).
void attach_tree_links(Topology& topo, const RouteTree& routes);

DemandSet assign_demands(const Topology& topo, std::uint64_t seed, int period_slots,
                         const std::map<int, double>& mcs_table = default_mcs_table());

nlohmann::json topology_to_json(const Topology& topo);
Topology topology_from_json(const nlohmann::json& j);
nlohmann::json demands_to_json(const DemandSet& d);
DemandSet demands_from_json(const nlohmann::json& j);

}  // namespace ige

#endif
