#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fedmesh/graph.hpp"

namespace fedmesh {

// Units: time in milliseconds, capacity in megabits per millisecond
// (numerically equal to Gbps), model size in megabits. The transfer term
// M/A then comes out in milliseconds with no conversion constants.
struct SiloParams {
    int id = 0;
    double compute_ms = 0.0;   // time for one local model update
    double up_capacity = 0.0;  // Mbit/ms == Gbps
    double down_capacity = 0.0;

    bool operator==(const SiloParams&) const = default;
};

struct LinkParams {
    int src = 0;
    int dst = 0;
    double latency_ms = 0.0;

    bool operator==(const LinkParams&) const = default;
};

// Validated network description. Latencies are stored undirected: the file
// may list either or both directions, but both must agree.
struct NetworkSpec {
    std::string name;
    double model_size_mbit = 0.0;
    int local_updates = 1;  // u
    std::vector<SiloParams> silos;
    // canonical (min id, max id) -> latency
    std::map<std::pair<int, int>, double> links;

    int silo_count() const { return static_cast<int>(silos.size()); }
    bool has_link(int i, int j) const;
    double latency(int i, int j) const;

    bool operator==(const NetworkSpec&) const = default;
};

// Throws ValidationError naming the violated invariant; parse failures carry
// the offending line number.
NetworkSpec load_network(const std::string& path);
NetworkSpec parse_network(const std::string& text, const std::string& origin = "network");
void save_network(const NetworkSpec& spec, const std::string& path);
std::string network_to_string(const NetworkSpec& spec);
void validate_network(const NetworkSpec& spec);

// Weighted graph over the links: weight(i,j) is the static delay
// evaluated with the degree sets of the full connectivity.
WeightedGraph connectivity_graph(const NetworkSpec& spec);

}  // namespace fedmesh
