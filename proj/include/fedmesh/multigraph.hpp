#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "fedmesh/overlay.hpp"

namespace fedmesh {

enum class EdgeLabel : uint8_t { kWeak = 0, kStrong = 1 };

// Overlay plus a per-edge multiplicity n(i,j): one strong copy and n-1 weak
// copies between each silo pair.
struct Multigraph {
    int node_count = 0;
    std::map<std::pair<int, int>, int> multiplicity;  // overlay edge -> n(i,j)
    int t_max = 1;

    std::vector<std::pair<int, int>> edge_list() const;  // ascending
};

// One simple graph used for one communication round: a strong/weak label per
// overlay edge plus the derived isolated-node set.
struct GraphState {
    std::vector<std::pair<int, int>> edges;  // ascending (i < j)
    std::vector<EdgeLabel> labels;           // parallel to edges
    std::vector<int> isolated;               // derived, ascending

    EdgeLabel label(int i, int j) const;  // throws if the edge is absent
    bool is_isolated(int v) const;
    bool all_strong() const;
    // Strong-labelled neighbors of v, ascending.
    std::vector<int> strong_neighbors(int v) const;
};

GraphState make_state(std::vector<std::pair<int, int>> edges, std::vector<EdgeLabel> labels,
                      int node_count);

// Periodic schedule of s_max states; state 0 is the all-strong overlay.
struct StateSchedule {
    std::vector<GraphState> states;
    long s_max = 0;

    const GraphState& at_round(long round) const { return states[round % s_max]; }
};

// Algorithm: n(i,j) = min(t, round(d(i,j)/d_min)) clamped to >= 1, where
// d_min is the smallest delay over the overlay edges and round is
// half-to-even. Delays are the caller's per-pair overlay delays in ms.
Multigraph construct_multigraph(const OverlayGraph& overlay,
                                const std::map<std::pair<int, int>, double>& delays, int t);

// Parses the multigraph into its LCM-many states via per-edge countdown
// counters: an edge is strong exactly when its counter sits at n(i,j).
// Throws when the LCM exceeds 10^6 states.
StateSchedule parse_states(const Multigraph& mg);

// Nodes whose incident edges are all weak.
std::vector<int> isolated_nodes(std::span<const std::pair<int, int>> edges,
                                std::span<const EdgeLabel> labels, int node_count);
std::vector<int> isolated_nodes(const GraphState& state, int node_count);

long round_half_even(double x);

}  // namespace fedmesh
