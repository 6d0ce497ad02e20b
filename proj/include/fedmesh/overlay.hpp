#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fedmesh/graph.hpp"

namespace fedmesh {

enum class OverlayKind { kRing, kStar, kMst, kCustom };

std::string to_string(OverlayKind kind);

// Connected simple subgraph of the connectivity graph; the seed of the
// multigraph.
struct OverlayGraph {
    int node_count = 0;
    std::vector<std::pair<int, int>> edges;  // (i < j), ascending
    OverlayKind kind = OverlayKind::kCustom;
    // Set when a ring was built from weights violating the triangle
    // inequality; the 1.5x tour bound only holds on metric inputs.
    bool metric_warning = false;

    bool has_edge(int i, int j) const;
    std::vector<int> neighbors(int v) const;  // ascending
    int degree(int v) const;
};

// Checks connectivity, simplicity and the per-kind shape (ring: one
// Hamiltonian cycle; star: one hub of degree n-1; mst: n-1 edges, acyclic).
// Throws ValidationError on violation.
void validate_overlay(const OverlayGraph& overlay);

// Christofides tour on a complete metric graph (weights: pair_weight).
// Deterministic: Prim MST from node 0, exact min-weight matching for up to
// 12 odd vertices (greedy + 2-opt above), Euler shortcut in first-encounter
// order from node 0.
OverlayGraph build_ring(const WeightedGraph& conn);

// Hub minimizing the maximum pair weight to any other node, ties to the
// lowest id.
OverlayGraph build_star(const WeightedGraph& conn);

// Prim from node 0; edge ties broken by smaller (min id, max id) pair.
OverlayGraph build_mst(const WeightedGraph& conn);

}  // namespace fedmesh
