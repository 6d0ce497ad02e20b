#pragma once

#include <utility>
#include <vector>

namespace fedmesh {

// Dense weighted graph over silo ids 0..n-1. Edges are undirected pairs but
// each direction carries its own weight: d(i,j) and d(j,i) differ whenever
// the endpoints differ in compute time or capacity.
class WeightedGraph {
public:
    explicit WeightedGraph(int node_count);

    int node_count() const { return node_count_; }

    // Sets both directions at once.
    void set_sym_weight(int i, int j, double w);
    // Sets one direction; the edge exists once either direction is set.
    void set_weight(int i, int j, double w);

    bool has_edge(int i, int j) const;
    // Directed weight d(i,j); throws ValidationError when the edge is absent.
    double weight(int i, int j) const;
    // Scalar weight of the unordered pair: max over the two directions.
    double pair_weight(int i, int j) const;

    // Unordered edges (i < j), ascending.
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    std::vector<int> neighbors(int v) const;
    int degree(int v) const;

    bool complete() const;
    bool connected() const;
    // Triangle inequality on pair weights; requires a complete graph.
    bool metric(double tol = 1e-9) const;

private:
    void check_node(int v) const;

    int node_count_;
    std::vector<double> w_;  // row-major n x n, NaN = absent
    std::vector<std::pair<int, int>> edges_;
};

}  // namespace fedmesh
