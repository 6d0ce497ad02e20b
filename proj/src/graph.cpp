#include "fedmesh/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fedmesh/errors.hpp"

namespace fedmesh {

namespace {
constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();
}

WeightedGraph::WeightedGraph(int node_count) : node_count_(node_count) {
    if (node_count < 1) throw ValidationError("graph needs at least one node");
    w_.assign(static_cast<size_t>(node_count) * node_count, kAbsent);
}

void WeightedGraph::check_node(int v) const {
    if (v < 0 || v >= node_count_)
        throw ValidationError("node id " + std::to_string(v) + " out of range");
}

void WeightedGraph::set_weight(int i, int j, double w) {
    check_node(i);
    check_node(j);
    if (i == j) throw ValidationError("self-loops are not allowed");
    bool fresh = !has_edge(i, j);
    w_[static_cast<size_t>(i) * node_count_ + j] = w;
    if (fresh) {
        auto e = std::make_pair(std::min(i, j), std::max(i, j));
        edges_.insert(std::lower_bound(edges_.begin(), edges_.end(), e), e);
    }
}

void WeightedGraph::set_sym_weight(int i, int j, double w) {
    set_weight(i, j, w);
    set_weight(j, i, w);
}

bool WeightedGraph::has_edge(int i, int j) const {
    check_node(i);
    check_node(j);
    if (i == j) return false;
    return !std::isnan(w_[static_cast<size_t>(i) * node_count_ + j]) ||
           !std::isnan(w_[static_cast<size_t>(j) * node_count_ + i]);
}

double WeightedGraph::weight(int i, int j) const {
    if (!has_edge(i, j))
        throw ValidationError("no link between silo " + std::to_string(i) + " and silo " +
                              std::to_string(j));
    double w = w_[static_cast<size_t>(i) * node_count_ + j];
    if (std::isnan(w)) w = w_[static_cast<size_t>(j) * node_count_ + i];
    return w;
}

double WeightedGraph::pair_weight(int i, int j) const {
    if (!has_edge(i, j))
        throw ValidationError("no link between silo " + std::to_string(i) + " and silo " +
                              std::to_string(j));
    double a = w_[static_cast<size_t>(i) * node_count_ + j];
    double b = w_[static_cast<size_t>(j) * node_count_ + i];
    if (std::isnan(a)) return b;
    if (std::isnan(b)) return a;
    return std::max(a, b);
}

std::vector<int> WeightedGraph::neighbors(int v) const {
    check_node(v);
    std::vector<int> out;
    for (int u = 0; u < node_count_; ++u)
        if (u != v && has_edge(v, u)) out.push_back(u);
    return out;
}

int WeightedGraph::degree(int v) const { return static_cast<int>(neighbors(v).size()); }

bool WeightedGraph::complete() const {
    return static_cast<long>(edges_.size()) ==
           static_cast<long>(node_count_) * (node_count_ - 1) / 2;
}

bool WeightedGraph::connected() const {
    std::vector<bool> seen(node_count_, false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int u : neighbors(v)) {
            if (!seen[u]) {
                seen[u] = true;
                stack.push_back(u);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

bool WeightedGraph::metric(double tol) const {
    if (!complete()) return false;
    for (int i = 0; i < node_count_; ++i)
        for (int j = i + 1; j < node_count_; ++j)
            for (int k = 0; k < node_count_; ++k) {
                if (k == i || k == j) continue;
                if (pair_weight(i, j) > pair_weight(i, k) + pair_weight(k, j) + tol) return false;
            }
    return true;
}

}  // namespace fedmesh
