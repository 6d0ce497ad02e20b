#include "fedmesh/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "fedmesh/errors.hpp"

namespace fedmesh {

std::string to_string(OverlayKind kind) {
    switch (kind) {
        case OverlayKind::kRing: return "ring";
        case OverlayKind::kStar: return "star";
        case OverlayKind::kMst: return "mst";
        case OverlayKind::kCustom: return "custom";
    }
    return "custom";
}

bool OverlayGraph::has_edge(int i, int j) const {
    auto e = std::make_pair(std::min(i, j), std::max(i, j));
    return std::binary_search(edges.begin(), edges.end(), e);
}

std::vector<int> OverlayGraph::neighbors(int v) const {
    std::vector<int> out;
    for (const auto& [a, b] : edges) {
        if (a == v) out.push_back(b);
        if (b == v) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

int OverlayGraph::degree(int v) const { return static_cast<int>(neighbors(v).size()); }

namespace {

bool overlay_connected(const OverlayGraph& o) {
    if (o.node_count == 0) return false;
    std::vector<std::vector<int>> adj(o.node_count);
    for (const auto& [a, b] : o.edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<bool> seen(o.node_count, false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int u : adj[v])
            if (!seen[u]) {
                seen[u] = true;
                stack.push_back(u);
            }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

// Prim from node 0 over pair weights; ties broken by the smaller
// (min id, max id) edge.
std::vector<std::pair<int, int>> prim_mst(const WeightedGraph& g) {
    const int n = g.node_count();
    if (!g.connected()) throw ValidationError("spanning tree requires a connected graph");
    constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr auto kNoEdge = std::make_pair(std::numeric_limits<int>::max(),
                                            std::numeric_limits<int>::max());
    std::vector<bool> in_tree(n, false);
    std::vector<double> key(n, kInf);
    std::vector<std::pair<int, int>> via(n, kNoEdge);
    key[0] = 0.0;
    std::vector<std::pair<int, int>> edges;
    for (int it = 0; it < n; ++it) {
        int best = -1;
        for (int v = 0; v < n; ++v) {
            if (in_tree[v] || key[v] == kInf) continue;
            if (best == -1 || key[v] < key[best] ||
                (key[v] == key[best] && via[v] < via[best]))
                best = v;
        }
        if (best == -1) throw ValidationError("spanning tree requires a connected graph");
        in_tree[best] = true;
        if (via[best] != kNoEdge) edges.push_back(via[best]);
        for (int u = 0; u < n; ++u) {
            if (in_tree[u] || !g.has_edge(best, u)) continue;
            double w = g.pair_weight(best, u);
            auto e = std::make_pair(std::min(best, u), std::max(best, u));
            if (w < key[u] || (w == key[u] && e < via[u])) {
                key[u] = w;
                via[u] = e;
            }
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

// Exact minimum-weight perfect matching by enumeration. |odd| <= 12 keeps
// this at 11!! = 10395 candidates.
void enumerate_matchings(const WeightedGraph& g, const std::vector<int>& odd, double acc,
                         std::vector<std::pair<int, int>>& current, double& best_w,
                         std::vector<std::pair<int, int>>& best) {
    if (odd.empty()) {
        if (acc < best_w) {
            best_w = acc;
            best = current;
        }
        return;
    }
    int a = odd.front();
    for (size_t i = 1; i < odd.size(); ++i) {
        int b = odd[i];
        double w = g.pair_weight(a, b);
        if (acc + w >= best_w) continue;
        std::vector<int> rest;
        rest.reserve(odd.size() - 2);
        for (size_t k = 1; k < odd.size(); ++k)
            if (k != i) rest.push_back(odd[k]);
        current.emplace_back(std::min(a, b), std::max(a, b));
        enumerate_matchings(g, rest, acc + w, current, best_w, best);
        current.pop_back();
    }
}

std::vector<std::pair<int, int>> greedy_matching(const WeightedGraph& g,
                                                 const std::vector<int>& odd) {
    struct Cand {
        double w;
        int a, b;
    };
    std::vector<Cand> cands;
    for (size_t i = 0; i < odd.size(); ++i)
        for (size_t j = i + 1; j < odd.size(); ++j)
            cands.push_back({g.pair_weight(odd[i], odd[j]), odd[i], odd[j]});
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.w != y.w) return x.w < y.w;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });
    std::set<int> used;
    std::vector<std::pair<int, int>> m;
    for (const auto& c : cands) {
        if (used.count(c.a) || used.count(c.b)) continue;
        used.insert(c.a);
        used.insert(c.b);
        m.emplace_back(c.a, c.b);
    }
    // 2-opt passes: swap partners between two matched pairs while it helps.
    bool improved = true;
    while (improved) {
        improved = false;
        for (size_t i = 0; i < m.size(); ++i)
            for (size_t j = i + 1; j < m.size(); ++j) {
                auto [a, b] = m[i];
                auto [c, d] = m[j];
                double cur = g.pair_weight(a, b) + g.pair_weight(c, d);
                double swap1 = g.pair_weight(a, c) + g.pair_weight(b, d);
                double swap2 = g.pair_weight(a, d) + g.pair_weight(b, c);
                if (swap1 < cur && swap1 <= swap2) {
                    m[i] = {std::min(a, c), std::max(a, c)};
                    m[j] = {std::min(b, d), std::max(b, d)};
                    improved = true;
                } else if (swap2 < cur) {
                    m[i] = {std::min(a, d), std::max(a, d)};
                    m[j] = {std::min(b, c), std::max(b, c)};
                    improved = true;
                }
            }
    }
    std::sort(m.begin(), m.end());
    return m;
}

std::vector<std::pair<int, int>> min_weight_matching(const WeightedGraph& g,
                                                     std::vector<int> odd) {
    if (odd.empty()) return {};
    if (odd.size() <= 12) {
        double best_w = std::numeric_limits<double>::infinity();
        std::vector<std::pair<int, int>> best, current;
        enumerate_matchings(g, odd, 0.0, current, best_w, best);
        std::sort(best.begin(), best.end());
        return best;
    }
    return greedy_matching(g, odd);
}

// Hierholzer circuit from node 0, consuming the smallest neighbor first.
std::vector<int> euler_circuit(int n, const std::vector<std::pair<int, int>>& multi_edges) {
    std::vector<std::multiset<int>> adj(n);
    for (const auto& [a, b] : multi_edges) {
        adj[a].insert(b);
        adj[b].insert(a);
    }
    std::vector<int> stack{0};
    std::vector<int> circuit;
    while (!stack.empty()) {
        int v = stack.back();
        if (!adj[v].empty()) {
            int u = *adj[v].begin();
            adj[v].erase(adj[v].begin());
            adj[u].erase(adj[u].find(v));
            stack.push_back(u);
        } else {
            circuit.push_back(v);
            stack.pop_back();
        }
    }
    std::reverse(circuit.begin(), circuit.end());
    return circuit;
}

OverlayGraph tour_to_overlay(int n, const std::vector<int>& order) {
    OverlayGraph o;
    o.node_count = n;
    o.kind = OverlayKind::kRing;
    for (size_t i = 0; i < order.size(); ++i) {
        int a = order[i];
        int b = order[(i + 1) % order.size()];
        o.edges.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(o.edges.begin(), o.edges.end());
    return o;
}

}  // namespace

OverlayGraph build_ring(const WeightedGraph& conn) {
    if (conn.node_count() < 3) throw ValidationError("ring overlay needs at least 3 silos");
    if (!conn.complete())
        throw ValidationError("Christofides requires complete metric graph");
    bool warn = !conn.metric();

    auto mst = prim_mst(conn);
    std::vector<int> deg(conn.node_count(), 0);
    for (const auto& [a, b] : mst) {
        ++deg[a];
        ++deg[b];
    }
    std::vector<int> odd;
    for (int v = 0; v < conn.node_count(); ++v)
        if (deg[v] % 2 == 1) odd.push_back(v);

    auto matching = min_weight_matching(conn, odd);
    std::vector<std::pair<int, int>> multi = mst;
    multi.insert(multi.end(), matching.begin(), matching.end());

    auto circuit = euler_circuit(conn.node_count(), multi);
    std::vector<bool> seen(conn.node_count(), false);
    std::vector<int> order;
    for (int v : circuit)
        if (!seen[v]) {
            seen[v] = true;
            order.push_back(v);
        }

    OverlayGraph o = tour_to_overlay(conn.node_count(), order);
    o.metric_warning = warn;
    validate_overlay(o);
    return o;
}

OverlayGraph build_star(const WeightedGraph& conn) {
    const int n = conn.node_count();
    if (n < 2) throw ValidationError("star overlay needs at least 2 silos");
    int hub = -1;
    double hub_worst = std::numeric_limits<double>::infinity();
    for (int v = 0; v < n; ++v) {
        if (conn.degree(v) != n - 1) continue;  // hub must reach everyone
        double worst = 0.0;
        for (int u = 0; u < n; ++u)
            if (u != v) worst = std::max(worst, conn.pair_weight(v, u));
        if (worst < hub_worst) {
            hub_worst = worst;
            hub = v;
        }
    }
    if (hub == -1)
        throw ValidationError("no silo is linked to every other: cannot build a star");
    OverlayGraph o;
    o.node_count = n;
    o.kind = OverlayKind::kStar;
    for (int u = 0; u < n; ++u)
        if (u != hub) o.edges.emplace_back(std::min(hub, u), std::max(hub, u));
    std::sort(o.edges.begin(), o.edges.end());
    validate_overlay(o);
    return o;
}

OverlayGraph build_mst(const WeightedGraph& conn) {
    OverlayGraph o;
    o.node_count = conn.node_count();
    o.kind = OverlayKind::kMst;
    o.edges = prim_mst(conn);
    validate_overlay(o);
    return o;
}

void validate_overlay(const OverlayGraph& o) {
    const int n = o.node_count;
    if (n < 2) throw ValidationError("overlay needs at least 2 nodes");
    std::set<std::pair<int, int>> uniq;
    for (const auto& [a, b] : o.edges) {
        if (a < 0 || b >= n || a >= b)
            throw ValidationError("overlay edge out of range or not canonical");
        if (!uniq.insert({a, b}).second) throw ValidationError("overlay has a parallel edge");
    }
    if (!overlay_connected(o)) throw ValidationError("overlay is disconnected");

    switch (o.kind) {
        case OverlayKind::kRing: {
            for (int v = 0; v < n; ++v)
                if (o.degree(v) != 2)
                    throw ValidationError("ring overlay: node " + std::to_string(v) +
                                          " has degree != 2");
            break;  // connected + 2-regular == one Hamiltonian cycle
        }
        case OverlayKind::kStar: {
            if (static_cast<int>(o.edges.size()) != n - 1)
                throw ValidationError("star overlay must have n-1 edges");
            int hubs = 0;
            for (int v = 0; v < n; ++v) {
                int d = o.degree(v);
                if (d == n - 1)
                    ++hubs;
                else if (d != 1)
                    throw ValidationError("star overlay: node " + std::to_string(v) +
                                          " has degree " + std::to_string(d));
            }
            if (hubs == 0) throw ValidationError("star overlay has no hub");
            break;
        }
        case OverlayKind::kMst: {
            if (static_cast<int>(o.edges.size()) != n - 1)
                throw ValidationError("spanning tree must have n-1 edges");
            break;  // connected + n-1 edges == acyclic
        }
        case OverlayKind::kCustom:
            break;
    }
}

}  // namespace fedmesh
