#include "fedmesh/multigraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fedmesh/errors.hpp"

namespace fedmesh {

namespace {
constexpr long kMaxStates = 1000000;
}

long round_half_even(double x) {
    double fl = std::floor(x);
    double diff = x - fl;
    if (diff > 0.5) return static_cast<long>(fl) + 1;
    if (diff < 0.5) return static_cast<long>(fl);
    long lo = static_cast<long>(fl);
    return (lo % 2 == 0) ? lo : lo + 1;
}

std::vector<std::pair<int, int>> Multigraph::edge_list() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(multiplicity.size());
    for (const auto& [e, n] : multiplicity) out.push_back(e);
    return out;
}

EdgeLabel GraphState::label(int i, int j) const {
    auto e = std::make_pair(std::min(i, j), std::max(i, j));
    auto it = std::lower_bound(edges.begin(), edges.end(), e);
    if (it == edges.end() || *it != e)
        throw ValidationError("state has no edge " + std::to_string(i) + "-" +
                              std::to_string(j));
    return labels[static_cast<size_t>(it - edges.begin())];
}

bool GraphState::is_isolated(int v) const {
    return std::binary_search(isolated.begin(), isolated.end(), v);
}

bool GraphState::all_strong() const {
    return std::all_of(labels.begin(), labels.end(),
                       [](EdgeLabel l) { return l == EdgeLabel::kStrong; });
}

std::vector<int> GraphState::strong_neighbors(int v) const {
    std::vector<int> out;
    for (size_t i = 0; i < edges.size(); ++i) {
        if (labels[i] != EdgeLabel::kStrong) continue;
        if (edges[i].first == v) out.push_back(edges[i].second);
        if (edges[i].second == v) out.push_back(edges[i].first);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> isolated_nodes(std::span<const std::pair<int, int>> edges,
                                std::span<const EdgeLabel> labels, int node_count) {
    std::vector<bool> touched(node_count, false), strong(node_count, false);
    for (size_t i = 0; i < edges.size(); ++i) {
        touched[edges[i].first] = touched[edges[i].second] = true;
        if (labels[i] == EdgeLabel::kStrong)
            strong[edges[i].first] = strong[edges[i].second] = true;
    }
    std::vector<int> out;
    for (int v = 0; v < node_count; ++v)
        if (touched[v] && !strong[v]) out.push_back(v);
    return out;
}

std::vector<int> isolated_nodes(const GraphState& state, int node_count) {
    return isolated_nodes(std::span(state.edges), std::span(state.labels), node_count);
}

GraphState make_state(std::vector<std::pair<int, int>> edges, std::vector<EdgeLabel> labels,
                      int node_count) {
    if (edges.size() != labels.size())
        throw ValidationError("state edges and labels must have equal length");
    if (!std::is_sorted(edges.begin(), edges.end()))
        throw ValidationError("state edges must be sorted");
    GraphState s;
    s.edges = std::move(edges);
    s.labels = std::move(labels);
    s.isolated = isolated_nodes(std::span(s.edges), std::span(s.labels), node_count);
    return s;
}

Multigraph construct_multigraph(const OverlayGraph& overlay,
                                const std::map<std::pair<int, int>, double>& delays, int t) {
    if (t < 1) throw ValidationError("t must be >= 1");
    if (overlay.edges.empty()) throw ValidationError("overlay has no edges");

    double d_min = std::numeric_limits<double>::infinity();
    for (const auto& e : overlay.edges) {
        auto it = delays.find(e);
        if (it == delays.end())
            throw ValidationError("missing delay for overlay edge " +
                                  std::to_string(e.first) + "-" + std::to_string(e.second));
        if (!(it->second > 0))
            throw ValidationError("delay must be > 0 for edge " + std::to_string(e.first) +
                                  "-" + std::to_string(e.second));
        d_min = std::min(d_min, it->second);
    }

    Multigraph mg;
    mg.node_count = overlay.node_count;
    mg.t_max = t;
    for (const auto& e : overlay.edges) {
        long n = round_half_even(delays.at(e) / d_min);
        n = std::min<long>(n, t);
        n = std::max<long>(n, 1);  // defensive; round(d/d_min) >= 1 whenever d >= d_min/2
        mg.multiplicity[e] = static_cast<int>(n);
    }
    return mg;
}

StateSchedule parse_states(const Multigraph& mg) {
    if (mg.multiplicity.empty()) throw ValidationError("multigraph has no edges");
    for (const auto& [e, n] : mg.multiplicity)
        if (n < 1 || n > mg.t_max)
            throw ValidationError("multiplicity out of range for edge " +
                                  std::to_string(e.first) + "-" + std::to_string(e.second));

    long s_max = 1;
    for (const auto& [e, n] : mg.multiplicity) {
        s_max = std::lcm(s_max, static_cast<long>(n));
        if (s_max > kMaxStates)
            throw ValidationError("state count exceeds " + std::to_string(kMaxStates) +
                                  "; use a smaller t");
    }

    const auto edges = mg.edge_list();
    std::vector<int> target(edges.size()), counter(edges.size());
    for (size_t i = 0; i < edges.size(); ++i)
        target[i] = counter[i] = mg.multiplicity.at(edges[i]);

    StateSchedule schedule;
    schedule.s_max = s_max;
    schedule.states.reserve(s_max);
    for (long s = 0; s < s_max; ++s) {
        std::vector<EdgeLabel> labels(edges.size());
        for (size_t i = 0; i < edges.size(); ++i) {
            labels[i] = (counter[i] == target[i]) ? EdgeLabel::kStrong : EdgeLabel::kWeak;
            if (counter[i] == 1)
                counter[i] = target[i];
            else
                --counter[i];
        }
        schedule.states.push_back(make_state(edges, std::move(labels), mg.node_count));
    }
    return schedule;
}

}  // namespace fedmesh
