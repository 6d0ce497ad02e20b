#include "fedmesh/timing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedmesh/errors.hpp"

namespace fedmesh {

double traffic_capacity(const NetworkSpec& spec, int i, int j, int out_degree_i,
                        int in_degree_j) {
    if (out_degree_i < 1 || in_degree_j < 1)
        throw ValidationError("traffic capacity needs degrees >= 1");
    const auto& up = spec.silos.at(i);
    const auto& dn = spec.silos.at(j);
    return std::min(up.up_capacity / out_degree_i, dn.down_capacity / in_degree_j);
}

double static_delay(const NetworkSpec& spec, int i, int j, int out_degree_i, int in_degree_j) {
    if (!spec.has_link(i, j))
        throw ValidationError("no link between silo " + std::to_string(i) + " and silo " +
                              std::to_string(j));
    double a = traffic_capacity(spec, i, j, out_degree_i, in_degree_j);
    return spec.local_updates * spec.silos.at(i).compute_ms + spec.latency(i, j) +
           spec.model_size_mbit / a;
}

std::map<std::pair<int, int>, double> overlay_pair_delays(const NetworkSpec& spec,
                                                          const OverlayGraph& overlay) {
    std::map<std::pair<int, int>, double> out;
    for (const auto& [i, j] : overlay.edges) {
        double fwd = static_delay(spec, i, j, overlay.degree(i), overlay.degree(j));
        double bwd = static_delay(spec, j, i, overlay.degree(j), overlay.degree(i));
        out[{i, j}] = std::max(fwd, bwd);
    }
    return out;
}

DelayLedger::DelayLedger(const NetworkSpec& spec, const OverlayGraph& overlay,
                         bool per_state_degrees)
    : spec_(&spec), overlay_(overlay), per_state_degrees_(per_state_degrees) {
    for (const auto& [i, j] : overlay_.edges) {
        directed_.emplace_back(i, j);
        directed_.emplace_back(j, i);
    }
    std::sort(directed_.begin(), directed_.end());
    for (size_t idx = 0; idx < directed_.size(); ++idx) dir_index_[directed_[idx]] = idx;

    static_ms_.resize(directed_.size());
    for (size_t idx = 0; idx < directed_.size(); ++idx) {
        auto [i, j] = directed_[idx];
        static_ms_[idx] = static_delay(spec, i, j, overlay_.degree(i), overlay_.degree(j));
    }
    d_ = static_ms_;
    prev_label_.assign(directed_.size(), EdgeLabel::kStrong);
    tau_prev_ = *std::max_element(static_ms_.begin(), static_ms_.end());
}

int DelayLedger::index_of(int i, int j) const {
    auto it = dir_index_.find({i, j});
    if (it == dir_index_.end())
        throw ValidationError("ledger does not track edge " + std::to_string(i) + "->" +
                              std::to_string(j));
    return static_cast<int>(it->second);
}

double delay_recursion(double static_ms, double d_prev, double tau_prev, double local_floor_j,
                       EdgeLabel label, EdgeLabel prev_label, long k) {
    bool strong = label == EdgeLabel::kStrong;
    bool prev_strong = prev_label == EdgeLabel::kStrong;
    if (k == 0 || (strong && prev_strong)) return static_ms;
    if (strong && !prev_strong) return std::max(local_floor_j, static_ms - d_prev);
    if (!strong && !prev_strong) return tau_prev + d_prev;
    return tau_prev;  // weak after strong
}

double DelayLedger::update_delay(int i, int j, EdgeLabel label, long k) const {
    int idx = index_of(i, j);
    double floor = spec_->local_updates * spec_->silos.at(j).compute_ms;
    return delay_recursion(static_ms_[idx], d_[idx], tau_prev_, floor, label,
                           prev_label_[idx], k);
}

double DelayLedger::advance(const GraphState& state) {
    std::vector<int> strong_deg;
    if (per_state_degrees_) {
        strong_deg.assign(spec_->silo_count(), 0);
        for (size_t e = 0; e < state.edges.size(); ++e) {
            if (state.labels[e] != EdgeLabel::kStrong) continue;
            ++strong_deg[state.edges[e].first];
            ++strong_deg[state.edges[e].second];
        }
    }
    std::vector<double> next(directed_.size());
    for (size_t idx = 0; idx < directed_.size(); ++idx) {
        auto [i, j] = directed_[idx];
        EdgeLabel label = state.label(i, j);
        double stat = static_ms_[idx];
        if (per_state_degrees_ && label == EdgeLabel::kStrong)
            stat = static_delay(*spec_, i, j, strong_deg[i], strong_deg[j]);
        double floor = spec_->local_updates * spec_->silos.at(j).compute_ms;
        next[idx] = delay_recursion(stat, d_[idx], tau_prev_, floor, label, prev_label_[idx],
                                    round_);
    }
    d_ = std::move(next);

    double cycle = round_cycle_time(state, *this);

    for (size_t idx = 0; idx < directed_.size(); ++idx) {
        auto [i, j] = directed_[idx];
        prev_label_[idx] = state.label(i, j);
    }
    tau_prev_ = cycle;
    ++round_;
    return cycle;
}

double DelayLedger::delay(int i, int j) const { return d_[index_of(i, j)]; }

double DelayLedger::static_delay_of(int i, int j) const { return static_ms_[index_of(i, j)]; }

double DelayLedger::local_compute_floor() const {
    double floor = 0.0;
    for (const auto& s : spec_->silos)
        floor = std::max(floor, spec_->local_updates * s.compute_ms);
    return floor;
}

double round_cycle_time(const GraphState& state, const DelayLedger& ledger) {
    double worst = -1.0;
    for (size_t i = 0; i < state.edges.size(); ++i) {
        if (state.labels[i] != EdgeLabel::kStrong) continue;
        auto [a, b] = state.edges[i];
        worst = std::max({worst, ledger.delay(a, b), ledger.delay(b, a)});
    }
    if (worst < 0.0) return ledger.local_compute_floor();  // no strong edge this round
    return worst;
}

CycleStats mean_cycle_time(const std::vector<double>& per_round_ms) {
    if (per_round_ms.empty()) throw ValidationError("mean cycle time needs at least one round");
    CycleStats stats;
    stats.per_round_ms = per_round_ms;
    stats.mean_ms = std::accumulate(per_round_ms.begin(), per_round_ms.end(), 0.0) /
                    static_cast<double>(per_round_ms.size());
    return stats;
}

}  // namespace fedmesh
