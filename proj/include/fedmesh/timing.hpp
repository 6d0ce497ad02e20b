#pragma once

#include <map>
#include <utility>
#include <vector>

#include "fedmesh/multigraph.hpp"
#include "fedmesh/net_model.hpp"
#include "fedmesh/overlay.hpp"

namespace fedmesh {

// A(i,j) = min(C_UP(i)/|out-neighbors of i|, C_DN(j)/|in-neighbors of j|),
// in Mbit/ms. Throws on a zero degree.
double traffic_capacity(const NetworkSpec& spec, int i, int j, int out_degree_i,
                        int in_degree_j);

// d(i,j) = u*T_c(i) + l(i,j) + M/A(i,j), in ms.
double static_delay(const NetworkSpec& spec, int i, int j, int out_degree_i, int in_degree_j);

// Per-pair overlay delay used to size the multigraph: the slower of the two
// directions, with degrees taken from the overlay itself.
std::map<std::pair<int, int>, double> overlay_pair_delays(const NetworkSpec& spec,
                                                          const OverlayGraph& overlay);

// Pure branch table of the per-round delay recursion; local_floor_j is
// u*T_c of the receiving silo. The ledger wires this to its own state.
double delay_recursion(double static_ms, double d_prev, double tau_prev, double local_floor_j,
                       EdgeLabel label, EdgeLabel prev_label, long k);

// Tracks d_k for both directions of every overlay edge across rounds.
// Per round, the delay of a directed edge follows the four-branch recursion:
//   (a) round 0, or strong after strong: the static delay
//   (b) strong after weak:  max(u*T_c(receiver), static - d_prev)
//   (c) weak after weak:    tau_prev + d_prev
//   (d) weak after strong:  tau_prev
// where tau_prev is the previous round's realized cycle time (initialized to
// the static maximum over the overlay).
class DelayLedger {
public:
    // per_state_degrees: recompute capacity-sharing degrees from each round's strong
    // subgraph instead of the overlay (sensitivity analysis only; the
    // default matches the delays the multigraph was constructed from).
    DelayLedger(const NetworkSpec& spec, const OverlayGraph& overlay,
                bool per_state_degrees = false);

    // Applies the recursion for one directed edge at round k, using the
    // previous round's label/delay for that edge. Exposed for unit tests;
    // does not mutate the ledger.
    double update_delay(int i, int j, EdgeLabel label, long k) const;

    // Advances the whole ledger by one round: updates every directed edge,
    // records the cycle time, and stores labels for the next round.
    // Returns the round's cycle time.
    double advance(const GraphState& state);

    long round() const { return round_; }           // rounds completed
    double delay(int i, int j) const;               // current d_k(i,j)
    double static_delay_of(int i, int j) const;     // static delay, overlay degrees
    double prev_cycle_ms() const { return tau_prev_; }
    double local_compute_floor() const;             // max over silos of u*T_c

private:
    int index_of(int i, int j) const;

    const NetworkSpec* spec_;
    OverlayGraph overlay_;
    bool per_state_degrees_ = false;
    std::vector<std::pair<int, int>> directed_;  // all (i,j), i != j, overlay edges
    std::map<std::pair<int, int>, int> dir_index_;
    std::vector<double> static_ms_;
    std::vector<double> d_;
    std::vector<EdgeLabel> prev_label_;
    double tau_prev_ = 0.0;
    long round_ = 0;
};

// Max d_k over directed edges labelled strong; with no strong edge the round
// costs only local compute, max over silos of u*T_c(i).
double round_cycle_time(const GraphState& state, const DelayLedger& ledger);

struct CycleStats {
    std::vector<double> per_round_ms;
    double mean_ms = 0.0;
};

CycleStats mean_cycle_time(const std::vector<double>& per_round_ms);

}  // namespace fedmesh
