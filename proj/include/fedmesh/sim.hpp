#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedmesh/learner.hpp"
#include "fedmesh/multigraph.hpp"
#include "fedmesh/net_model.hpp"
#include "fedmesh/overlay.hpp"
#include "fedmesh/task.hpp"
#include "fedmesh/timing.hpp"

namespace fedmesh {

enum class TopologyKind { kStar, kMst, kRing, kMultigraph };

std::string to_string(TopologyKind kind);
TopologyKind topology_from_string(const std::string& s);

struct CapacityScenario {
    enum class Kind { kAsFile, kHomogeneous, kOrchestrator };
    Kind kind = Kind::kAsFile;
    double capacity = 1.0;  // homogeneous: every silo; orchestrator: the hub
    int hub = 0;            // orchestrator only

    bool operator==(const CapacityScenario&) const = default;
};

CapacityScenario capacity_scenario_from_string(const std::string& s);
std::string to_string(const CapacityScenario& s);

struct ExperimentConfig {
    std::string network_path;
    TopologyKind topology = TopologyKind::kMultigraph;
    int t = 5;
    long rounds = 100;          // communication rounds K
    int local_updates = 0;      // u; 0 means take the network file's value
    TaskParams task;
    uint64_t seed = 0;
    CapacityScenario capacity;

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config");
std::string config_to_string(const ExperimentConfig& config);  // canonical echo
std::string config_hash(const ExperimentConfig& config);       // hex of canonical echo

struct RoundRecord {
    long round = 0;
    int state_index = 0;
    double cycle_ms = 0.0;
    double global_loss = 0.0;
    double consensus_loss = 0.0;
    double silo_loss_p25 = 0.0;
    double silo_loss_p50 = 0.0;
    double silo_loss_p75 = 0.0;
};

struct TrainRun {
    ExperimentConfig config;  // echo, capacity scenario included
    int effective_u = 1;
    OverlayGraph overlay;
    Multigraph mg;
    StateSchedule schedule;
    std::vector<RoundRecord> records;
    CycleStats cycles;
    double total_time_ms = 0.0;
    std::string models_digest;
    std::vector<SiloModel> final_models;
    double final_global_loss = 0.0;
    double final_consensus_loss = 0.0;
};

// Runs K communication rounds, cycling schedule states in order. Per round:
// delay-ledger update, cycle-time record, then the learner round (one
// aggregation step followed by u local steps). Baseline topologies run the
// plain periodic-averaging rule on an all-strong schedule; the multigraph
// topology runs the state-aware rule.
TrainRun run_experiment(const ExperimentConfig& config,
                        Execution exec = Execution::kSerial);

std::string result_to_string(const TrainRun& run);
// Writes <out_dir>/<config hash>/result.txt; returns the file path.
std::string write_result(const TrainRun& run, const std::string& out_dir);

struct ComparisonRow {
    std::string label;
    TopologyKind topology;
    int t = 1;
    double mean_cycle_ms = 0.0;
    double total_time_ms = 0.0;
    double final_loss = 0.0;  // consensus-model loss
    std::optional<double> reduction_vs_ring;
};

// Requires >= 2 configs sharing network, task and seed.
std::vector<ComparisonRow> compare_topologies(const std::vector<ExperimentConfig>& configs,
                                              Execution exec = Execution::kSerial,
                                              std::vector<TrainRun>* runs_out = nullptr);
std::string comparison_to_csv(const std::vector<ComparisonRow>& rows);

struct SweepRow {
    int t = 1;
    double mean_cycle_ms = 0.0;
    double final_loss = 0.0;
};

std::vector<SweepRow> sweep_t(const ExperimentConfig& base, const std::vector<int>& t_values,
                              Execution exec = Execution::kSerial);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

// Applies the capacity scenario; every other field is untouched.
NetworkSpec apply_capacity_scenario(const NetworkSpec& spec, const CapacityScenario& scenario);

std::string schedule_to_json(const OverlayGraph& overlay, const Multigraph& mg,
                             const StateSchedule& schedule);

}  // namespace fedmesh
