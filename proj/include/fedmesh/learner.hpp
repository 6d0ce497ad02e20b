#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "fedmesh/multigraph.hpp"
#include "fedmesh/overlay.hpp"
#include "fedmesh/task.hpp"

namespace fedmesh {

struct SiloModel {
    int silo = 0;
    std::vector<double> w;
};

// Per-silo loop execution. Results are bit-identical in both modes: each
// silo writes only its own model and reads a shared snapshot, and every
// reduction runs in fixed ascending-id order.
enum class Execution { kSerial, kParallel };

// One gradient step: w -= alpha_k * mean minibatch gradient, with the batch
// drawn from the (run_seed, silo, k) stream. Throws SimulationError naming
// silo and round on a non-finite gradient.
void local_sgd_step(SiloModel& model, const SyntheticTask& task, long k, uint64_t run_seed);

// Last model received over a strong connection, per directed edge (src ->
// dst), stamped with the communication round at which it was current.
class ModelCache {
public:
    ModelCache() = default;
    // Round-0 snapshot for every directed overlay edge.
    ModelCache(const OverlayGraph& overlay, const std::vector<SiloModel>& initial);

    struct Entry {
        std::vector<double> w;
        long round = 0;
    };

    bool initialized() const { return !entries_.empty(); }
    const Entry& lookup(int src, int dst) const;  // throws on a miss
    void refresh(int src, int dst, const std::vector<double>& w, long round);
    // Staleness h of a directed edge at communication round `round`.
    long staleness(int src, int dst, long round) const;

private:
    std::map<std::pair<int, int>, Entry> entries_;
};

// One update at the global counter k of the periodic-averaging recursion:
// aggregation when k == 0 mod (u+1) (uniform average with all overlay
// in-neighbors plus self), otherwise a local gradient step.
void dpasgd_step(std::vector<SiloModel>& models, const OverlayGraph& overlay,
                 const SyntheticTask& task, long k, int local_updates, uint64_t run_seed,
                 Execution exec = Execution::kSerial);

// Same cadence under a graph state: only strong in-neighbors participate,
// read through the cache (refreshed over strong edges each aggregation);
// an isolated silo skips aggregation and takes the local step instead.
void dpasgd_pp_step(std::vector<SiloModel>& models, ModelCache& cache, const GraphState& state,
                    const SyntheticTask& task, long k, int local_updates, uint64_t run_seed,
                    Execution exec = Execution::kSerial);

// Objective value: sum_i p_i * mean loss of w_i on silo i's full data.
double global_loss(const std::vector<SiloModel>& models, const SyntheticTask& task,
                   Execution exec = Execution::kSerial);

// Loss of the uniform mean of all silo models.
double consensus_loss(const std::vector<SiloModel>& models, const SyntheticTask& task,
                      Execution exec = Execution::kSerial);

std::vector<double> consensus_mean(const std::vector<SiloModel>& models);

// Shared-init models, one per silo, drawn from the (seed, "init") stream.
std::vector<SiloModel> init_models(int n_silos, int dim, uint64_t seed);

}  // namespace fedmesh
