#include "fedmesh/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <string>

#include "fedmesh/errors.hpp"
#include "fedmesh/rng.hpp"

namespace fedmesh {

namespace {

constexpr uint64_t kTagInit = 0x1417ULL;

// Runs body(i) for i in [0, n). The parallel path is bit-identical to the
// serial one: each iteration only writes state owned by silo i. Exceptions
// may not cross the omp region, so the first one is carried out by hand.
template <typename Fn>
void for_each_silo(int n, Execution exec, Fn&& body) {
    if (exec == Execution::kParallel) {
        std::exception_ptr err;
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
#pragma omp critical
                {
                    if (!err) err = std::current_exception();
                }
            }
        }
        if (err) std::rethrow_exception(err);
    } else {
        for (int i = 0; i < n; ++i) body(i);
    }
}

// Uniform average over self plus contributors, accumulated in ascending-id
// order so the result does not depend on execution interleaving.
std::vector<double> uniform_average(std::span<const double> self,
                                    const std::vector<std::span<const double>>& contribs) {
    std::vector<double> out(self.begin(), self.end());
    for (const auto& c : contribs)
        for (size_t k = 0; k < out.size(); ++k) out[k] += c[k];
    double scale = 1.0 / (1.0 + static_cast<double>(contribs.size()));
    for (double& v : out) v *= scale;
    return out;
}

bool is_aggregation_step(long k, int local_updates) { return k % (local_updates + 1) == 0; }

}  // namespace

void local_sgd_step(SiloModel& model, const SyntheticTask& task, long k, uint64_t run_seed) {
    const int d = task.dim();
    auto batch = draw_batch(task, model.silo, k, run_seed);
    std::vector<double> grad(d, 0.0);
    for (int row : batch) sample_grad_accum(task, model.silo, row, model.w, grad);
    double inv_b = 1.0 / static_cast<double>(batch.size());
    double alpha = task.params.lr.at(k);
    for (int c = 0; c < d; ++c) {
        double g = grad[c] * inv_b;
        if (!std::isfinite(g))
            throw SimulationError("non-finite gradient at silo " + std::to_string(model.silo) +
                                  ", round " + std::to_string(k));
        model.w[c] -= alpha * g;
    }
}

ModelCache::ModelCache(const OverlayGraph& overlay, const std::vector<SiloModel>& initial) {
    for (const auto& [i, j] : overlay.edges) {
        entries_[{i, j}] = Entry{initial.at(i).w, 0};
        entries_[{j, i}] = Entry{initial.at(j).w, 0};
    }
}

const ModelCache::Entry& ModelCache::lookup(int src, int dst) const {
    auto it = entries_.find({src, dst});
    if (it == entries_.end())
        throw SimulationError("model cache miss for edge " + std::to_string(src) + "->" +
                              std::to_string(dst) + "; cache not initialized");
    return it->second;
}

void ModelCache::refresh(int src, int dst, const std::vector<double>& w, long round) {
    entries_[{src, dst}] = Entry{w, round};
}

long ModelCache::staleness(int src, int dst, long round) const {
    return round - lookup(src, dst).round;
}

void dpasgd_step(std::vector<SiloModel>& models, const OverlayGraph& overlay,
                 const SyntheticTask& task, long k, int local_updates, uint64_t run_seed,
                 Execution exec) {
    const int n = static_cast<int>(models.size());
    if (!is_aggregation_step(k, local_updates)) {
        for_each_silo(n, exec, [&](int i) { local_sgd_step(models[i], task, k, run_seed); });
        return;
    }
    const std::vector<SiloModel> snapshot = models;
    for_each_silo(n, exec, [&](int i) {
        std::vector<std::span<const double>> contribs;
        for (int j : overlay.neighbors(i)) contribs.emplace_back(snapshot[j].w);
        models[i].w = uniform_average(snapshot[i].w, contribs);
    });
}

void dpasgd_pp_step(std::vector<SiloModel>& models, ModelCache& cache, const GraphState& state,
                    const SyntheticTask& task, long k, int local_updates, uint64_t run_seed,
                    Execution exec) {
    const int n = static_cast<int>(models.size());
    if (!cache.initialized())
        throw SimulationError("model cache miss: cache not initialized with round-0 models");
    if (!is_aggregation_step(k, local_updates)) {
        for_each_silo(n, exec, [&](int i) { local_sgd_step(models[i], task, k, run_seed); });
        return;
    }
    const long round = k / (local_updates + 1);
    const std::vector<SiloModel> snapshot = models;

    // Strong edges exchange this round's models in both directions.
    for (size_t e = 0; e < state.edges.size(); ++e) {
        if (state.labels[e] != EdgeLabel::kStrong) continue;
        auto [i, j] = state.edges[e];
        cache.refresh(i, j, snapshot[i].w, round);
        cache.refresh(j, i, snapshot[j].w, round);
    }

    for_each_silo(n, exec, [&](int i) {
        auto strong = state.strong_neighbors(i);
        if (strong.empty()) {
            // Isolated: no waiting, no averaging; take the local step instead.
            local_sgd_step(models[i], task, k, run_seed);
            return;
        }
        std::vector<std::span<const double>> contribs;
        for (int j : strong) contribs.emplace_back(cache.lookup(j, i).w);
        models[i].w = uniform_average(snapshot[i].w, contribs);
    });
}

double global_loss(const std::vector<SiloModel>& models, const SyntheticTask& task,
                   Execution exec) {
    const int n = static_cast<int>(models.size());
    std::vector<double> per_silo(n);
    for_each_silo(n, exec,
                  [&](int i) { per_silo[i] = silo_mean_loss(task, i, models[i].w); });
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += task.importance[i] * per_silo[i];
    return total;
}

std::vector<double> consensus_mean(const std::vector<SiloModel>& models) {
    std::vector<double> mean(models.at(0).w.size(), 0.0);
    for (const auto& m : models)
        for (size_t c = 0; c < mean.size(); ++c) mean[c] += m.w[c];
    for (double& v : mean) v /= static_cast<double>(models.size());
    return mean;
}

double consensus_loss(const std::vector<SiloModel>& models, const SyntheticTask& task,
                      Execution exec) {
    auto mean = consensus_mean(models);
    const int n = static_cast<int>(models.size());
    std::vector<double> per_silo(n);
    for_each_silo(n, exec, [&](int i) { per_silo[i] = silo_mean_loss(task, i, mean); });
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += task.importance[i] * per_silo[i];
    return total;
}

std::vector<SiloModel> init_models(int n_silos, int dim, uint64_t seed) {
    Rng rng = stream_for(seed, kTagInit, 0);
    std::vector<double> w0(dim);
    for (double& v : w0) v = 0.1 * rng.next_normal();
    std::vector<SiloModel> models;
    models.reserve(n_silos);
    for (int i = 0; i < n_silos; ++i) models.push_back(SiloModel{i, w0});
    return models;
}

}  // namespace fedmesh
