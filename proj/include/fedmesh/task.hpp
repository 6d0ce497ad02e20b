#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedmesh {

enum class LossKind { kLeastSquares, kLogistic };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);

// alpha_k = alpha0 / (1 + decay * k), k being the global update counter.
struct LearningRateSchedule {
    double alpha0 = 0.05;
    double decay = 0.0;

    double at(long k) const { return alpha0 / (1.0 + decay * static_cast<double>(k)); }
    bool operator==(const LearningRateSchedule&) const = default;
};

struct TaskParams {
    int dim = 20;
    int samples_per_silo = 64;
    double skew = 0.5;  // per-silo ground-truth perturbation scale
    LossKind loss = LossKind::kLeastSquares;
    int batch = 0;  // 0 or >= n_i means full batch
    LearningRateSchedule lr;
    double noise_sigma = 0.0;

    bool operator==(const TaskParams&) const = default;
};

struct SiloData {
    std::vector<double> X;  // row-major n x dim
    std::vector<double> y;  // n
    int n = 0;
};

// Synthetic convex federated task. Each silo regresses against a global
// ground truth plus a per-silo perturbation scaled by `skew`, which makes
// heterogeneity controllable while keeping the pooled optimum in closed form.
struct SyntheticTask {
    TaskParams params;
    int n_silos = 0;
    std::vector<SiloData> silos;
    std::vector<double> importance;  // p_i = n_i / sum n_j

    int dim() const { return params.dim; }
    int batch_size(int silo) const;  // effective b for that silo
};

SyntheticTask make_synthetic_task(int n_silos, const TaskParams& params, uint64_t seed);

// Loss of one sample and its gradient contribution (accumulated into grad).
double sample_loss(const SyntheticTask& task, int silo, int row, std::span<const double> w);
void sample_grad_accum(const SyntheticTask& task, int silo, int row, std::span<const double> w,
                       std::span<double> grad);

// Mean loss of w over one silo's full data.
double silo_mean_loss(const SyntheticTask& task, int silo, std::span<const double> w);

// Batch for the named stream (seed, silo, k): b draws with replacement, or
// every row in order when the batch covers the silo.
std::vector<int> draw_batch(const SyntheticTask& task, int silo, long k, uint64_t run_seed);

struct LeastSquaresOptimum {
    std::vector<double> w;
    double loss = 0.0;  // irreducible residual of the summed objective
};

// Pooled normal equations solved by Cholesky; the optimum loss is computed
// algebraically (0.5*sum p_i/n_i |y_i|^2 - 0.5*c.w*), independent of the
// loss-evaluation path.
LeastSquaresOptimum least_squares_optimum(const SyntheticTask& task);

}  // namespace fedmesh
