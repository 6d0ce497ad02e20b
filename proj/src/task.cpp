#include "fedmesh/task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedmesh/errors.hpp"
#include "fedmesh/rng.hpp"

namespace fedmesh {

namespace {

constexpr uint64_t kTagTask = 0x7a5bULL;
constexpr uint64_t kTagBatch = 0xba7cULL;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// softplus(z) = log(1 + e^z), stable for large |z|
double softplus(double z) {
    if (z > 0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

}  // namespace

std::string to_string(LossKind kind) {
    return kind == LossKind::kLeastSquares ? "least-squares" : "logistic";
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "least-squares" || s == "least_squares") return LossKind::kLeastSquares;
    if (s == "logistic") return LossKind::kLogistic;
    throw ValidationError("unknown loss kind \"" + s + "\"");
}

int SyntheticTask::batch_size(int silo) const {
    int n = silos.at(silo).n;
    if (params.batch <= 0 || params.batch >= n) return n;
    return params.batch;
}

SyntheticTask make_synthetic_task(int n_silos, const TaskParams& params, uint64_t seed) {
    if (n_silos < 1) throw ValidationError("task needs at least one silo");
    if (params.dim < 1) throw ValidationError("task dim must be >= 1");
    if (params.samples_per_silo < 1) throw ValidationError("samples_per_silo must be >= 1");
    if (params.batch < 0) throw ValidationError("batch must be >= 0");
    if (params.batch > params.samples_per_silo)
        throw ValidationError("batch exceeds samples_per_silo");

    SyntheticTask task;
    task.params = params;
    task.n_silos = n_silos;

    const int d = params.dim;
    Rng global = stream_for(seed, kTagTask, 0);
    std::vector<double> w_global(d);
    for (double& v : w_global) v = global.next_normal();

    for (int s = 0; s < n_silos; ++s) {
        Rng rng = stream_for(seed, kTagTask, 1 + static_cast<uint64_t>(s));
        std::vector<double> w_true(d);
        for (int c = 0; c < d; ++c) w_true[c] = w_global[c] + params.skew * rng.next_normal();

        SiloData data;
        data.n = params.samples_per_silo;
        data.X.resize(static_cast<size_t>(data.n) * d);
        data.y.resize(data.n);
        for (int r = 0; r < data.n; ++r) {
            for (int c = 0; c < d; ++c) data.X[static_cast<size_t>(r) * d + c] = rng.next_normal();
            double z = dot(std::span(data.X).subspan(static_cast<size_t>(r) * d, d), w_true);
            z += params.noise_sigma * rng.next_normal();
            data.y[r] = (params.loss == LossKind::kLogistic) ? (z >= 0 ? 1.0 : -1.0) : z;
        }
        task.silos.push_back(std::move(data));
    }

    double total = 0.0;
    for (const auto& s : task.silos) total += s.n;
    for (const auto& s : task.silos) task.importance.push_back(s.n / total);
    return task;
}

double sample_loss(const SyntheticTask& task, int silo, int row, std::span<const double> w) {
    const auto& data = task.silos.at(silo);
    auto x = std::span(data.X).subspan(static_cast<size_t>(row) * task.dim(), task.dim());
    double z = dot(x, w);
    if (task.params.loss == LossKind::kLeastSquares) {
        double r = z - data.y[row];
        return 0.5 * r * r;
    }
    return softplus(-data.y[row] * z);
}

void sample_grad_accum(const SyntheticTask& task, int silo, int row, std::span<const double> w,
                       std::span<double> grad) {
    const auto& data = task.silos.at(silo);
    auto x = std::span(data.X).subspan(static_cast<size_t>(row) * task.dim(), task.dim());
    double z = dot(x, w);
    double coeff;
    if (task.params.loss == LossKind::kLeastSquares) {
        coeff = z - data.y[row];
    } else {
        double y = data.y[row];
        coeff = -y / (1.0 + std::exp(y * z));  // d/dz softplus(-y z)
    }
    for (int c = 0; c < task.dim(); ++c) grad[c] += coeff * x[c];
}

double silo_mean_loss(const SyntheticTask& task, int silo, std::span<const double> w) {
    const auto& data = task.silos.at(silo);
    double total = 0.0;
    for (int r = 0; r < data.n; ++r) total += sample_loss(task, silo, r, w);
    return total / data.n;
}

std::vector<int> draw_batch(const SyntheticTask& task, int silo, long k, uint64_t run_seed) {
    const int n = task.silos.at(silo).n;
    const int b = task.batch_size(silo);
    std::vector<int> rows(b);
    if (b == n) {
        std::iota(rows.begin(), rows.end(), 0);  // full batch, no draw
        return rows;
    }
    Rng rng = stream_for(run_seed, kTagBatch, static_cast<uint64_t>(silo),
                         static_cast<uint64_t>(k));
    for (int i = 0; i < b; ++i) rows[i] = rng.next_int(n);
    return rows;
}

LeastSquaresOptimum least_squares_optimum(const SyntheticTask& task) {
    if (task.params.loss != LossKind::kLeastSquares)
        throw ValidationError("closed-form optimum requires the least-squares loss");
    const int d = task.dim();
    std::vector<double> H(static_cast<size_t>(d) * d, 0.0), c(d, 0.0);
    double y_term = 0.0;
    for (int s = 0; s < task.n_silos; ++s) {
        const auto& data = task.silos[s];
        double scale = task.importance[s] / data.n;
        for (int r = 0; r < data.n; ++r) {
            auto x = std::span(task.silos[s].X).subspan(static_cast<size_t>(r) * d, d);
            for (int a = 0; a < d; ++a) {
                c[a] += scale * x[a] * data.y[r];
                for (int b = a; b < d; ++b) H[static_cast<size_t>(a) * d + b] += scale * x[a] * x[b];
            }
            y_term += scale * data.y[r] * data.y[r];
        }
    }
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < a; ++b) H[static_cast<size_t>(a) * d + b] = H[static_cast<size_t>(b) * d + a];

    // Cholesky H = L L^T
    std::vector<double> L(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = H[static_cast<size_t>(i) * d + j];
            for (int k = 0; k < j; ++k)
                sum -= L[static_cast<size_t>(i) * d + k] * L[static_cast<size_t>(j) * d + k];
            if (i == j) {
                if (sum <= 0.0)
                    throw SimulationError("normal equations are singular; add data or samples");
                L[static_cast<size_t>(i) * d + i] = std::sqrt(sum);
            } else {
                L[static_cast<size_t>(i) * d + j] = sum / L[static_cast<size_t>(j) * d + j];
            }
        }
    }
    // solve L z = c, then L^T w = z
    std::vector<double> z(d), w(d);
    for (int i = 0; i < d; ++i) {
        double sum = c[i];
        for (int k = 0; k < i; ++k) sum -= L[static_cast<size_t>(i) * d + k] * z[k];
        z[i] = sum / L[static_cast<size_t>(i) * d + i];
    }
    for (int i = d - 1; i >= 0; --i) {
        double sum = z[i];
        for (int k = i + 1; k < d; ++k) sum -= L[static_cast<size_t>(k) * d + i] * w[k];
        w[i] = sum / L[static_cast<size_t>(i) * d + i];
    }

    LeastSquaresOptimum opt;
    opt.loss = 0.5 * y_term - 0.5 * dot(c, w);
    opt.w = std::move(w);
    return opt;
}

}  // namespace fedmesh
