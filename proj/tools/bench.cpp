// Compares the serial reference learner loop against the OpenMP one on a
// larger synthetic workload and checks that both produce the same bits.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "fedmesh/learner.hpp"
#include "fedmesh/multigraph.hpp"
#include "fedmesh/overlay.hpp"
#include "fedmesh/task.hpp"

using namespace fedmesh;

namespace {

OverlayGraph cycle_overlay(int n) {
    OverlayGraph o;
    o.node_count = n;
    o.kind = OverlayKind::kRing;
    for (int v = 0; v < n; ++v) {
        int u = (v + 1) % n;
        o.edges.emplace_back(std::min(v, u), std::max(v, u));
    }
    std::sort(o.edges.begin(), o.edges.end());
    return o;
}

double run_rounds(std::vector<SiloModel>& models, const OverlayGraph& overlay,
                  const SyntheticTask& task, long rounds, int u, uint64_t seed,
                  Execution exec) {
    auto t0 = std::chrono::steady_clock::now();
    for (long r = 0; r < rounds; ++r)
        for (int s = 0; s <= u; ++s)
            dpasgd_step(models, overlay, task, r * (u + 1) + s, u, seed, exec);
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

bool same_bits(const std::vector<SiloModel>& a, const std::vector<SiloModel>& b) {
    for (size_t i = 0; i < a.size(); ++i)
        if (std::memcmp(a[i].w.data(), b[i].w.data(), a[i].w.size() * sizeof(double)) != 0)
            return false;
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    int silos = 24;
    int dim = 4096;
    int samples = 256;
    long rounds = 10;
    int u = 2;
    for (int i = 1; i + 1 < argc; i += 2) {
        std::string flag = argv[i];
        long v = std::atol(argv[i + 1]);
        if (flag == "--silos") silos = static_cast<int>(v);
        else if (flag == "--dim") dim = static_cast<int>(v);
        else if (flag == "--samples") samples = static_cast<int>(v);
        else if (flag == "--rounds") rounds = v;
        else if (flag == "--u") u = static_cast<int>(v);
    }

    TaskParams params;
    params.dim = dim;
    params.samples_per_silo = samples;
    params.batch = 32;
    SyntheticTask task = make_synthetic_task(silos, params, 7);
    OverlayGraph overlay = cycle_overlay(silos);

    std::printf("silos=%d dim=%d samples=%d rounds=%ld u=%d\n", silos, dim, samples, rounds, u);

    auto serial_models = init_models(silos, dim, 7);
    double serial_ms = run_rounds(serial_models, overlay, task, rounds, u, 7,
                                  Execution::kSerial);
    std::printf("serial   %10.1f ms\n", serial_ms);

    auto parallel_models = init_models(silos, dim, 7);
    double parallel_ms = run_rounds(parallel_models, overlay, task, rounds, u, 7,
                                    Execution::kParallel);
    std::printf("parallel %10.1f ms  (speedup %.2fx)\n", parallel_ms, serial_ms / parallel_ms);

    if (!same_bits(serial_models, parallel_models)) {
        std::printf("MISMATCH: serial and parallel results differ\n");
        return 1;
    }
    std::printf("results identical\n");
    return 0;
}
