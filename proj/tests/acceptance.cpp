// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria run against the committed fixtures with pinned
// tolerances.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fedmesh/learner.hpp"
#include "fedmesh/multigraph.hpp"
#include "fedmesh/net_model.hpp"
#include "fedmesh/overlay.hpp"
#include "fedmesh/rng.hpp"
#include "fedmesh/sim.hpp"
#include "fedmesh/task.hpp"
#include "fedmesh/timing.hpp"

using namespace fedmesh;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = FEDMESH_FIXTURES_DIR;

struct Outcome {
    bool pass = true;
    std::string detail;
};

#define REQUIRE_TRUE(cond, msg)                  \
    do {                                         \
        if (!(cond)) return Outcome{false, msg}; \
    } while (0)

bool same_bits(const std::vector<SiloModel>& a, const std::vector<SiloModel>& b) {
    for (size_t i = 0; i < a.size(); ++i)
        if (std::memcmp(a[i].w.data(), b[i].w.data(), a[i].w.size() * sizeof(double)) != 0)
            return false;
    return true;
}

ExperimentConfig gaia_config(TopologyKind kind, int t, long rounds, uint64_t seed) {
    ExperimentConfig cfg;
    cfg.network_path = kFixtures + "/gaia_het.json";
    cfg.topology = kind;
    cfg.t = t;
    cfg.rounds = rounds;
    cfg.seed = seed;
    cfg.task.dim = 20;
    cfg.task.samples_per_silo = 64;
    cfg.task.skew = 0.5;
    cfg.task.batch = 16;
    cfg.task.lr = {0.05, 0.01};
    return cfg;
}

// ---------------------------------------------------------------- criterion 1
// Multigraph with t=1 and the RING baseline produce bitwise-identical weight
// trajectories and identical per-round cycle times over 50 rounds (exact).
Outcome criterion1() {
    NetworkSpec spec = load_network(kFixtures + "/gaia_het.json");
    const int u = spec.local_updates;
    WeightedGraph conn = connectivity_graph(spec);
    OverlayGraph overlay = build_ring(conn);
    Multigraph mg = construct_multigraph(overlay, overlay_pair_delays(spec, overlay), 1);
    StateSchedule schedule = parse_states(mg);
    REQUIRE_TRUE(schedule.s_max == 1 && schedule.states[0].all_strong(),
                 "t=1 schedule is not the single all-strong state");

    TaskParams params = gaia_config(TopologyKind::kRing, 1, 50, 11).task;
    SyntheticTask task = make_synthetic_task(spec.silo_count(), params, 11);
    auto plain = init_models(spec.silo_count(), params.dim, 11);
    auto aware = plain;
    ModelCache cache(overlay, aware);
    for (long r = 0; r < 50; ++r) {
        for (int s = 0; s <= u; ++s) {
            long k = r * (u + 1) + s;
            dpasgd_step(plain, overlay, task, k, u, 11);
            dpasgd_pp_step(aware, cache, schedule.states[0], task, k, u, 11);
        }
        REQUIRE_TRUE(same_bits(plain, aware),
                     "weight trajectories diverge at round " + std::to_string(r));
    }

    TrainRun ring = run_experiment(gaia_config(TopologyKind::kRing, 1, 50, 11));
    TrainRun multi = run_experiment(gaia_config(TopologyKind::kMultigraph, 1, 50, 11));
    REQUIRE_TRUE(ring.models_digest == multi.models_digest,
                 "final model digests differ between ring and t=1 multigraph");
    for (size_t i = 0; i < ring.records.size(); ++i)
        REQUIRE_TRUE(ring.records[i].cycle_ms == multi.records[i].cycle_ms,
                     "cycle times differ at round " + std::to_string(i));
    return {};
}

// ---------------------------------------------------------------- criterion 2
// An all-weak schedule equals standalone local SGD on every silo (exact).
Outcome criterion2() {
    NetworkSpec spec = load_network(kFixtures + "/gaia_het.json");
    const int u = spec.local_updates;
    WeightedGraph conn = connectivity_graph(spec);
    OverlayGraph overlay = build_ring(conn);
    GraphState all_weak = make_state(
        overlay.edges, std::vector<EdgeLabel>(overlay.edges.size(), EdgeLabel::kWeak),
        overlay.node_count);
    REQUIRE_TRUE(static_cast<int>(all_weak.isolated.size()) == overlay.node_count,
                 "all-weak state must isolate every node");

    TaskParams params = gaia_config(TopologyKind::kRing, 1, 50, 13).task;
    SyntheticTask task = make_synthetic_task(spec.silo_count(), params, 13);
    const long rounds = 50;

    auto aware = init_models(spec.silo_count(), params.dim, 13);
    ModelCache cache(overlay, aware);
    for (long r = 0; r < rounds; ++r)
        for (int s = 0; s <= u; ++s)
            dpasgd_pp_step(aware, cache, all_weak, task, r * (u + 1) + s, u, 13);

    auto solo = init_models(spec.silo_count(), params.dim, 13);
    for (long k = 0; k < rounds * (u + 1); ++k)
        for (auto& m : solo) local_sgd_step(m, task, k, 13);

    REQUIRE_TRUE(same_bits(aware, solo), "isolated trajectories differ from standalone SGD");
    return {};
}

// ---------------------------------------------------------------- criterion 3
// 200 randomized multiplicity sets (t <= 5): s_max = LCM, state 0 all-strong,
// each edge strong exactly s_max/n times per period (exact).
Outcome criterion3() {
    for (uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(8200 + seed);
        int nodes = 3 + rng.next_int(6);
        Multigraph mg;
        mg.node_count = nodes;
        mg.t_max = 5;
        long expected = 1;
        for (int v = 1; v < nodes; ++v) {
            int n = 1 + rng.next_int(5);
            int parent = rng.next_int(v);
            mg.multiplicity[{std::min(parent, v), std::max(parent, v)}] = n;
        }
        for (const auto& [e, n] : mg.multiplicity)
            expected = std::lcm(expected, static_cast<long>(n));

        StateSchedule schedule = parse_states(mg);
        REQUIRE_TRUE(schedule.s_max == expected,
                     "s_max != LCM at seed " + std::to_string(seed));
        REQUIRE_TRUE(schedule.states[0].all_strong(),
                     "state 0 not all-strong at seed " + std::to_string(seed));
        for (const auto& [e, n] : mg.multiplicity) {
            long strong = 0;
            for (const auto& st : schedule.states)
                if (st.label(e.first, e.second) == EdgeLabel::kStrong) ++strong;
            REQUIRE_TRUE(strong == schedule.s_max / n,
                         "strong count != s_max/n at seed " + std::to_string(seed));
        }
    }
    return {};
}

// ---------------------------------------------------------------- criterion 4
// Christofides cost <= 1.5x the exhaustive optimum on 100 random metric
// instances with N <= 8.
Outcome criterion4() {
    for (uint64_t seed = 0; seed < 100; ++seed) {
        int n = 4 + static_cast<int>(seed % 5);
        Rng rng(9100 + seed);
        std::vector<std::pair<double, double>> pts(n);
        for (auto& p : pts) p = {rng.next_unit(), rng.next_unit()};
        WeightedGraph g(n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                double dx = pts[i].first - pts[j].first;
                double dy = pts[i].second - pts[j].second;
                g.set_sym_weight(i, j, std::sqrt(dx * dx + dy * dy) + 0.01);
            }

        OverlayGraph ring = build_ring(g);
        double cost = 0.0;
        for (const auto& [a, b] : ring.edges) cost += g.pair_weight(a, b);

        std::vector<int> rest(n - 1);
        std::iota(rest.begin(), rest.end(), 1);
        double best = std::numeric_limits<double>::infinity();
        do {
            double tour = g.pair_weight(0, rest.front()) + g.pair_weight(rest.back(), 0);
            for (size_t i = 0; i + 1 < rest.size(); ++i)
                tour += g.pair_weight(rest[i], rest[i + 1]);
            best = std::min(best, tour);
        } while (std::next_permutation(rest.begin(), rest.end()));

        REQUIRE_TRUE(cost <= 1.5 * best + 1e-9,
                     "tour " + std::to_string(cost) + " exceeds 1.5 x " +
                         std::to_string(best) + " at seed " + std::to_string(seed));
    }
    return {};
}

// ---------------------------------------------------------------- criterion 5
// On the committed heterogeneous fixture: multigraph(t=5) mean cycle < ring
// mean cycle, and mean(t=5) <= mean(t=3) <= mean(t=1).
Outcome criterion5() {
    NetworkSpec spec = load_network(kFixtures + "/gaia_het.json");
    REQUIRE_TRUE(spec.silo_count() == 11, "fixture must have 11 silos");
    WeightedGraph conn = connectivity_graph(spec);
    OverlayGraph overlay = build_ring(conn);
    auto delays = overlay_pair_delays(spec, overlay);
    double dmin = 1e300, dmax = 0.0;
    for (const auto& [e, d] : delays) {
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    REQUIRE_TRUE(dmax / dmin >= 5.0,
                 "fixture delay ratio " + std::to_string(dmax / dmin) + " below 5");

    TrainRun ring = run_experiment(gaia_config(TopologyKind::kRing, 1, 600, 17));
    TrainRun t5 = run_experiment(gaia_config(TopologyKind::kMultigraph, 5, 600, 17));
    TrainRun t3 = run_experiment(gaia_config(TopologyKind::kMultigraph, 3, 600, 17));
    TrainRun t1 = run_experiment(gaia_config(TopologyKind::kMultigraph, 1, 600, 17));

    REQUIRE_TRUE(t5.cycles.mean_ms < ring.cycles.mean_ms,
                 "multigraph mean cycle not below ring");
    REQUIRE_TRUE(t5.cycles.mean_ms <= t3.cycles.mean_ms, "mean(t=5) > mean(t=3)");
    REQUIRE_TRUE(t3.cycles.mean_ms <= t1.cycles.mean_ms, "mean(t=3) > mean(t=1)");
    return {};
}

// ---------------------------------------------------------------- criterion 6
// Convergence preservation on the non-IID least-squares fixture: the
// consensus model under the t=5 schedule lands within 1e-3 of the
// closed-form optimum inside 1000 rounds, and within 1e-3 of the ring run.
Outcome criterion6() {
    ExperimentConfig cfg;
    cfg.network_path = kFixtures + "/convergence10.json";
    cfg.topology = TopologyKind::kMultigraph;
    cfg.t = 5;
    cfg.rounds = 1000;
    cfg.seed = 19;
    // u dilutes the extra gradient pass an isolated silo takes while it
    // skips aggregation; the fixture's weak state isolates silos 0 and 1.
    cfg.local_updates = 6;
    cfg.task.dim = 20;
    cfg.task.samples_per_silo = 60;
    cfg.task.skew = 0.5;
    cfg.task.batch = 0;  // full batch
    cfg.task.lr = {0.1, 0.02};
    cfg.task.noise_sigma = 0.05;

    NetworkSpec spec = load_network(cfg.network_path);
    REQUIRE_TRUE(spec.silo_count() == 10, "fixture must have 10 silos");
    SyntheticTask task = make_synthetic_task(10, cfg.task, cfg.seed);
    LeastSquaresOptimum opt = least_squares_optimum(task);

    TrainRun multi = run_experiment(cfg);
    ExperimentConfig ring_cfg = cfg;
    ring_cfg.topology = TopologyKind::kRing;
    ring_cfg.t = 1;
    TrainRun ring = run_experiment(ring_cfg);

    double gap = multi.final_consensus_loss - opt.loss;
    REQUIRE_TRUE(gap >= -1e-9, "consensus loss beats the optimum: oracle broken");
    REQUIRE_TRUE(gap < 1e-3,
                 "consensus loss gap " + std::to_string(gap) + " not under 1e-3");
    double diff = std::abs(multi.final_consensus_loss - ring.final_consensus_loss);
    REQUIRE_TRUE(diff < 1e-3,
                 "loss differs from the ring run by " + std::to_string(diff));
    // the schedule actually exercises isolated nodes
    bool any_isolated = false;
    for (const auto& st : multi.schedule.states)
        if (!st.isolated.empty()) any_isolated = true;
    REQUIRE_TRUE(any_isolated, "t=5 schedule has no isolated states on this fixture");
    return {};
}

// ---------------------------------------------------------------- criterion 7
// Analytic minibatch gradients match central differences to 1e-6 relative on
// 100 random draws for both loss kinds.
Outcome criterion7() {
    for (LossKind loss : {LossKind::kLeastSquares, LossKind::kLogistic}) {
        TaskParams params;
        params.dim = 8;
        params.samples_per_silo = 40;
        params.loss = loss;
        params.batch = 6;
        SyntheticTask task = make_synthetic_task(4, params, 23);
        Rng rng(777);
        for (int trial = 0; trial < 100; ++trial) {
            int silo = rng.next_int(4);
            std::vector<double> w(params.dim);
            for (double& v : w) v = rng.next_normal();
            auto batch = draw_batch(task, silo, trial, 555);

            std::vector<double> grad(params.dim, 0.0);
            for (int row : batch) sample_grad_accum(task, silo, row, w, grad);
            for (double& g : grad) g /= static_cast<double>(batch.size());

            const double h = 1e-5;
            for (int c = 0; c < params.dim; ++c) {
                auto eval = [&](double delta) {
                    std::vector<double> wd = w;
                    wd[c] += delta;
                    double total = 0.0;
                    for (int row : batch) total += sample_loss(task, silo, row, wd);
                    return total / static_cast<double>(batch.size());
                };
                double fd = (eval(h) - eval(-h)) / (2 * h);
                double tol = 1e-6 * std::max({1.0, std::abs(grad[c]), std::abs(fd)});
                REQUIRE_TRUE(std::abs(grad[c] - fd) <= tol,
                             "gradient mismatch (" + to_string(loss) + ", trial " +
                                 std::to_string(trial) + ")");
            }
        }
    }
    return {};
}

// ---------------------------------------------------------------- criterion 8
// Re-running the criterion-5 configuration with the same seed produces
// byte-identical result files.
Outcome criterion8() {
    auto cfg = gaia_config(TopologyKind::kMultigraph, 5, 600, 17);
    fs::path dir_a = fs::temp_directory_path() / "fedmesh_accept_a";
    fs::path dir_b = fs::temp_directory_path() / "fedmesh_accept_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    std::string fa = write_result(run_experiment(cfg), dir_a.string());
    std::string fb = write_result(run_experiment(cfg), dir_b.string());
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    std::string a = slurp(fa), b = slurp(fb);
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    REQUIRE_TRUE(!a.empty() && a == b, "result files differ between replays");
    return {};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
};

}  // namespace

int main() {
    std::vector<Criterion> criteria{
        {1, "t=1 multigraph equals RING (trajectories and cycle times)", 10.0, criterion1},
        {2, "all-weak schedule reduces to standalone local SGD", 5.0, criterion2},
        {3, "schedule invariants over 200 random multiplicity sets", 5.0, criterion3},
        {4, "Christofides tour within 1.5x of the exact optimum (100 seeds)", 30.0,
         criterion4},
        {5, "multigraph cuts the mean cycle time on the heterogeneous fixture", 60.0,
         criterion5},
        {6, "state-aware training converges to the closed form and matches the ring", 60.0,
         criterion6},
        {7, "analytic gradients match central finite differences", 5.0, criterion7},
        {8, "same-seed replays produce byte-identical result files", 60.0, criterion8},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.fn();
        } catch (const std::exception& e) {
            outcome = Outcome{false, std::string("exception: ") + e.what()};
        }
        double elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        if (outcome.pass && elapsed > c.budget_s) {
            outcome.pass = false;
            outcome.detail = "exceeded the " + std::to_string(c.budget_s) + "s budget";
        }
        std::printf("%s  criterion %d: %s (%.2fs)%s%s\n", outcome.pass ? "PASS" : "FAIL",
                    c.id, c.name, elapsed, outcome.detail.empty() ? "" : " -- ",
                    outcome.detail.c_str());
        if (!outcome.pass) ++failures;
    }
    if (failures) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
