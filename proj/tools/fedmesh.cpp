#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedmesh/errors.hpp"
#include "fedmesh/learner.hpp"
#include "fedmesh/multigraph.hpp"
#include "fedmesh/net_model.hpp"
#include "fedmesh/overlay.hpp"
#include "fedmesh/rng.hpp"
#include "fedmesh/sim.hpp"
#include "fedmesh/timing.hpp"

namespace fs = std::filesystem;
using namespace fedmesh;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string network;
    std::string topology;
    int t = -1;
    long rounds = -1;
    std::string capacity;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_given = false;
    bool parallel = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "experiment config file (JSON)");
    cmd->add_option("--network", o.network, "network file; overrides the config");
    cmd->add_option("--topology", o.topology, "star|mst|ring|multigraph; overrides the config");
    cmd->add_option("--t", o.t, "max edges between two silos; overrides the config");
    cmd->add_option("--rounds", o.rounds, "communication rounds; overrides the config");
    cmd->add_option("--capacity-scenario", o.capacity,
                    "as-file | homogeneous:C | orchestrator:HUB:C");
    cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    auto* seed_opt = cmd->add_option("--seed", o.seed, "run seed; overrides the config");
    cmd->callback([&o, seed_opt]() { o.seed_given = seed_opt->count() > 0; });
    cmd->add_flag("--parallel", o.parallel, "run per-silo loops with OpenMP");
}

ExperimentConfig resolve_config(const CommonOpts& o) {
    ExperimentConfig cfg;
    bool have_config_seed = false;
    if (!o.config_path.empty()) {
        cfg = load_config(o.config_path);
        // a config file always pins the seed it echoes
        have_config_seed = true;
    }
    if (!o.network.empty()) cfg.network_path = o.network;
    if (!o.topology.empty()) cfg.topology = topology_from_string(o.topology);
    if (o.t >= 1) cfg.t = o.t;
    if (o.rounds >= 1) cfg.rounds = o.rounds;
    if (!o.capacity.empty()) cfg.capacity = capacity_scenario_from_string(o.capacity);
    if (o.seed_given) {
        cfg.seed = o.seed;
    } else if (!have_config_seed) {
        if (const char* env = std::getenv("FEDMESH_SEED")) cfg.seed = std::strtoull(env, nullptr, 10);
    }
    if (cfg.network_path.empty())
        throw ValidationError("no network given (use --network or a config file)");
    return cfg;
}

Execution exec_of(const CommonOpts& o) {
    return o.parallel ? Execution::kParallel : Execution::kSerial;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ValidationError("bad integer \"" + item + "\" in list \"" + s + "\"");
        }
    }
    if (out.empty()) throw ValidationError("empty list \"" + s + "\"");
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw SimulationError("cannot write " + path.string());
    out << text;
}

int cmd_inspect(const CommonOpts& o) {
    NetworkSpec spec = load_network(o.network.empty() ? resolve_config(o).network_path
                                                      : o.network);
    if (!o.capacity.empty())
        spec = apply_capacity_scenario(spec, capacity_scenario_from_string(o.capacity));
    WeightedGraph conn = connectivity_graph(spec);

    TopologyKind kind = o.topology.empty() ? TopologyKind::kMultigraph
                                           : topology_from_string(o.topology);
    OverlayGraph overlay;
    switch (kind) {
        case TopologyKind::kStar: overlay = build_star(conn); break;
        case TopologyKind::kMst: overlay = build_mst(conn); break;
        default: overlay = build_ring(conn); break;
    }
    int t = kind == TopologyKind::kMultigraph ? (o.t >= 1 ? o.t : 5) : 1;
    auto delays = overlay_pair_delays(spec, overlay);
    Multigraph mg = construct_multigraph(overlay, delays, t);
    StateSchedule schedule = parse_states(mg);

    std::printf("network: %s (%d silos, %zu links)\n", spec.name.c_str(), spec.silo_count(),
                spec.links.size());
    std::printf("overlay: %s (%zu edges)%s\n", to_string(overlay.kind).c_str(),
                overlay.edges.size(), overlay.metric_warning ? " [non-metric weights]" : "");
    std::printf("edges:");
    for (const auto& [a, b] : overlay.edges) std::printf(" %d-%d", a, b);
    std::printf("\n");
    std::printf("multiplicity:");
    for (const auto& [e, n] : mg.multiplicity) std::printf(" %d-%d:%d", e.first, e.second, n);
    std::printf("\n");
    std::printf("s_max=%ld\n", schedule.s_max);
    bool any_isolated = false;
    for (const auto& st : schedule.states)
        if (!st.isolated.empty()) any_isolated = true;
    if (!any_isolated) {
        std::printf("no isolated nodes\n");
    } else {
        for (size_t s = 0; s < schedule.states.size(); ++s) {
            std::printf("state %zu: isolated=", s);
            const auto& iso = schedule.states[s].isolated;
            for (size_t i = 0; i < iso.size(); ++i)
                std::printf("%s%d", i ? "," : "", iso[i]);
            std::printf("\n");
        }
    }

    fs::path sched_path = fs::path(o.out_dir) / "schedule.json";
    write_text(sched_path, schedule_to_json(overlay, mg, schedule));
    std::printf("schedule written to %s\n", sched_path.string().c_str());
    return 0;
}

int cmd_run(const CommonOpts& o) {
    ExperimentConfig cfg = resolve_config(o);
    TrainRun run = run_experiment(cfg, exec_of(o));
    std::string path = write_result(run, o.out_dir);
    std::printf("topology=%s t=%d rounds=%ld seed=%llu\n", to_string(cfg.topology).c_str(),
                cfg.topology == TopologyKind::kMultigraph ? cfg.t : 1, cfg.rounds,
                static_cast<unsigned long long>(cfg.seed));
    std::printf("mean_cycle_ms=%.4f total_time_ms=%.4f\n", run.cycles.mean_ms,
                run.total_time_ms);
    std::printf("final_global_loss=%.6g final_consensus_loss=%.6g\n", run.final_global_loss,
                run.final_consensus_loss);
    std::printf("result=%s\n", path.c_str());
    return 0;
}

int cmd_compare(const CommonOpts& o, const std::string& topologies) {
    ExperimentConfig base = resolve_config(o);
    std::vector<ExperimentConfig> configs;
    std::stringstream ss(topologies);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        ExperimentConfig cfg = base;
        cfg.topology = topology_from_string(item);
        configs.push_back(cfg);
    }
    std::vector<TrainRun> runs;
    auto rows = compare_topologies(configs, exec_of(o), &runs);
    for (const auto& run : runs) write_result(run, o.out_dir);

    std::string csv = comparison_to_csv(rows);
    fs::path path = fs::path(o.out_dir) / "comparison.csv";
    write_text(path, csv);
    std::fputs(csv.c_str(), stdout);
    for (const auto& row : rows)
        if (row.reduction_vs_ring)
            std::printf("%s: reduction factor vs ring %.2f\n", row.label.c_str(),
                        *row.reduction_vs_ring);
    std::printf("comparison=%s\n", path.string().c_str());
    return 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& t_values) {
    ExperimentConfig base = resolve_config(o);
    auto ts = parse_int_list(t_values);
    auto rows = sweep_t(base, ts, exec_of(o));
    std::string csv = sweep_to_csv(rows);
    fs::path path = fs::path(o.out_dir) / "sweep.csv";
    write_text(path, csv);
    std::fputs(csv.c_str(), stdout);
    std::printf("sweep=%s\n", path.string().c_str());
    return 0;
}

struct GenOpts {
    std::string preset;
    int n = 0;
    int links = 0;
    double density = 0.0;
    std::string latency = "2:20";
    int clusters = 1;
    double cluster_spread = 0.08;
    std::string capacity = "as-file";
    std::string compute = "2:2";
    double model_size = 4.62;
    int local_updates = 2;
    uint64_t seed = 0;
    std::string out_file;
    std::string name;
};

std::pair<double, double> parse_range(const std::string& s) {
    auto colon = s.find(':');
    if (colon == std::string::npos)
        throw ValidationError("range must look like lo:hi, got \"" + s + "\"");
    try {
        double lo = std::stod(s.substr(0, colon));
        double hi = std::stod(s.substr(colon + 1));
        if (hi < lo) throw ValidationError("range must satisfy lo <= hi, got \"" + s + "\"");
        return {lo, hi};
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        throw ValidationError("bad range \"" + s + "\"");
    }
}

int cmd_gen_network(const GenOpts& g) {
    static const std::map<std::string, std::pair<int, int>> kPresets = {
        {"gaia-like", {11, 55}},   {"amazon-like", {22, 231}}, {"geant-like", {40, 61}},
        {"exodus-like", {79, 147}}, {"ebone-like", {87, 161}},
    };
    int n = g.n, links = g.links;
    std::string name = g.name;
    if (!g.preset.empty()) {
        auto it = kPresets.find(g.preset);
        if (it == kPresets.end())
            throw ValidationError("unknown preset \"" + g.preset + "\"");
        n = it->second.first;
        links = it->second.second;
        if (name.empty()) name = g.preset;
    }
    if (n < 3) throw ValidationError("gen-network needs at least 3 silos");
    long max_links = static_cast<long>(n) * (n - 1) / 2;
    if (links == 0 && g.density > 0.0)
        links = static_cast<int>(std::lround(g.density * static_cast<double>(max_links)));
    if (links == 0) links = static_cast<int>(max_links);
    if (links < n - 1 || links > max_links)
        throw ValidationError("link count " + std::to_string(links) +
                              " unsatisfiable: need between " + std::to_string(n - 1) +
                              " and " + std::to_string(max_links));
    if (name.empty()) name = "synthetic-" + std::to_string(n);

    auto [lat_lo, lat_hi] = parse_range(g.latency);
    if (lat_lo < 0) throw ValidationError("latency must be >= 0");
    auto [comp_lo, comp_hi] = parse_range(g.compute);
    if (comp_lo <= 0) throw ValidationError("compute time must be > 0");

    Rng rng = stream_for(g.seed, 0x6e57ULL, 0);

    // node placement; clusters pull latencies apart
    std::vector<std::pair<double, double>> pos(n);
    if (g.clusters > 1) {
        std::vector<std::pair<double, double>> centers(g.clusters);
        for (auto& c : centers) c = {rng.next_unit(), rng.next_unit()};
        for (int v = 0; v < n; ++v) {
            auto [cx, cy] = centers[v % g.clusters];
            pos[v] = {std::clamp(cx + g.cluster_spread * (rng.next_unit() - 0.5) * 2, 0.0, 1.0),
                      std::clamp(cy + g.cluster_spread * (rng.next_unit() - 0.5) * 2, 0.0, 1.0)};
        }
    } else {
        for (auto& p : pos) p = {rng.next_unit(), rng.next_unit()};
    }
    auto latency_of = [&](int i, int j) {
        double dx = pos[i].first - pos[j].first;
        double dy = pos[i].second - pos[j].second;
        double d = std::sqrt(dx * dx + dy * dy) / std::sqrt(2.0);
        return lat_lo + d * (lat_hi - lat_lo);
    };

    NetworkSpec spec;
    spec.name = name;
    spec.model_size_mbit = g.model_size;
    spec.local_updates = g.local_updates;
    for (int v = 0; v < n; ++v) {
        SiloParams s;
        s.id = v;
        s.compute_ms = comp_lo == comp_hi ? comp_lo : rng.next_range(comp_lo, comp_hi);
        s.up_capacity = 1.0;
        s.down_capacity = 1.0;
        spec.silos.push_back(s);
    }

    std::set<std::pair<int, int>> chosen;
    if (links == max_links) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) chosen.insert({i, j});
    } else {
        for (int v = 1; v < n; ++v) {  // random spanning tree keeps it connected
            int u = rng.next_int(v);
            chosen.insert({std::min(u, v), std::max(u, v)});
        }
        while (static_cast<int>(chosen.size()) < links) {
            int i = rng.next_int(n);
            int j = rng.next_int(n);
            if (i == j) continue;
            chosen.insert({std::min(i, j), std::max(i, j)});
        }
    }
    for (const auto& [i, j] : chosen) spec.links[{i, j}] = latency_of(i, j);

    CapacityScenario scenario = capacity_scenario_from_string(g.capacity);
    spec = apply_capacity_scenario(spec, scenario);

    if (g.out_file.empty()) throw ValidationError("gen-network needs --out FILE");
    fs::path out(g.out_file);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_network(spec, g.out_file);
    std::printf("wrote %s: %d silos, %zu links\n", g.out_file.c_str(), n, spec.links.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fedmesh: multigraph topology design and training simulation for "
                 "cross-silo federated learning"};
    app.require_subcommand(1);

    CommonOpts inspect_o, run_o, compare_o, sweep_o;
    std::string compare_topologies_arg = "star,mst,ring,multigraph";
    std::string sweep_t_arg = "1,3,5";
    GenOpts gen_o;

    CLI::App* inspect = app.add_subcommand("inspect", "show overlay, multiplicities and states");
    add_common(inspect, inspect_o);

    CLI::App* runc = app.add_subcommand("run", "run one experiment");
    add_common(runc, run_o);

    CLI::App* compare = app.add_subcommand("compare", "run several topologies on one setup");
    add_common(compare, compare_o);
    compare->add_option("--topologies", compare_topologies_arg, "comma-separated list")
        ->capture_default_str();

    CLI::App* sweep = app.add_subcommand("sweep", "sweep the max-edge parameter t");
    add_common(sweep, sweep_o);
    sweep->add_option("--t-values", sweep_t_arg, "comma-separated t values")
        ->capture_default_str();

    CLI::App* gen = app.add_subcommand("gen-network", "write a synthetic network file");
    gen->add_option("--preset", gen_o.preset,
                    "gaia-like|amazon-like|geant-like|exodus-like|ebone-like");
    gen->add_option("--n", gen_o.n, "number of silos");
    gen->add_option("--links", gen_o.links, "number of links (default: complete)");
    gen->add_option("--density", gen_o.density, "fraction of all pairs, used when --links=0");
    gen->add_option("--latency", gen_o.latency, "latency range lo:hi in ms")
        ->capture_default_str();
    gen->add_option("--clusters", gen_o.clusters, "place silos in k distant clusters")
        ->capture_default_str();
    gen->add_option("--cluster-spread", gen_o.cluster_spread, "in-cluster placement radius")
        ->capture_default_str();
    gen->add_option("--capacity-scenario", gen_o.capacity,
                    "as-file | homogeneous:C | orchestrator:HUB:C")
        ->capture_default_str();
    gen->add_option("--compute", gen_o.compute, "compute time range lo:hi in ms")
        ->capture_default_str();
    gen->add_option("--model-size", gen_o.model_size, "model size in Mbit")
        ->capture_default_str();
    gen->add_option("--local-updates", gen_o.local_updates, "local updates per round u")
        ->capture_default_str();
    gen->add_option("--seed", gen_o.seed, "generator seed")->envname("FEDMESH_SEED");
    gen->add_option("--name", gen_o.name, "network name (default: preset or synthetic-N)");
    gen->add_option("--out", gen_o.out_file, "output network file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (inspect->parsed()) return cmd_inspect(inspect_o);
        if (runc->parsed()) return cmd_run(run_o);
        if (compare->parsed()) return cmd_compare(compare_o, compare_topologies_arg);
        if (sweep->parsed()) return cmd_sweep(sweep_o, sweep_t_arg);
        if (gen->parsed()) return cmd_gen_network(gen_o);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
