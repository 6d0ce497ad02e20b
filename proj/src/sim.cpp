#include "fedmesh/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fedmesh/errors.hpp"
#include "fedmesh/rng.hpp"

namespace fedmesh {

using nlohmann::json;

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

uint64_t fnv1a(const void* data, size_t len, uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// p-quantile with linear interpolation over the sorted values.
double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    double pos = p * static_cast<double>(v.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

int line_of_byte(const std::string& text, size_t byte) {
    int line = 1;
    for (size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

void reject_unknown_fields(const json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ValidationError("unknown field \"" + it.key() + "\" in " + where);
}

}  // namespace

std::string to_string(TopologyKind kind) {
    switch (kind) {
        case TopologyKind::kStar: return "star";
        case TopologyKind::kMst: return "mst";
        case TopologyKind::kRing: return "ring";
        case TopologyKind::kMultigraph: return "multigraph";
    }
    return "multigraph";
}

TopologyKind topology_from_string(const std::string& s) {
    if (s == "star") return TopologyKind::kStar;
    if (s == "mst") return TopologyKind::kMst;
    if (s == "ring") return TopologyKind::kRing;
    if (s == "multigraph") return TopologyKind::kMultigraph;
    throw ValidationError("unknown topology \"" + s + "\"");
}

CapacityScenario capacity_scenario_from_string(const std::string& s) {
    CapacityScenario out;
    if (s == "as-file") {
        out.kind = CapacityScenario::Kind::kAsFile;
        return out;
    }
    auto colon = s.find(':');
    std::string head = s.substr(0, colon);
    try {
        if (head == "homogeneous" && colon != std::string::npos) {
            out.kind = CapacityScenario::Kind::kHomogeneous;
            out.capacity = std::stod(s.substr(colon + 1));
            return out;
        }
        if (head == "orchestrator" && colon != std::string::npos) {
            auto rest = s.substr(colon + 1);
            auto colon2 = rest.find(':');
            if (colon2 == std::string::npos)
                throw ValidationError("orchestrator scenario needs hub and capacity");
            out.kind = CapacityScenario::Kind::kOrchestrator;
            out.hub = std::stoi(rest.substr(0, colon2));
            out.capacity = std::stod(rest.substr(colon2 + 1));
            return out;
        }
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        throw ValidationError("bad capacity scenario \"" + s + "\"");
    }
    throw ValidationError("unknown capacity scenario \"" + s +
                          "\" (want as-file, homogeneous:C or orchestrator:HUB:C)");
}

std::string to_string(const CapacityScenario& s) {
    switch (s.kind) {
        case CapacityScenario::Kind::kAsFile: return "as-file";
        case CapacityScenario::Kind::kHomogeneous: return "homogeneous:" + fmt_g(s.capacity);
        case CapacityScenario::Kind::kOrchestrator:
            return "orchestrator:" + std::to_string(s.hub) + ":" + fmt_g(s.capacity);
    }
    return "as-file";
}

NetworkSpec apply_capacity_scenario(const NetworkSpec& spec, const CapacityScenario& scenario) {
    NetworkSpec out = spec;
    switch (scenario.kind) {
        case CapacityScenario::Kind::kAsFile:
            break;
        case CapacityScenario::Kind::kHomogeneous:
            for (auto& s : out.silos) {
                s.up_capacity = scenario.capacity;
                s.down_capacity = scenario.capacity;
            }
            break;
        case CapacityScenario::Kind::kOrchestrator: {
            if (scenario.hub < 0 || scenario.hub >= spec.silo_count())
                throw ValidationError("capacity scenario hub " + std::to_string(scenario.hub) +
                                      " does not exist");
            auto& hub = out.silos.at(scenario.hub);
            hub.up_capacity = scenario.capacity;
            hub.down_capacity = scenario.capacity;
            break;
        }
    }
    return out;
}

static ExperimentConfig parse_config_doc(const json& doc, const std::string& origin);

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(origin + ": parse error at line " +
                              std::to_string(line_of_byte(text, e.byte)) + ": " + e.what());
    }
    try {
        return parse_config_doc(doc, origin);
    } catch (const json::exception& e) {
        throw ValidationError(origin + ": " + e.what());
    }
}

static ExperimentConfig parse_config_doc(const json& doc, const std::string& origin) {
    if (!doc.is_object()) throw ValidationError(origin + ": top level must be an object");
    reject_unknown_fields(doc,
                          {"network", "topology", "t", "rounds", "local_updates", "seed",
                           "capacity_scenario", "task"},
                          origin);

    ExperimentConfig cfg;
    if (!doc.contains("network"))
        throw ValidationError(origin + ": missing field \"network\"");
    cfg.network_path = doc["network"].get<std::string>();
    if (doc.contains("topology")) cfg.topology = topology_from_string(doc["topology"]);
    if (doc.contains("t")) cfg.t = doc["t"].get<int>();
    if (doc.contains("rounds")) cfg.rounds = doc["rounds"].get<long>();
    if (doc.contains("local_updates")) cfg.local_updates = doc["local_updates"].get<int>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<uint64_t>();
    if (doc.contains("capacity_scenario"))
        cfg.capacity = capacity_scenario_from_string(doc["capacity_scenario"]);
    if (doc.contains("task")) {
        const json& t = doc["task"];
        reject_unknown_fields(t,
                              {"dim", "samples_per_silo", "skew", "loss", "batch", "alpha0",
                               "alpha_decay", "noise_sigma"},
                              origin + " task");
        if (t.contains("dim")) cfg.task.dim = t["dim"].get<int>();
        if (t.contains("samples_per_silo"))
            cfg.task.samples_per_silo = t["samples_per_silo"].get<int>();
        if (t.contains("skew")) cfg.task.skew = t["skew"].get<double>();
        if (t.contains("loss")) cfg.task.loss = loss_kind_from_string(t["loss"]);
        if (t.contains("batch")) cfg.task.batch = t["batch"].get<int>();
        if (t.contains("alpha0")) cfg.task.lr.alpha0 = t["alpha0"].get<double>();
        if (t.contains("alpha_decay")) cfg.task.lr.decay = t["alpha_decay"].get<double>();
        if (t.contains("noise_sigma")) cfg.task.noise_sigma = t["noise_sigma"].get<double>();
    }

    if (cfg.rounds < 1) throw ValidationError("rounds must be >= 1");
    if (cfg.t < 1) throw ValidationError("t must be >= 1");
    if (cfg.local_updates < 0) throw ValidationError("local_updates must be >= 1");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("file not found: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

std::string config_to_string(const ExperimentConfig& cfg) {
    json doc;
    doc["network"] = cfg.network_path;
    doc["topology"] = to_string(cfg.topology);
    doc["t"] = cfg.t;
    doc["rounds"] = cfg.rounds;
    doc["local_updates"] = cfg.local_updates;
    doc["seed"] = cfg.seed;
    doc["capacity_scenario"] = to_string(cfg.capacity);
    json t;
    t["dim"] = cfg.task.dim;
    t["samples_per_silo"] = cfg.task.samples_per_silo;
    t["skew"] = cfg.task.skew;
    t["loss"] = to_string(cfg.task.loss);
    t["batch"] = cfg.task.batch;
    t["alpha0"] = cfg.task.lr.alpha0;
    t["alpha_decay"] = cfg.task.lr.decay;
    t["noise_sigma"] = cfg.task.noise_sigma;
    doc["task"] = t;
    return doc.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::string canon = config_to_string(cfg);
    return hex64(fnv1a(canon.data(), canon.size(), 1469598103934665603ULL));
}

TrainRun run_experiment(const ExperimentConfig& config, Execution exec) {
    NetworkSpec spec = load_network(config.network_path);
    spec = apply_capacity_scenario(spec, config.capacity);
    const int u = config.local_updates > 0 ? config.local_updates : spec.local_updates;
    spec.local_updates = u;  // u scales the compute term of the delay model
    const int n = spec.silo_count();

    WeightedGraph conn = connectivity_graph(spec);
    OverlayGraph overlay;
    switch (config.topology) {
        case TopologyKind::kStar: overlay = build_star(conn); break;
        case TopologyKind::kMst: overlay = build_mst(conn); break;
        case TopologyKind::kRing:
        case TopologyKind::kMultigraph: overlay = build_ring(conn); break;
    }

    const int t_eff = config.topology == TopologyKind::kMultigraph ? config.t : 1;
    auto delays = overlay_pair_delays(spec, overlay);
    Multigraph mg = construct_multigraph(overlay, delays, t_eff);
    StateSchedule schedule = parse_states(mg);

    SyntheticTask task = make_synthetic_task(n, config.task, config.seed);
    std::vector<SiloModel> models = init_models(n, config.task.dim, config.seed);
    ModelCache cache(overlay, models);
    DelayLedger ledger(spec, overlay);

    TrainRun run;
    run.config = config;
    run.effective_u = u;
    run.overlay = overlay;
    run.mg = mg;
    run.schedule = schedule;
    run.records.reserve(config.rounds);

    std::vector<double> cycle_ms;
    cycle_ms.reserve(config.rounds);
    const bool state_aware = config.topology == TopologyKind::kMultigraph;

    for (long r = 0; r < config.rounds; ++r) {
        const int state_index = static_cast<int>(r % schedule.s_max);
        const GraphState& state = schedule.states[state_index];
        double cycle;
        try {
            cycle = ledger.advance(state);
            for (int s = 0; s <= u; ++s) {
                long k = r * (u + 1) + s;
                if (state_aware)
                    dpasgd_pp_step(models, cache, state, task, k, u, config.seed, exec);
                else
                    dpasgd_step(models, overlay, task, k, u, config.seed, exec);
            }
        } catch (const std::exception& e) {
            throw SimulationError("round " + std::to_string(r) + ": " + e.what());
        }
        cycle_ms.push_back(cycle);

        RoundRecord rec;
        rec.round = r;
        rec.state_index = state_index;
        rec.cycle_ms = cycle;
        rec.global_loss = global_loss(models, task, exec);
        rec.consensus_loss = consensus_loss(models, task, exec);
        std::vector<double> per_silo(n);
        for (int i = 0; i < n; ++i) per_silo[i] = silo_mean_loss(task, i, models[i].w);
        rec.silo_loss_p25 = quantile(per_silo, 0.25);
        rec.silo_loss_p50 = quantile(per_silo, 0.50);
        rec.silo_loss_p75 = quantile(per_silo, 0.75);
        run.records.push_back(rec);
    }

    run.cycles = mean_cycle_time(cycle_ms);
    run.total_time_ms = 0.0;
    for (double c : cycle_ms) run.total_time_ms += c;
    run.final_models = models;
    run.final_global_loss = run.records.back().global_loss;
    run.final_consensus_loss = run.records.back().consensus_loss;

    uint64_t h = 1469598103934665603ULL;
    for (const auto& m : models)
        h = fnv1a(m.w.data(), m.w.size() * sizeof(double), h);
    run.models_digest = hex64(h);
    return run;
}

std::string schedule_to_json(const OverlayGraph& overlay, const Multigraph& mg,
                             const StateSchedule& schedule) {
    json doc;
    json ov;
    ov["kind"] = to_string(overlay.kind);
    ov["metric_warning"] = overlay.metric_warning;
    json edges = json::array();
    for (const auto& [a, b] : overlay.edges) edges.push_back(json::array({a, b}));
    ov["edges"] = edges;
    doc["overlay"] = ov;
    doc["t"] = mg.t_max;
    json mult = json::array();
    for (const auto& [e, cnt] : mg.multiplicity)
        mult.push_back({{"edge", json::array({e.first, e.second})}, {"n", cnt}});
    doc["multiplicity"] = mult;
    doc["s_max"] = schedule.s_max;
    json states = json::array();
    for (size_t s = 0; s < schedule.states.size(); ++s) {
        const auto& st = schedule.states[s];
        json strong = json::array(), weak = json::array();
        for (size_t i = 0; i < st.edges.size(); ++i) {
            auto pair = json::array({st.edges[i].first, st.edges[i].second});
            if (st.labels[i] == EdgeLabel::kStrong)
                strong.push_back(pair);
            else
                weak.push_back(pair);
        }
        states.push_back({{"index", s},
                          {"strong", strong},
                          {"weak", weak},
                          {"isolated", st.isolated}});
    }
    doc["states"] = states;
    return doc.dump(2) + "\n";
}

std::string result_to_string(const TrainRun& run) {
    std::ostringstream out;
    out << "# fedmesh-result v1\n";
    out << "[config]\n" << config_to_string(run.config);
    out << "[overlay]\n";
    out << "kind=" << to_string(run.overlay.kind) << "\n";
    out << "metric_warning=" << (run.overlay.metric_warning ? 1 : 0) << "\n";
    out << "edges=";
    for (size_t i = 0; i < run.overlay.edges.size(); ++i) {
        if (i) out << " ";
        out << run.overlay.edges[i].first << "-" << run.overlay.edges[i].second;
    }
    out << "\n";
    out << "[multigraph]\n";
    out << "t=" << run.mg.t_max << "\n";
    out << "n=";
    {
        size_t i = 0;
        for (const auto& [e, cnt] : run.mg.multiplicity) {
            if (i++) out << " ";
            out << e.first << "-" << e.second << ":" << cnt;
        }
    }
    out << "\n";
    out << "s_max=" << run.schedule.s_max << "\n";
    if (run.schedule.s_max <= 1000) {
        out << "[schedule]\n";
        for (size_t s = 0; s < run.schedule.states.size(); ++s) {
            const auto& st = run.schedule.states[s];
            out << "state " << s << ": strong=";
            bool first = true;
            for (size_t i = 0; i < st.edges.size(); ++i) {
                if (st.labels[i] != EdgeLabel::kStrong) continue;
                if (!first) out << ",";
                out << st.edges[i].first << "-" << st.edges[i].second;
                first = false;
            }
            out << " weak=";
            first = true;
            for (size_t i = 0; i < st.edges.size(); ++i) {
                if (st.labels[i] != EdgeLabel::kWeak) continue;
                if (!first) out << ",";
                out << st.edges[i].first << "-" << st.edges[i].second;
                first = false;
            }
            out << " isolated=";
            for (size_t i = 0; i < st.isolated.size(); ++i) {
                if (i) out << ",";
                out << st.isolated[i];
            }
            out << "\n";
        }
    }
    out << "[rounds]\n";
    out << "round,state,cycle_ms,global_loss,consensus_loss,silo_loss_p25,silo_loss_p50,"
           "silo_loss_p75\n";
    for (const auto& r : run.records) {
        out << r.round << "," << r.state_index << "," << fmt_g(r.cycle_ms) << ","
            << fmt_g(r.global_loss) << "," << fmt_g(r.consensus_loss) << ","
            << fmt_g(r.silo_loss_p25) << "," << fmt_g(r.silo_loss_p50) << ","
            << fmt_g(r.silo_loss_p75) << "\n";
    }
    out << "[summary]\n";
    out << "rounds=" << run.records.size() << "\n";
    out << "local_updates=" << run.effective_u << "\n";
    out << "mean_cycle_ms=" << fmt_g(run.cycles.mean_ms) << "\n";
    out << "total_time_ms=" << fmt_g(run.total_time_ms) << "\n";
    out << "final_global_loss=" << fmt_g(run.final_global_loss) << "\n";
    out << "final_consensus_loss=" << fmt_g(run.final_consensus_loss) << "\n";
    out << "models_digest=" << run.models_digest << "\n";
    return out.str();
}

std::string write_result(const TrainRun& run, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::path dir = fs::path(out_dir) / config_hash(run.config);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw SimulationError("cannot create output directory " + dir.string());
    fs::path file = dir / "result.txt";
    std::ofstream out(file);
    if (!out) throw SimulationError("cannot write " + file.string());
    out << result_to_string(run);
    return file.string();
}

std::vector<ComparisonRow> compare_topologies(const std::vector<ExperimentConfig>& configs,
                                              Execution exec, std::vector<TrainRun>* runs_out) {
    if (configs.size() < 2)
        throw ValidationError("comparison needs at least two configurations");
    for (size_t i = 1; i < configs.size(); ++i) {
        if (configs[i].network_path != configs[0].network_path)
            throw ValidationError("mismatched networks in comparison");
        if (!(configs[i].task == configs[0].task) || configs[i].seed != configs[0].seed ||
            configs[i].rounds != configs[0].rounds ||
            configs[i].local_updates != configs[0].local_updates ||
            !(configs[i].capacity == configs[0].capacity))
            throw ValidationError("comparison configurations must share task, seed, rounds "
                                  "and capacity scenario");
    }

    std::vector<TrainRun> runs;
    runs.reserve(configs.size());
    for (const auto& cfg : configs) runs.push_back(run_experiment(cfg, exec));

    const TrainRun* ring = nullptr;
    for (const auto& r : runs)
        if (r.config.topology == TopologyKind::kRing) {
            ring = &r;
            break;
        }

    std::vector<ComparisonRow> rows;
    for (const auto& r : runs) {
        ComparisonRow row;
        row.topology = r.config.topology;
        row.t = r.config.topology == TopologyKind::kMultigraph ? r.config.t : 1;
        row.label = to_string(r.config.topology);
        if (r.config.topology == TopologyKind::kMultigraph)
            row.label += "(t=" + std::to_string(r.config.t) + ")";
        row.mean_cycle_ms = r.cycles.mean_ms;
        row.total_time_ms = r.total_time_ms;
        row.final_loss = r.final_consensus_loss;
        if (ring) row.reduction_vs_ring = ring->cycles.mean_ms / r.cycles.mean_ms;
        rows.push_back(row);
    }
    if (runs_out) *runs_out = std::move(runs);
    return rows;
}

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    out << "topology,t,mean_cycle_ms,total_time_ms,final_loss,reduction_vs_ring\n";
    for (const auto& r : rows) {
        out << r.label << "," << r.t << "," << fmt_g(r.mean_cycle_ms) << ","
            << fmt_g(r.total_time_ms) << "," << fmt_g(r.final_loss) << ",";
        if (r.reduction_vs_ring)
            out << fmt_g(*r.reduction_vs_ring);
        else
            out << "-";
        out << "\n";
    }
    return out.str();
}

std::vector<SweepRow> sweep_t(const ExperimentConfig& base, const std::vector<int>& t_values,
                              Execution exec) {
    std::vector<SweepRow> rows;
    for (int t : t_values) {
        if (t < 1) throw ValidationError("t must be >= 1");
        ExperimentConfig cfg = base;
        cfg.topology = TopologyKind::kMultigraph;
        cfg.t = t;
        TrainRun run = run_experiment(cfg, exec);
        rows.push_back(SweepRow{t, run.cycles.mean_ms, run.final_consensus_loss});
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "t,mean_cycle_ms,final_loss\n";
    for (const auto& r : rows)
        out << r.t << "," << fmt_g(r.mean_cycle_ms) << "," << fmt_g(r.final_loss) << "\n";
    return out.str();
}

}  // namespace fedmesh
