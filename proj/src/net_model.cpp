#include "fedmesh/net_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fedmesh/errors.hpp"
#include "fedmesh/timing.hpp"

namespace fedmesh {

using nlohmann::json;

namespace {

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

const json& require(const json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ValidationError("missing field \"" + key + "\" in " + where);
    return *it;
}

std::pair<int, int> canonical(int i, int j) { return {std::min(i, j), std::max(i, j)}; }

}  // namespace

static NetworkSpec parse_network_doc(const json& doc, const std::string& origin);

bool NetworkSpec::has_link(int i, int j) const { return links.count(canonical(i, j)) > 0; }

double NetworkSpec::latency(int i, int j) const {
    auto it = links.find(canonical(i, j));
    if (it == links.end())
        throw ValidationError("no link between silo " + std::to_string(i) + " and silo " +
                              std::to_string(j));
    return it->second;
}

NetworkSpec parse_network(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(origin + ": parse error at line " +
                              std::to_string(line_of_byte(text, e.byte)) + ": " + e.what());
    }
    try {
        return parse_network_doc(doc, origin);
    } catch (const json::exception& e) {
        throw ValidationError(origin + ": " + e.what());
    }
}

static NetworkSpec parse_network_doc(const json& doc, const std::string& origin) {
    if (!doc.is_object()) throw ValidationError(origin + ": top level must be an object");
    reject_unknown_fields(doc, {"name", "model_size_mbit", "local_updates", "silos", "links"},
                          origin);

    NetworkSpec spec;
    spec.name = require(doc, "name", origin).get<std::string>();
    spec.model_size_mbit = require(doc, "model_size_mbit", origin).get<double>();
    spec.local_updates = require(doc, "local_updates", origin).get<int>();

    const json& silos = require(doc, "silos", origin);
    if (!silos.is_array()) throw ValidationError(origin + ": \"silos\" must be an array");
    for (const auto& s : silos) {
        reject_unknown_fields(s, {"id", "compute_ms", "up_gbps", "down_gbps"}, "silo entry");
        SiloParams p;
        p.id = require(s, "id", "silo entry").get<int>();
        p.compute_ms = require(s, "compute_ms", "silo entry").get<double>();
        p.up_capacity = require(s, "up_gbps", "silo entry").get<double>();
        p.down_capacity = require(s, "down_gbps", "silo entry").get<double>();
        spec.silos.push_back(p);
    }

    const json& links = require(doc, "links", origin);
    if (!links.is_array()) throw ValidationError(origin + ": \"links\" must be an array");
    for (const auto& l : links) {
        reject_unknown_fields(l, {"src", "dst", "latency_ms"}, "link entry");
        int src = require(l, "src", "link entry").get<int>();
        int dst = require(l, "dst", "link entry").get<int>();
        double latency = require(l, "latency_ms", "link entry").get<double>();
        if (src == dst)
            throw ValidationError("link src and dst must differ (silo " + std::to_string(src) +
                                  ")");
        auto key = canonical(src, dst);
        auto it = spec.links.find(key);
        if (it != spec.links.end()) {
            if (it->second != latency)
                throw ValidationError("asymmetric latency between silo " +
                                      std::to_string(key.first) + " and silo " +
                                      std::to_string(key.second));
        } else {
            spec.links.emplace(key, latency);
        }
    }

    validate_network(spec);
    return spec;
}

NetworkSpec load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("file not found: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_network(buf.str(), path);
}

void validate_network(const NetworkSpec& spec) {
    const int n = spec.silo_count();
    if (n < 2) throw ValidationError("network needs at least 2 silos");
    if (!(spec.model_size_mbit > 0)) throw ValidationError("model_size_mbit must be > 0");
    if (spec.local_updates < 1) throw ValidationError("local_updates must be >= 1");

    std::set<int> seen;
    for (const auto& s : spec.silos) {
        if (s.id < 0 || s.id >= n)
            throw ValidationError("silo ids must be dense 0.." + std::to_string(n - 1) +
                                  ": got " + std::to_string(s.id));
        if (!seen.insert(s.id).second)
            throw ValidationError("duplicate silo id " + std::to_string(s.id));
        if (!(s.compute_ms > 0))
            throw ValidationError("compute_ms must be > 0 (silo " + std::to_string(s.id) + ")");
        if (!(s.up_capacity > 0))
            throw ValidationError("up_capacity must be > 0 (silo " + std::to_string(s.id) + ")");
        if (!(s.down_capacity > 0))
            throw ValidationError("down_capacity must be > 0 (silo " + std::to_string(s.id) +
                                  ")");
    }

    for (const auto& [key, latency] : spec.links) {
        if (key.first < 0 || key.second >= n)
            throw ValidationError("link references unknown silo " +
                                  std::to_string(key.first < 0 ? key.first : key.second));
        if (latency < 0)
            throw ValidationError("latency must be >= 0 (link " + std::to_string(key.first) +
                                  "-" + std::to_string(key.second) + ")");
    }

    // reachability from silo 0
    std::vector<std::vector<int>> adj(n);
    for (const auto& [key, latency] : spec.links) {
        adj[key.first].push_back(key.second);
        adj[key.second].push_back(key.first);
    }
    std::vector<bool> reached(n, false);
    std::vector<int> stack{0};
    reached[0] = true;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int u : adj[v])
            if (!reached[u]) {
                reached[u] = true;
                stack.push_back(u);
            }
    }
    for (int v = 0; v < n; ++v)
        if (!reached[v])
            throw ValidationError("disconnected: silo " + std::to_string(v) + " unreachable");
}

std::string network_to_string(const NetworkSpec& spec) {
    json doc;
    doc["name"] = spec.name;
    doc["model_size_mbit"] = spec.model_size_mbit;
    doc["local_updates"] = spec.local_updates;
    json silos = json::array();
    for (const auto& s : spec.silos) {
        json e;
        e["id"] = s.id;
        e["compute_ms"] = s.compute_ms;
        e["up_gbps"] = s.up_capacity;
        e["down_gbps"] = s.down_capacity;
        silos.push_back(e);
    }
    doc["silos"] = silos;
    json links = json::array();
    for (const auto& [key, latency] : spec.links) {
        json e;
        e["src"] = key.first;
        e["dst"] = key.second;
        e["latency_ms"] = latency;
        links.push_back(e);
    }
    doc["links"] = links;
    return doc.dump(2) + "\n";
}

void save_network(const NetworkSpec& spec, const std::string& path) {
    validate_network(spec);
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << network_to_string(spec);
}

WeightedGraph connectivity_graph(const NetworkSpec& spec) {
    validate_network(spec);
    const int n = spec.silo_count();
    std::vector<int> degree(n, 0);
    for (const auto& [key, latency] : spec.links) {
        ++degree[key.first];
        ++degree[key.second];
    }
    WeightedGraph g(n);
    for (const auto& [key, latency] : spec.links) {
        auto [i, j] = key;
        g.set_weight(i, j, static_delay(spec, i, j, degree[i], degree[j]));
        g.set_weight(j, i, static_delay(spec, j, i, degree[j], degree[i]));
    }
    return g;
}

}  // namespace fedmesh
