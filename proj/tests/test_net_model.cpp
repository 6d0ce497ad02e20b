#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "fedmesh/errors.hpp"
#include "fedmesh/net_model.hpp"
#include "fedmesh/rng.hpp"

using namespace fedmesh;

namespace {
const std::string kFixtures = FEDMESH_FIXTURES_DIR;

NetworkSpec random_spec(uint64_t seed) {
    Rng rng(seed);
    NetworkSpec spec;
    spec.name = "random-" + std::to_string(seed);
    spec.model_size_mbit = rng.next_range(0.5, 50.0);
    spec.local_updates = 1 + rng.next_int(4);
    int n = 3 + rng.next_int(6);
    for (int v = 0; v < n; ++v) {
        SiloParams s;
        s.id = v;
        s.compute_ms = rng.next_range(0.5, 10.0);
        s.up_capacity = rng.next_range(0.2, 10.0);
        s.down_capacity = rng.next_range(0.2, 10.0);
        spec.silos.push_back(s);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            spec.links[{i, j}] = rng.next_range(1.0, 100.0);
    return spec;
}
}  // namespace

TEST_CASE("loads the smallest valid network") {
    NetworkSpec spec = load_network(kFixtures + "/triangle.json");
    CHECK(spec.silo_count() == 3);
    CHECK(spec.links.size() == 3);
    CHECK(spec.name == "triangle");
    CHECK(spec.model_size_mbit == doctest::Approx(4.62));
    CHECK(spec.latency(2, 1) == 10.0);
}

TEST_CASE("rejects a zero upload capacity") {
    std::string text = R"({
      "name": "bad", "model_size_mbit": 1.0, "local_updates": 1,
      "silos": [
        {"id": 0, "compute_ms": 1.0, "up_gbps": 0.0, "down_gbps": 1.0},
        {"id": 1, "compute_ms": 1.0, "up_gbps": 1.0, "down_gbps": 1.0}
      ],
      "links": [{"src": 0, "dst": 1, "latency_ms": 1.0}]
    })";
    CHECK_THROWS_WITH_AS(parse_network(text), doctest::Contains("up_capacity must be > 0"),
                         ValidationError);
}

TEST_CASE("rejects unknown fields") {
    std::string text = R"({
      "name": "bad", "model_size_mbit": 1.0, "local_updates": 1, "extra": 1,
      "silos": [], "links": []
    })";
    CHECK_THROWS_WITH_AS(parse_network(text), doctest::Contains("unknown field \"extra\""),
                         ValidationError);
}

TEST_CASE("parse errors carry the line number") {
    std::string text = "{\n  \"name\": \"x\",\n  oops\n}";
    CHECK_THROWS_WITH_AS(parse_network(text), doctest::Contains("line 3"), ValidationError);
}

TEST_CASE("rejects asymmetric latencies") {
    std::string text = R"({
      "name": "bad", "model_size_mbit": 1.0, "local_updates": 1,
      "silos": [
        {"id": 0, "compute_ms": 1.0, "up_gbps": 1.0, "down_gbps": 1.0},
        {"id": 1, "compute_ms": 1.0, "up_gbps": 1.0, "down_gbps": 1.0}
      ],
      "links": [
        {"src": 0, "dst": 1, "latency_ms": 1.0},
        {"src": 1, "dst": 0, "latency_ms": 2.0}
      ]
    })";
    CHECK_THROWS_WITH_AS(parse_network(text), doctest::Contains("asymmetric latency"),
                         ValidationError);
}

TEST_CASE("duplicate symmetric links are accepted") {
    std::string text = R"({
      "name": "ok", "model_size_mbit": 1.0, "local_updates": 1,
      "silos": [
        {"id": 0, "compute_ms": 1.0, "up_gbps": 1.0, "down_gbps": 1.0},
        {"id": 1, "compute_ms": 1.0, "up_gbps": 1.0, "down_gbps": 1.0}
      ],
      "links": [
        {"src": 0, "dst": 1, "latency_ms": 1.0},
        {"src": 1, "dst": 0, "latency_ms": 1.0}
      ]
    })";
    NetworkSpec spec = parse_network(text);
    CHECK(spec.links.size() == 1);
}

TEST_CASE("rejects a disconnected network naming the unreachable silo") {
    std::string text = R"({
      "name": "bad", "model_size_mbit": 1.0, "local_updates": 1,
      "silos": [
        {"id": 0, "compute_ms": 1.0, "up_gbps": 1.0, "down_gbps": 1.0},
        {"id": 1, "compute_ms": 1.0, "up_gbps": 1.0, "down_gbps": 1.0},
        {"id": 2, "compute_ms": 1.0, "up_gbps": 1.0, "down_gbps": 1.0}
      ],
      "links": [{"src": 0, "dst": 1, "latency_ms": 1.0}]
    })";
    CHECK_THROWS_WITH_AS(parse_network(text), doctest::Contains("disconnected: silo 2"),
                         ValidationError);
}

TEST_CASE("wrongly-typed fields are validation errors") {
    std::string text = R"({
      "name": "bad", "model_size_mbit": 1.0, "local_updates": 1,
      "silos": [{"id": "x", "compute_ms": 1.0, "up_gbps": 1.0, "down_gbps": 1.0}],
      "links": []
    })";
    CHECK_THROWS_AS(parse_network(text), ValidationError);
}

TEST_CASE("the committed triangle fixture is a golden save_network output") {
    NetworkSpec spec = load_network(kFixtures + "/triangle.json");
    std::ifstream in(kFixtures + "/triangle.json", std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(network_to_string(spec) == ss.str());
}

TEST_CASE("save then load is the identity") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        NetworkSpec spec = random_spec(seed);
        NetworkSpec back = parse_network(network_to_string(spec));
        CHECK(back == spec);
    }
}

TEST_CASE("gaia-like fixture: 11 silos, 55 links") {
    NetworkSpec spec = load_network(kFixtures + "/gaia_het.json");
    CHECK(spec.silo_count() == 11);
    CHECK(spec.links.size() == 55);
}

TEST_CASE("connectivity graph of a uniform triangle has equal symmetric weights") {
    NetworkSpec spec = load_network(kFixtures + "/triangle.json");
    WeightedGraph g = connectivity_graph(spec);
    CHECK(g.complete());
    double w01 = g.weight(0, 1);
    CHECK(g.weight(1, 0) == w01);
    CHECK(g.weight(0, 2) == w01);
    CHECK(g.weight(1, 2) == w01);
}

TEST_CASE("two-silo connectivity weight matches the delay formula") {
    // u*T_c + l + M/A = 2*5 + 10 + 4.62/1
    NetworkSpec spec = load_network(kFixtures + "/two_silo.json");
    WeightedGraph g = connectivity_graph(spec);
    CHECK(g.weight(0, 1) == doctest::Approx(24.62).epsilon(1e-12));
    CHECK(g.weight(1, 0) == doctest::Approx(24.62).epsilon(1e-12));
}

TEST_CASE("connectivity weights are finite and positive on heterogeneous specs") {
    for (uint64_t seed = 30; seed < 40; ++seed) {
        NetworkSpec spec = random_spec(seed);
        WeightedGraph g = connectivity_graph(spec);
        for (const auto& [i, j] : g.edges()) {
            CHECK(g.weight(i, j) > 0.0);
            CHECK(g.weight(j, i) > 0.0);
            CHECK(std::isfinite(g.weight(i, j)));
        }
    }
}

TEST_CASE("every silo appears in at least one link") {
    NetworkSpec spec = load_network(kFixtures + "/gaia_het.json");
    WeightedGraph g = connectivity_graph(spec);
    for (int v = 0; v < g.node_count(); ++v) CHECK(g.degree(v) >= 1);
}
