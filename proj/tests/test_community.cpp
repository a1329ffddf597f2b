#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "trailmine/community.hpp"

using namespace trailmine;

namespace {

Mac mk(uint64_t k) { return Mac::from_bits(k); }

PoiNode node_with(std::string user, int poi, std::initializer_list<uint64_t> macs) {
    PoiNode n;
    n.user_id = std::move(user);
    n.poi_id = poi;
    for (uint64_t m : macs) n.fingerprint.entries[mk(m)] = -60.0;
    return n;
}

/// Two tight triangles joined by one weak bridge: the classic planted
/// two-community graph.
SimilarityGraph two_triangles() {
    SimilarityGraph g;
    g.nodes.resize(6);
    const double strong = 0.9, bridge = 0.55;
    g.edges = {{0, 1, strong}, {0, 2, strong}, {1, 2, strong},
               {3, 4, strong}, {3, 5, strong}, {4, 5, strong},
               {0, 3, bridge}};
    return g;
}

SimilarityGraph random_graph(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> weight(0.5, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    SimilarityGraph g;
    g.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (coin(rng) < 0.45) g.edges.push_back({i, j, weight(rng)});
    return g;
}

}  // namespace

TEST_CASE("pairwise pair counts") {
    REQUIRE(pairwise_count(2) == 1);
    REQUIRE(pairwise_count(3) == 3);
    REQUIRE(pairwise_count(41) == 820);
    REQUIRE(pairwise_count(10000) == 49995000);
    REQUIRE_THROWS_AS(pairwise_count(1), std::domain_error);
    REQUIRE_THROWS_AS(pairwise_count(0), std::domain_error);
    REQUIRE_THROWS_AS(pairwise_count(-5), std::domain_error);
}

TEST_CASE("graph building keeps only edges at or above the threshold") {
    std::vector<PoiNode> nodes;
    nodes.push_back(node_with("a", 0, {1, 2, 3, 4}));
    nodes.push_back(node_with("b", 0, {1, 2, 3, 4}));      // identical -> weight 1
    nodes.push_back(node_with("c", 0, {3, 4, 5, 6}));      // half shared -> 0.5
    nodes.push_back(node_with("d", 0, {10, 11, 12, 13}));  // disjoint -> no edge

    const auto g = build_graph(nodes, 0.5);
    REQUIRE(g.nodes.size() == 4);
    REQUIRE(g.edges.size() == 3);  // a-b, a-c, b-c; d stays isolated
    for (const auto& e : g.edges) {
        REQUIRE(e.weight >= 0.5);
        REQUIRE(e.a < e.b);
    }
}

TEST_CASE("graph building validates the threshold and skips empty nodes") {
    REQUIRE_THROWS_AS(build_graph({}, 0.0), std::domain_error);
    REQUIRE_THROWS_AS(build_graph({}, -0.2), std::domain_error);
    REQUIRE_THROWS_AS(build_graph({}, 1.5), std::domain_error);

    std::vector<PoiNode> nodes;
    nodes.push_back(node_with("a", 0, {1, 2}));
    nodes.push_back(PoiNode{"b", 1, {}});  // no fingerprint, no edges
    nodes.push_back(node_with("c", 0, {1, 2}));
    const auto g = build_graph(nodes, 0.5);
    REQUIRE(g.edges.size() == 1);
    REQUIRE(g.edges[0].a == 0);
    REQUIRE(g.edges[0].b == 2);
}

TEST_CASE("an edgeless graph has zero modularity and singleton communities") {
    SimilarityGraph g;
    g.nodes.resize(4);
    const auto p = louvain(g);
    REQUIRE(p.modularity == 0.0);
    REQUIRE(p.community == std::vector<int>{0, 1, 2, 3});
    REQUIRE(modularity_of(g, p.community) == 0.0);
}

TEST_CASE("a single node forms a single community") {
    SimilarityGraph g;
    g.nodes.resize(1);
    const auto p = louvain(g);
    REQUIRE(p.community == std::vector<int>{0});
    REQUIRE(p.modularity == 0.0);
}

TEST_CASE("the planted two-triangle split is recovered") {
    const auto g = two_triangles();
    const auto p = louvain(g);
    REQUIRE(p.community[0] == p.community[1]);
    REQUIRE(p.community[1] == p.community[2]);
    REQUIRE(p.community[3] == p.community[4]);
    REQUIRE(p.community[4] == p.community[5]);
    REQUIRE(p.community[0] != p.community[3]);
    REQUIRE(p.modularity == Catch::Approx(oracles::naive_modularity(g, p.community))
                                .margin(1e-12));
}

TEST_CASE("reported modularity equals direct evaluation") {
    std::mt19937_64 rng(2718);
    for (int round = 0; round < 60; ++round) {
        const auto g = random_graph(rng, 3 + rng() % 30);
        const auto p = louvain(g);
        REQUIRE(p.modularity ==
                Catch::Approx(modularity_of(g, p.community)).margin(1e-15));
        REQUIRE(p.modularity ==
                Catch::Approx(oracles::naive_modularity(g, p.community)).margin(1e-9));
    }
}

TEST_CASE("small-graph results are single-move locally optimal") {
    std::mt19937_64 rng(31415);
    for (int round = 0; round < 60; ++round) {
        const auto g = random_graph(rng, 2 + rng() % 7);  // up to 8 nodes
        const auto p = louvain(g);
        REQUIRE(oracles::single_move_optimal(g, p.community, 1e-9));
        // And never better than the true optimum over all partitions.
        REQUIRE(p.modularity <= oracles::exhaustive_best_modularity(g) + 1e-9);
    }
}

TEST_CASE("community detection is deterministic") {
    std::mt19937_64 rng(555);
    const auto g = random_graph(rng, 24);
    const auto p1 = louvain(g);
    const auto p2 = louvain(g);
    REQUIRE(p1.community == p2.community);
    REQUIRE(p1.modularity == p2.modularity);
}

TEST_CASE("community ids are numbered by first appearance") {
    const auto p = louvain(two_triangles());
    REQUIRE(p.community[0] == 0);
    REQUIRE(p.community[3] == 1);
}

TEST_CASE("identical fingerprints across users land in one community") {
    std::vector<PoiNode> nodes;
    nodes.push_back(node_with("alice", 0, {1, 2, 3, 4}));
    nodes.push_back(node_with("bob", 2, {1, 2, 3, 4}));
    nodes.push_back(node_with("carol", 1, {1, 2, 3, 4}));
    nodes.push_back(node_with("alice", 1, {50, 51, 52, 53}));
    nodes.push_back(node_with("bob", 0, {50, 51, 52, 53}));

    const auto g = build_graph(nodes, 0.5);
    const auto p = louvain(g);
    REQUIRE(p.community[0] == p.community[1]);
    REQUIRE(p.community[1] == p.community[2]);
    REQUIRE(p.community[3] == p.community[4]);
    REQUIRE(p.community[0] != p.community[3]);
}
