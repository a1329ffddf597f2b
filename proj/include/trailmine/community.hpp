#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "trailmine/model.hpp"
#include "trailmine/similarity.hpp"

namespace trailmine {

/// One POI offered for community detection: who visited it and its signature.
struct PoiNode {
    std::string user_id;
    int poi_id = 0;
    Fingerprint fingerprint;
};

struct GraphEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    double weight = 0.0;
};

/// Undirected weighted graph over POI nodes. Only pairs whose similarity
/// reached the partitioning threshold carry an edge.
struct SimilarityGraph {
    std::vector<PoiNode> nodes;
    std::vector<GraphEdge> edges;
};

/// Community id per node plus the weighted modularity of the partition.
struct Partition {
    std::vector<int> community;
    double modularity = 0.0;
};

/// Number of pairwise similarity scores for h nodes: h (h - 1) / 2.
inline int64_t pairwise_count(int64_t h) {
    if (h < 2) throw std::domain_error("pairwise_count needs at least 2 nodes");
    return h * (h - 1) / 2;
}

/// Evaluates all pairwise similarities and keeps the edges at or above the
/// partitioning threshold.
inline SimilarityGraph build_graph(std::vector<PoiNode> nodes, double threshold) {
    if (threshold <= 0.0 || threshold > 1.0)
        throw std::domain_error("partitioning threshold must be in (0, 1]");
    SimilarityGraph g;
    g.nodes = std::move(nodes);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < g.nodes.size(); ++j) {
            const auto& fa = g.nodes[i].fingerprint;
            const auto& fb = g.nodes[j].fingerprint;
            if (fa.empty() || fb.empty()) continue;
            const double w = cosine_similarity(fa, fb).value;
            if (w >= threshold) g.edges.push_back({i, j, w});
        }
    }
    return g;
}

namespace detail {

/// Working graph for the aggregation phases. self_weight holds collapsed
/// intra-community weight counted as ordered pairs, so total_weight (2m) is
/// preserved across aggregations.
struct LouvainGraph {
    std::vector<std::vector<std::pair<std::size_t, double>>> adj;
    std::vector<double> self_weight;
    std::vector<double> degree;
    double total_weight = 0.0;  // 2m

    std::size_t size() const { return adj.size(); }

    void finalize_degrees() {
        degree.assign(adj.size(), 0.0);
        total_weight = 0.0;
        for (std::size_t i = 0; i < adj.size(); ++i) {
            double k = self_weight[i];
            for (const auto& [j, w] : adj[i]) k += w;
            degree[i] = k;
            total_weight += k;
        }
    }
};

/// One full local-move phase: repeated ordered sweeps moving each node to the
/// community with the best modularity gain, until a sweep makes no move.
/// Candidates are the node's neighboring communities plus one vacated slot,
/// so a node whose community stopped paying off can always fall back to a
/// singleton. Starts from `comm` and returns the assignment renumbered by
/// first appearance.
inline std::vector<std::size_t> local_move_phase(const LouvainGraph& g,
                                                 std::vector<std::size_t> comm,
                                                 bool& merged) {
    const std::size_t n = g.size();
    std::vector<double> comm_tot(n, 0.0);
    std::vector<std::size_t> comm_size(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        comm_tot[comm[i]] += g.degree[i];
        ++comm_size[comm[i]];
    }
    std::vector<std::size_t> vacant;
    for (std::size_t c = n; c-- > 0;)
        if (comm_size[c] == 0) vacant.push_back(c);

    constexpr double kMinGain = 1e-12;
    constexpr int kMaxSweeps = 1000;

    merged = false;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool moved = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t old_comm = comm[i];
            std::map<std::size_t, double> weight_to;  // community -> edge weight
            weight_to[old_comm] += 0.0;
            for (const auto& [j, w] : g.adj[i]) weight_to[comm[j]] += w;

            comm_tot[old_comm] -= g.degree[i];
            --comm_size[old_comm];
            const double scale = g.degree[i] / g.total_weight;

            std::size_t best_comm = old_comm;
            double best_score = weight_to[old_comm] - comm_tot[old_comm] * scale;
            for (const auto& [c, w] : weight_to) {
                if (c == old_comm) continue;
                const double score = w - comm_tot[c] * scale;
                if (score > best_score + kMinGain) {
                    best_score = score;
                    best_comm = c;
                }
            }
            // A fresh singleton scores exactly 0; it wins only when every
            // occupied candidate is a strict loss.
            while (!vacant.empty() && comm_size[vacant.back()] != 0) vacant.pop_back();
            if (!vacant.empty() && comm_size[old_comm] > 0 &&
                0.0 > best_score + kMinGain) {
                best_comm = vacant.back();
                vacant.pop_back();
            }

            comm_tot[best_comm] += g.degree[i];
            ++comm_size[best_comm];
            if (best_comm != old_comm) {
                if (comm_size[old_comm] == 0) vacant.push_back(old_comm);
                comm[i] = best_comm;
                moved = true;
                merged = true;
            }
        }
        if (!moved) break;
    }

    // Renumber communities in order of first appearance.
    std::vector<std::size_t> renumber(n, n);
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (renumber[comm[i]] == n) renumber[comm[i]] = next++;
        comm[i] = renumber[comm[i]];
    }
    return comm;
}

inline std::vector<std::size_t> identity_assignment(std::size_t n) {
    std::vector<std::size_t> comm(n);
    for (std::size_t i = 0; i < n; ++i) comm[i] = i;
    return comm;
}

inline LouvainGraph aggregate(const LouvainGraph& g, const std::vector<std::size_t>& comm,
                              std::size_t n_comms) {
    LouvainGraph out;
    out.adj.resize(n_comms);
    out.self_weight.assign(n_comms, 0.0);
    std::vector<std::map<std::size_t, double>> merged(n_comms);
    for (std::size_t i = 0; i < g.size(); ++i) {
        out.self_weight[comm[i]] += g.self_weight[i];
        for (const auto& [j, w] : g.adj[i]) {
            if (comm[j] == comm[i])
                out.self_weight[comm[i]] += w;  // ordered pairs, counted twice overall
            else
                merged[comm[i]][comm[j]] += w;
        }
    }
    for (std::size_t c = 0; c < n_comms; ++c)
        for (const auto& [d, w] : merged[c]) out.adj[c].push_back({d, w});
    out.finalize_degrees();
    return out;
}

}  // namespace detail

/// Weighted modularity of an assignment on the graph, evaluated directly from
/// community totals. Returns 0 for an edgeless graph.
inline double modularity_of(const SimilarityGraph& g, const std::vector<int>& community) {
    double two_m = 0.0;
    std::vector<double> degree(g.nodes.size(), 0.0);
    for (const auto& e : g.edges) {
        degree[e.a] += e.weight;
        degree[e.b] += e.weight;
        two_m += 2.0 * e.weight;
    }
    if (two_m == 0.0) return 0.0;

    std::map<int, double> internal, total;
    for (const auto& e : g.edges)
        if (community[e.a] == community[e.b]) internal[community[e.a]] += 2.0 * e.weight;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) total[community[i]] += degree[i];

    double q = 0.0;
    for (const auto& [c, tot] : total) {
        const double in = internal.count(c) ? internal.at(c) : 0.0;
        q += in / two_m - (tot / two_m) * (tot / two_m);
    }
    return q;
}

/// Two-phase Louvain with deterministic node order (insertion order, no
/// shuffling): local moves until no gain, then aggregation, repeated until the
/// graph stops shrinking, then a node-level refinement of the composed result
/// so no single node is left misplaced. Reported modularity is evaluated
/// directly on the returned partition.
inline Partition louvain(const SimilarityGraph& g) {
    const std::size_t n = g.nodes.size();
    Partition result;
    result.community.assign(n, 0);
    if (n == 0) return result;

    detail::LouvainGraph base;
    base.adj.resize(n);
    base.self_weight.assign(n, 0.0);
    for (const auto& e : g.edges) {
        if (e.a == e.b) continue;
        base.adj[e.a].push_back({e.b, e.weight});
        base.adj[e.b].push_back({e.a, e.weight});
    }
    base.finalize_degrees();

    std::vector<std::size_t> node_to_comm = detail::identity_assignment(n);

    if (base.total_weight > 0.0) {
        detail::LouvainGraph work = base;
        while (true) {
            bool merged = false;
            const auto comm = detail::local_move_phase(
                work, detail::identity_assignment(work.size()), merged);
            std::size_t n_comms = 0;
            for (std::size_t c : comm) n_comms = std::max(n_comms, c + 1);
            for (auto& c : node_to_comm) c = comm[c];
            if (!merged || n_comms == work.size()) break;
            work = detail::aggregate(work, comm, n_comms);
        }

        // Aggregation optimizes whole-group moves; re-sweep single nodes on
        // the original graph until the assignment is single-move stable.
        bool refined = true;
        while (refined) {
            refined = false;
            node_to_comm = detail::local_move_phase(base, node_to_comm, refined);
        }
    }

    for (std::size_t i = 0; i < n; ++i)
        result.community[i] = static_cast<int>(node_to_comm[i]);
    result.modularity = modularity_of(g, result.community);
    return result;
}

}  // namespace trailmine
