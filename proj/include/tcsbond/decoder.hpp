// Copyright 2026 The tcsbond Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tcsbond/damage.hpp"
#include "tcsbond/lattice.hpp"
#include "tcsbond/matching.hpp"
#include "tcsbond/rng.hpp"

namespace tcsbond {

/// Face qubits of one lattice whose X outcome was misreported.
struct MeasurementErrors {
    Lattice lattice = Lattice::primal;
    std::vector<uint8_t> flipped;  // per face

    std::vector<uint32_t> faces() const {
        std::vector<uint32_t> out;
        for (uint32_t f = 0; f < flipped.size(); f++) {
            if (flipped[f]) out.push_back(f);
        }
        return out;
    }
};

inline Stream measurement_stream(Lattice lattice) {
    return lattice == Lattice::primal ? Stream::primal_measurement : Stream::dual_measurement;
}

/// Flips every intact, imperfectly measured face with probability p_comp.
inline MeasurementErrors sample_measurement_errors(
    const LatticeGeometry &g, const std::vector<uint8_t> &removed_faces, Lattice lattice, const NoiseParams &params) {
    const Sublattice &sub = g.sublattice(lattice);
    MeasurementErrors out{lattice, std::vector<uint8_t>(sub.face_count(), 0)};
    if (params.p_comp <= 0.0) {
        return out;
    }
    TrialRng rng = params.rng(measurement_stream(lattice));
    for (uint32_t f = 0; f < sub.face_count(); f++) {
        if (removed_faces[f] || sub.face_perfect[f]) {
            continue;
        }
        out.flipped[f] = rng.bernoulli(params.p_comp);
    }
    return out;
}

/// Non-terminal supercheck groups with odd flip parity, sorted.
inline std::vector<uint32_t> extract_syndrome(
    const LatticeGeometry &g, const SupercheckPartition &part, const std::vector<uint8_t> &flipped) {
    const Sublattice &sub = g.sublattice(part.lattice);
    std::vector<uint8_t> parity(part.group_count, 0);
    for (uint32_t f = 0; f < sub.face_count(); f++) {
        if (!flipped[f]) {
            continue;
        }
        for (uint32_t node : sub.face_nodes[f]) {
            if (node != kNoNode) {
                parity[part.group_of[node]] ^= 1;
            }
        }
    }
    std::vector<uint32_t> flagged;
    for (uint32_t grp = 0; grp < part.group_count; grp++) {
        if (parity[grp] && !part.is_terminal_group(grp)) {
            flagged.push_back(grp);
        }
    }
    return flagged;
}

/// Probability that an odd number of k independent faces flip.
inline double superedge_flip_probability(double p, uint32_t k) {
    return 0.5 * (1.0 - std::pow(1.0 - 2.0 * p, double(k)));
}

inline double superedge_weight(double q) {
    return std::log((1.0 - q) / q);
}

/// Lower clamp on p_comp used for weights, so zero noise stays finite.
inline constexpr double kMinWeightProbability = 1e-9;

/// Fixed-point scale for matching weights.
inline constexpr double kWeightScale = 1048576.0;

struct SuperEdge {
    uint32_t a;
    uint32_t b;
    uint32_t k;           // imperfect intact faces shared by the two groups
    uint32_t face;        // representative face used when the edge is part of a correction
    double flip_probability;
    double weight;
    int64_t scaled_weight;
};

/// Decoding graph over supercheck groups. The two terminal groups act as
/// boundary nodes.
struct SyndromeGraph {
    Lattice lattice = Lattice::primal;
    uint32_t node_count = 0;
    uint32_t boundary_a = 0;
    uint32_t boundary_b = 0;
    std::vector<SuperEdge> edges;
    std::vector<uint32_t> offsets;  // CSR over nodes into `incident`
    std::vector<uint32_t> incident;

    bool is_boundary(uint32_t node) const {
        return node == boundary_a || node == boundary_b;
    }
    std::span<const uint32_t> edges_of(uint32_t node) const {
        return {incident.data() + offsets[node], incident.data() + offsets[node + 1]};
    }
};

inline SyndromeGraph build_matching_graph(
    const LatticeGeometry &g, const SupercheckPartition &part, const std::vector<uint8_t> &removed_faces, double p_comp) {
    const Sublattice &sub = g.sublattice(part.lattice);
    SyndromeGraph graph;
    graph.lattice = part.lattice;
    graph.node_count = part.group_count;
    graph.boundary_a = part.group_a;
    graph.boundary_b = part.group_b;

    struct Link {
        uint32_t a, b, face;
    };
    std::vector<Link> links;
    for (uint32_t f = 0; f < sub.face_count(); f++) {
        const auto &ends = sub.face_nodes[f];
        if (ends[1] == kNoNode || removed_faces[f] || sub.face_perfect[f]) {
            continue;
        }
        uint32_t a = part.group_of[ends[0]];
        uint32_t b = part.group_of[ends[1]];
        if (a == b) {
            continue;
        }
        links.push_back({std::min(a, b), std::max(a, b), f});
    }
    std::sort(links.begin(), links.end(), [](const Link &x, const Link &y) {
        return std::tie(x.a, x.b, x.face) < std::tie(y.a, y.b, y.face);
    });

    double p = std::clamp(p_comp, kMinWeightProbability, 0.5 - kMinWeightProbability);
    for (size_t i = 0; i < links.size();) {
        size_t j = i;
        while (j < links.size() && links[j].a == links[i].a && links[j].b == links[i].b) {
            j++;
        }
        uint32_t k = uint32_t(j - i);
        double q = superedge_flip_probability(p, k);
        double w = superedge_weight(q);
        graph.edges.push_back({links[i].a, links[i].b, k, links[i].face, q, w, std::llround(w * kWeightScale)});
        i = j;
    }

    graph.offsets.assign(graph.node_count + 1, 0);
    for (const auto &e : graph.edges) {
        graph.offsets[e.a + 1]++;
        graph.offsets[e.b + 1]++;
    }
    for (uint32_t n = 0; n < graph.node_count; n++) {
        graph.offsets[n + 1] += graph.offsets[n];
    }
    graph.incident.resize(graph.offsets.back());
    std::vector<uint32_t> fill(graph.offsets.begin(), graph.offsets.end() - 1);
    for (uint32_t e = 0; e < graph.edges.size(); e++) {
        graph.incident[fill[graph.edges[e].a]++] = e;
        graph.incident[fill[graph.edges[e].b]++] = e;
    }
    return graph;
}

/// One matched item: two flagged nodes, or one flagged node sent to the
/// boundary (second == kNoNode).
struct MatchedPair {
    uint32_t first;
    uint32_t second;
};

/// Exact minimum-weight matching of flagged nodes where each node may
/// instead be sent to the boundary.
///
/// `pair` is the symmetric n x n node-to-node distance table and `to_boundary`
/// the node-to-boundary distances. Sending u and v to the boundary together
/// costs to_boundary[u] + to_boundary[v], so pair costs are capped at that
/// sum and, when n is odd, one virtual boundary vertex absorbs the leftover
/// node. This solves the same problem as giving every node its own boundary
/// twin, with half as many vertices.
inline std::vector<MatchedPair> match_with_boundary(const WeightMatrix &pair, std::span<const int64_t> to_boundary) {
    const size_t n = to_boundary.size();
    if (pair.size() != n) {
        throw std::invalid_argument("distance table size mismatch");
    }
    if (n == 0) {
        return {};
    }
    const size_t m = n + (n % 2);
    WeightMatrix reduced(m);
    for (size_t i = 0; i < n; i++) {
        for (size_t j = i + 1; j < n; j++) {
            reduced.set(i, j, std::min(pair(i, j), to_boundary[i] + to_boundary[j]));
        }
        if (m > n) {
            reduced.set(i, n, to_boundary[i]);
        }
    }
    PerfectMatching pm = min_weight_perfect_matching(reduced);
    std::vector<MatchedPair> out;
    for (auto [i, j] : pm.pairs) {
        if (j == n) {
            out.push_back({i, kNoNode});
        } else if (pair(i, j) <= to_boundary[i] + to_boundary[j]) {
            out.push_back({i, j});
        } else {
            out.push_back({i, kNoNode});
            out.push_back({j, kNoNode});
        }
    }
    return out;
}

namespace internal {

/// Monotone priority queue for non-negative integer keys: every pushed key
/// must be at least the last popped key.
class RadixHeap {
   public:
    using Item = std::pair<int64_t, uint32_t>;

    void clear() {
        for (auto &b : buckets_) {
            b.clear();
        }
        last_ = 0;
        size_ = 0;
    }

    bool empty() const {
        return size_ == 0;
    }

    void push(int64_t key, uint32_t value) {
        buckets_[bucket_of(key)].push_back({key, value});
        size_++;
    }

    Item pop() {
        if (buckets_[0].empty()) {
            size_t i = 1;
            while (buckets_[i].empty()) {
                i++;
            }
            int64_t low = buckets_[i].front().first;
            for (const Item &it : buckets_[i]) {
                low = std::min(low, it.first);
            }
            last_ = low;
            for (const Item &it : buckets_[i]) {
                buckets_[bucket_of(it.first)].push_back(it);
            }
            buckets_[i].clear();
        }
        Item top = buckets_[0].back();
        buckets_[0].pop_back();
        size_--;
        return top;
    }

   private:
    size_t bucket_of(int64_t key) const {
        uint64_t diff = uint64_t(key) ^ uint64_t(last_);
        return diff == 0 ? 0 : size_t(64 - std::countl_zero(diff));
    }

    std::array<std::vector<Item>, 65> buckets_;
    int64_t last_ = 0;
    size_t size_ = 0;
};

}  // namespace internal

struct DecodeResult {
    bool success = true;
    std::vector<uint32_t> flagged;     // groups with odd parity
    std::vector<uint32_t> correction;  // faces, sorted
    std::vector<MatchedPair> matching; // indices into `flagged`
    int64_t matching_weight = 0;
    uint32_t boundary_matches = 0;
};

/// Decoder for one lattice with fixed damage. Build once, decode many
/// measurement-error samples. Not safe for concurrent `decode` calls.
class LatticeDecoder {
   public:
    static constexpr int64_t kUnreachable = std::numeric_limits<int64_t>::max() / 8;

    LatticeDecoder(
        const LatticeGeometry &g,
        const SupercheckPartition &part,
        const std::vector<uint8_t> &removed_faces,
        double p_comp)
        : geometry_(&g), partition_(&part), graph_(build_matching_graph(g, part, removed_faces, p_comp)) {
        if (part.percolated()) {
            throw std::invalid_argument("cannot decode a percolated lattice");
        }
        boundary_distances();
    }

    const SyndromeGraph &graph() const {
        return graph_;
    }

    /// Distance from `node` to the nearer boundary group.
    int64_t boundary_distance(uint32_t node) const {
        return bdist_[node];
    }

    DecodeResult decode(const std::vector<uint8_t> &flipped, const CorrelationSurface &surface) const {
        DecodeResult res;
        res.flagged = extract_syndrome(*geometry_, *partition_, flipped);
        const size_t n = res.flagged.size();

        std::vector<uint8_t> correction_mask;
        if (n > 0) {
            correction_mask.assign(flipped.size(), 0);
            std::vector<int64_t> to_boundary(n);
            int64_t widest = 0;
            for (size_t i = 0; i < n; i++) {
                to_boundary[i] = bdist_[res.flagged[i]];
                if (to_boundary[i] >= kUnreachable) {
                    throw std::logic_error("flagged check cannot reach a boundary");
                }
                widest = std::max(widest, to_boundary[i]);
            }

            // Each pair is searched once, from the member with the larger
            // boundary distance. Pair distances beyond b_i + b_j are never
            // used, so a search stops once it passes b_i plus the largest
            // boundary distance among flags it has not reached yet.
            std::vector<uint32_t> order(n);
            std::iota(order.begin(), order.end(), 0u);
            std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
                return to_boundary[a] != to_boundary[b] ? to_boundary[a] > to_boundary[b] : a < b;
            });
            std::vector<uint32_t> rank(n);
            for (uint32_t r = 0; r < n; r++) {
                rank[order[r]] = r;
            }
            prepare_workspace(n);
            for (size_t i = 0; i < n; i++) {
                slot_[res.flagged[i]] = int32_t(i);
            }
            WeightMatrix pair(n, kUnreachable);
            for (uint32_t r = 0; r < n; r++) {
                search_from(r, order, rank, to_boundary, res.flagged, pair);
            }
            for (size_t i = 0; i < n; i++) {
                slot_[res.flagged[i]] = -1;
            }

            res.matching = match_with_boundary(pair, to_boundary);
            for (const auto &mp : res.matching) {
                if (mp.second == kNoNode) {
                    res.matching_weight += to_boundary[mp.first];
                    res.boundary_matches++;
                    trace(bparent_, res.flagged[mp.first], correction_mask);
                } else {
                    res.matching_weight += pair(mp.first, mp.second);
                    uint32_t from = rank[mp.first] < rank[mp.second] ? mp.first : mp.second;
                    uint32_t to = from == mp.first ? mp.second : mp.first;
                    trace_pair(rank[from], res.flagged[from], res.flagged[to], correction_mask);
                }
            }
            for (uint32_t f = 0; f < correction_mask.size(); f++) {
                if (correction_mask[f]) res.correction.push_back(f);
            }
        }

        uint8_t crossing = 0;
        for (uint32_t f = 0; f < flipped.size(); f++) {
            uint8_t residual = flipped[f] ^ (n > 0 ? correction_mask[f] : uint8_t{0});
            crossing ^= residual & surface.contains[f];
        }
        res.success = crossing == 0;
        return res;
    }

   private:
    using QueueItem = std::pair<int64_t, uint32_t>;

    // Multi-source Dijkstra from both boundary groups.
    void boundary_distances() {
        bdist_.assign(graph_.node_count, kUnreachable);
        bparent_.assign(graph_.node_count, kNoNode);
        queue_.clear();
        for (uint32_t b : {graph_.boundary_a, graph_.boundary_b}) {
            bdist_[b] = 0;
            heap_push(0, b);
        }
        while (!queue_.empty()) {
            auto [d, u] = heap_pop();
            if (d != bdist_[u]) {
                continue;
            }
            for (uint32_t e : graph_.edges_of(u)) {
                const SuperEdge &edge = graph_.edges[e];
                uint32_t v = edge.a == u ? edge.b : edge.a;
                if (graph_.is_boundary(v)) {
                    continue;
                }
                int64_t nd = d + edge.scaled_weight;
                if (nd < bdist_[v]) {
                    bdist_[v] = nd;
                    bparent_[v] = e;
                    heap_push(nd, v);
                }
            }
        }
    }

    void prepare_workspace(size_t n) const {
        const size_t nodes = graph_.node_count;
        if (dist_.size() != nodes) {
            dist_.assign(nodes, kUnreachable);
            stamp_.assign(nodes, 0);
            slot_.assign(nodes, -1);
        }
        if (parents_.size() < n * nodes) {
            parents_.resize(n * nodes);
        }
        if (reached_.size() < n) {
            reached_.resize(n, 0);
        }
    }

    // Dijkstra from the flag at position `r` of `order`, recording distances
    // to flags later in the order. Boundary groups are not expanded: paths
    // through the boundary are covered by the boundary option of the
    // matching. Parent entries are only written for nodes this search
    // improves, so tracing must stop at the source.
    void search_from(
        uint32_t r,
        const std::vector<uint32_t> &order,
        const std::vector<uint32_t> &rank,
        const std::vector<int64_t> &to_boundary,
        const std::vector<uint32_t> &flagged,
        WeightMatrix &pair) const {
        const size_t n = order.size();
        const uint32_t row = order[r];
        uint32_t next = r + 1;
        if (next == n) {
            return;
        }
        if (search_tag_ == std::numeric_limits<uint32_t>::max()) {
            std::fill(stamp_.begin(), stamp_.end(), 0u);
            std::fill(reached_.begin(), reached_.end(), 0u);
            search_tag_ = 0;
        }
        const uint32_t tag = ++search_tag_;
        uint32_t *parent = parents_.data() + size_t(r) * graph_.node_count;
        int64_t radius = to_boundary[row] + to_boundary[order[next]];

        queue_.clear();
        const uint32_t source = flagged[row];
        stamp_[source] = tag;
        dist_[source] = 0;
        heap_push(0, source);
        while (!queue_.empty()) {
            auto [d, u] = heap_pop();
            if (d != dist_[u]) {
                continue;
            }
            if (d > radius) {
                break;
            }
            int32_t s = slot_[u];
            if (s >= 0 && rank[uint32_t(s)] > r) {
                pair.set(row, size_t(s), d);
                reached_[uint32_t(s)] = tag;
                while (next < n && reached_[order[next]] == tag) {
                    next++;
                }
                if (next == n) {
                    break;
                }
                radius = to_boundary[row] + to_boundary[order[next]];
            }
            if (graph_.is_boundary(u)) {
                continue;
            }
            for (uint32_t e : graph_.edges_of(u)) {
                const SuperEdge &edge = graph_.edges[e];
                uint32_t v = edge.a == u ? edge.b : edge.a;
                int64_t nd = d + edge.scaled_weight;
                if (stamp_[v] != tag || nd < dist_[v]) {
                    stamp_[v] = tag;
                    dist_[v] = nd;
                    parent[v] = e;
                    heap_push(nd, v);
                }
            }
        }
    }

    void heap_push(int64_t d, uint32_t v) const {
        queue_.push(d, v);
    }

    QueueItem heap_pop() const {
        return queue_.pop();
    }

    void trace_pair(uint32_t r, uint32_t source, uint32_t node, std::vector<uint8_t> &mask) const {
        const uint32_t *parent = parents_.data() + size_t(r) * graph_.node_count;
        while (node != source) {
            const SuperEdge &edge = graph_.edges[parent[node]];
            mask[edge.face] ^= 1;
            node = edge.a == node ? edge.b : edge.a;
        }
    }

    void trace(const std::vector<uint32_t> &parent, uint32_t node, std::vector<uint8_t> &mask) const {
        while (parent[node] != kNoNode) {
            const SuperEdge &edge = graph_.edges[parent[node]];
            mask[edge.face] ^= 1;
            node = edge.a == node ? edge.b : edge.a;
        }
    }

    const LatticeGeometry *geometry_;
    const SupercheckPartition *partition_;
    SyndromeGraph graph_;
    std::vector<int64_t> bdist_;
    std::vector<uint32_t> bparent_;

    // Search scratch space, reused across decode calls.
    mutable std::vector<int64_t> dist_;
    mutable std::vector<uint32_t> stamp_;
    mutable std::vector<int32_t> slot_;
    mutable std::vector<uint32_t> parents_;
    mutable std::vector<uint32_t> reached_;
    mutable internal::RadixHeap queue_;
    mutable uint32_t search_tag_ = 0;
};

/// True when the residual error (flips plus correction) crosses the
/// correlation surface an even number of times.
inline bool decode_lattice(
    const LatticeGeometry &g,
    const SupercheckPartition &part,
    const std::vector<uint8_t> &removed_faces,
    const std::vector<uint8_t> &flipped,
    const CorrelationSurface &surface,
    double p_comp) {
    return LatticeDecoder(g, part, removed_faces, p_comp).decode(flipped, surface).success;
}

}  // namespace tcsbond
