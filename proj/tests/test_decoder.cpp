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

#include <gtest/gtest.h>

#include <cmath>
#include <queue>

#include "tcsbond/decoder.hpp"
#include "tcsbond/oracle.hpp"

using namespace tcsbond;

namespace {

struct Instance {
    DamageReport damage;
    Lattice lattice;
    MeasurementErrors errors;
    CorrelationSurface surface;
};

std::optional<Instance> make_instance(const LatticeGeometry &g, Scheme scheme, NoiseParams p, Lattice k) {
    DamageReport damage = assess_damage(g, scheme, p);
    if (damage.percolation(k)) return std::nullopt;
    auto surface = build_correlation_surface(g, damage.partition(k), damage.removed.of(k), k);
    MeasurementErrors errors = sample_measurement_errors(g, damage.removed.of(k), k, p);
    return Instance{std::move(damage), k, std::move(errors), std::move(*surface)};
}

// Shortest distances from `source` with boundary nodes as sinks.
std::vector<int64_t> plain_dijkstra(const SyndromeGraph &graph, uint32_t source) {
    std::vector<int64_t> dist(graph.node_count, std::numeric_limits<int64_t>::max() / 4);
    using Item = std::pair<int64_t, uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
    dist[source] = 0;
    q.push(Item{0, source});
    while (!q.empty()) {
        auto [d, u] = q.top();
        q.pop();
        if (d != dist[u] || (u != source && graph.is_boundary(u))) continue;
        for (uint32_t e : graph.edges_of(u)) {
            const SuperEdge &edge = graph.edges[e];
            uint32_t v = edge.a == u ? edge.b : edge.a;
            if (d + edge.scaled_weight < dist[v]) {
                dist[v] = d + edge.scaled_weight;
                q.push(Item{dist[v], v});
            }
        }
    }
    return dist;
}

}  // namespace

TEST(Decoder, superedge_probability_and_weight) {
    EXPECT_DOUBLE_EQ(superedge_flip_probability(0.1, 1), 0.1);
    EXPECT_NEAR(superedge_flip_probability(0.1, 2), 2 * 0.1 * 0.9, 1e-15);
    EXPECT_NEAR(superedge_flip_probability(0.1, 3), 3 * 0.1 * 0.81 + 0.001, 1e-15);
    EXPECT_NEAR(superedge_weight(0.1), std::log(9.0), 1e-15);
    EXPECT_NEAR(superedge_flip_probability(0.5, 4), 0.5, 1e-15);
    EXPECT_GT(superedge_weight(superedge_flip_probability(0.02, 1)),
              superedge_weight(superedge_flip_probability(0.02, 2)));
}

TEST(Decoder, matching_graph_aggregates_shared_faces) {
    LatticeGeometry g = build_lattice(4);
    for (uint64_t t = 0; t < 10; t++) {
        DamageReport damage = assess_damage(g, Scheme::non_adaptive, {0.06, 0.0, 2, t});
        for (Lattice k : kLattices) {
            if (damage.percolation(k)) continue;
            const auto &part = damage.partition(k);
            const auto &removed = damage.removed.of(k);
            SyndromeGraph graph = build_matching_graph(g, part, removed, 0.03);
            const Sublattice &sub = g.sublattice(k);
            std::map<std::pair<uint32_t, uint32_t>, uint32_t> shared;
            for (uint32_t f = 0; f < sub.face_count(); f++) {
                const auto &ends = sub.face_nodes[f];
                if (removed[f] || sub.face_perfect[f] || ends[1] == kNoNode) continue;
                uint32_t a = part.group_of[ends[0]];
                uint32_t b = part.group_of[ends[1]];
                if (a != b) shared[{std::min(a, b), std::max(a, b)}]++;
            }
            ASSERT_EQ(graph.edges.size(), shared.size());
            for (const SuperEdge &e : graph.edges) {
                ASSERT_EQ(e.k, (shared[{e.a, e.b}]));
                ASSERT_NEAR(e.flip_probability, superedge_flip_probability(0.03, e.k), 1e-15);
                ASSERT_EQ(e.scaled_weight, std::llround(e.weight * kWeightScale));
                ASSERT_GT(e.scaled_weight, 0);
            }
        }
    }
}

TEST(Decoder, no_flips_no_syndrome) {
    LatticeGeometry g = build_lattice(3);
    DamageReport damage = assess_damage(g, Scheme::non_adaptive, {0.0, 0.0, 0, 0});
    for (Lattice k : kLattices) {
        auto errors = sample_measurement_errors(g, damage.removed.of(k), k, {0.0, 0.0, 0, 0});
        EXPECT_TRUE(errors.faces().empty());
        auto surface = build_correlation_surface(g, damage.partition(k), damage.removed.of(k), k);
        LatticeDecoder dec(g, damage.partition(k), damage.removed.of(k), 0.01);
        auto res = dec.decode(errors.flipped, *surface);
        EXPECT_TRUE(res.success);
        EXPECT_TRUE(res.flagged.empty());
        EXPECT_TRUE(res.correction.empty());
    }
}

TEST(Decoder, perfect_and_removed_faces_never_flip) {
    LatticeGeometry g = build_lattice(3);
    DamageReport damage = assess_damage(g, Scheme::non_adaptive, {0.08, 0.0, 6, 1});
    for (Lattice k : kLattices) {
        auto errors = sample_measurement_errors(g, damage.removed.of(k), k, {0.08, 1.0, 6, 1});
        const Sublattice &sub = g.sublattice(k);
        for (uint32_t f = 0; f < sub.face_count(); f++) {
            bool eligible = !damage.removed.of(k)[f] && !sub.face_perfect[f];
            ASSERT_EQ(errors.flipped[f] != 0, eligible);
        }
    }
}

TEST(Decoder, every_single_flip_is_corrected) {
    for (int d : {3, 5}) {
        LatticeGeometry g = build_lattice(d);
        DamageReport damage = assess_damage(g, Scheme::non_adaptive, {0.0, 0.0, 0, 0});
        for (Lattice k : kLattices) {
            const Sublattice &sub = g.sublattice(k);
            auto surface = build_correlation_surface(g, damage.partition(k), damage.removed.of(k), k);
            LatticeDecoder dec(g, damage.partition(k), damage.removed.of(k), 0.01);
            for (uint32_t f = 0; f < sub.face_count(); f++) {
                if (sub.face_perfect[f]) continue;
                std::vector<uint8_t> flipped(sub.face_count(), 0);
                flipped[f] = 1;
                ASSERT_TRUE(dec.decode(flipped, *surface).success) << "d=" << d << " face " << f;
            }
        }
    }
}

TEST(Decoder, throws_on_percolated_lattice) {
    LatticeGeometry g = build_lattice(3);
    DamageReport damage = assess_damage(g, Scheme::non_adaptive, {1.0, 0.0, 0, 0});
    ASSERT_TRUE(damage.percolation(Lattice::primal));
    EXPECT_THROW(LatticeDecoder(g, damage.partition(Lattice::primal), damage.removed.of(Lattice::primal), 0.01),
                 std::invalid_argument);
}

class RandomDecodes : public ::testing::TestWithParam<std::tuple<int, double>> {};

TEST_P(RandomDecodes, correction_clears_syndrome_and_matching_is_optimal) {
    auto [d, p_bond] = GetParam();
    LatticeGeometry g = build_lattice(d);
    int decoded = 0;
    for (uint64_t t = 0; t < 60; t++) {
        for (Lattice k : kLattices) {
            for (Scheme scheme : {Scheme::non_adaptive, Scheme::adaptive}) {
                NoiseParams p{p_bond, 0.04, 17, t};
                auto inst = make_instance(g, scheme, p, k);
                if (!inst) continue;
                const auto &part = inst->damage.partition(k);
                LatticeDecoder dec(g, part, inst->damage.removed.of(k), p.p_comp);
                auto res = dec.decode(inst->errors.flipped, inst->surface);

                std::vector<uint8_t> residual = inst->errors.flipped;
                for (uint32_t f : res.correction) {
                    ASSERT_FALSE(inst->damage.removed.of(k)[f]);
                    residual[f] ^= 1;
                }
                ASSERT_TRUE(extract_syndrome(g, part, residual).empty());

                // Optimal weight from all-pairs distances and the reduced problem.
                const size_t n = res.flagged.size();
                if (n == 0) continue;
                decoded++;
                WeightMatrix reduced(n + n % 2);
                std::vector<int64_t> to_boundary(n);
                for (size_t i = 0; i < n; i++) to_boundary[i] = dec.boundary_distance(res.flagged[i]);
                for (size_t i = 0; i < n; i++) {
                    auto dist = plain_dijkstra(dec.graph(), res.flagged[i]);
                    for (size_t j = i + 1; j < n; j++) {
                        reduced.set(i, j, std::min(dist[res.flagged[j]], to_boundary[i] + to_boundary[j]));
                    }
                    if (n % 2) reduced.set(i, n, to_boundary[i]);
                }
                ASSERT_EQ(int64_t(min_weight_perfect_matching(reduced).weight), res.matching_weight);
                ASSERT_EQ(res.success, decode_lattice(g, part, inst->damage.removed.of(k), inst->errors.flipped,
                                                      inst->surface, p.p_comp));
            }
        }
    }
    EXPECT_GT(decoded, 0);
}

TEST_P(RandomDecodes, verdict_is_invariant_under_surface_deformation) {
    auto [d, p_bond] = GetParam();
    LatticeGeometry g = build_lattice(d);
    for (uint64_t t = 0; t < 40; t++) {
        for (Lattice k : kLattices) {
            NoiseParams p{p_bond, 0.05, 23, t};
            auto inst = make_instance(g, Scheme::adaptive, p, k);
            if (!inst) continue;
            const auto &part = inst->damage.partition(k);
            LatticeDecoder dec(g, part, inst->damage.removed.of(k), p.p_comp);
            bool verdict = dec.decode(inst->errors.flipped, inst->surface).success;
            CorrelationSurface moved = inst->surface;
            std::mt19937_64 rng(t);
            for (uint32_t grp = 0; grp < part.group_count; grp++) {
                if (!part.is_terminal_group(grp) && rng() % 2) deform_surface(moved, g, part, grp);
            }
            ASSERT_EQ(dec.decode(inst->errors.flipped, moved).success, verdict);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(
    Sizes, RandomDecodes,
    ::testing::Values(std::make_tuple(3, 0.0), std::make_tuple(5, 0.0), std::make_tuple(5, 0.04),
                      std::make_tuple(7, 0.02)));

TEST(Decoder, boundary_matching_agrees_with_twin_enumeration) {
    std::mt19937_64 rng(5);
    for (int it = 0; it < 500; it++) {
        size_t n = 1 + rng() % 5;
        WeightMatrix pair(n);
        std::vector<int64_t> to_boundary(n);
        for (size_t i = 0; i < n; i++) {
            to_boundary[i] = 1 + int64_t(rng() % 20);
            for (size_t j = i + 1; j < n; j++) pair.set(i, j, 1 + int64_t(rng() % 30));
        }
        auto matched = match_with_boundary(pair, to_boundary);
        std::vector<int> seen(n, 0);
        int64_t cost = 0;
        for (const auto &mp : matched) {
            seen[mp.first]++;
            if (mp.second == kNoNode) {
                cost += to_boundary[mp.first];
            } else {
                seen[mp.second]++;
                cost += pair(mp.first, mp.second);
            }
        }
        for (int s : seen) ASSERT_EQ(s, 1);
        ASSERT_EQ(cost, verification::exhaustive_boundary_matching_weight(pair, to_boundary));
    }
}
