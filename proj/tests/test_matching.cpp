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

#include <random>

#include "tcsbond/matching.hpp"
#include "tcsbond/oracle.hpp"

using namespace tcsbond;

namespace {

int64_t cost_of(const PerfectMatching &m, const WeightMatrix &w) {
    int64_t total = 0;
    for (auto [i, j] : m.pairs) total += w(i, j);
    return total;
}

void expect_perfect(const PerfectMatching &m, size_t n) {
    ASSERT_EQ(m.mate.size(), n);
    ASSERT_EQ(m.pairs.size(), n / 2);
    for (size_t i = 0; i < n; i++) {
        ASSERT_LT(m.mate[i], n);
        ASSERT_NE(m.mate[i], i);
        ASSERT_EQ(m.mate[m.mate[i]], i);
    }
}

}  // namespace

TEST(Matching, two_nodes) {
    WeightMatrix w(2);
    w.set(0, 1, 7);
    auto m = min_weight_perfect_matching(w);
    expect_perfect(m, 2);
    EXPECT_EQ(m.weight, 7.0);
}

TEST(Matching, four_node_example) {
    // a=0, b=1, c=2, d=3. The three perfect matchings cost 2, 6 and 20.
    WeightMatrix w(4);
    w.set(0, 1, 1);
    w.set(2, 3, 1);
    w.set(0, 2, 3);
    w.set(1, 3, 3);
    w.set(0, 3, 10);
    w.set(1, 2, 10);
    auto m = min_weight_perfect_matching(w);
    EXPECT_EQ(m.weight, 2.0);
    EXPECT_EQ(m.pairs, (std::vector<std::pair<uint32_t, uint32_t>>{{0, 1}, {2, 3}}));
    EXPECT_EQ(verification::exhaustive_mwpm(w).weight, 2.0);
}

TEST(Matching, empty_and_odd) {
    EXPECT_EQ(min_weight_perfect_matching(WeightMatrix(0)).pairs.size(), 0u);
    EXPECT_THROW(min_weight_perfect_matching(WeightMatrix(3)), std::invalid_argument);
}

TEST(Matching, agrees_with_enumeration_on_random_instances) {
    std::mt19937_64 rng(2024);
    for (int it = 0; it < 2000; it++) {
        size_t n = 2 * (1 + rng() % 5);
        int64_t range = it % 4 == 0 ? 3 : (it % 4 == 1 ? 1000000000 : 100);
        WeightMatrix w(n);
        for (size_t i = 0; i < n; i++) {
            for (size_t j = i + 1; j < n; j++) w.set(i, j, int64_t(rng() % uint64_t(range)) - (it % 7 == 0 ? 50 : 0));
        }
        auto m = min_weight_perfect_matching(w);
        expect_perfect(m, n);
        ASSERT_EQ(cost_of(m, w), int64_t(verification::exhaustive_mwpm(w).weight)) << "instance " << it;
        ASSERT_EQ(int64_t(m.weight), cost_of(m, w));
    }
}

TEST(Matching, geometric_instances_agree_with_enumeration) {
    // Points on a grid with Manhattan distances produce many ties.
    std::mt19937_64 rng(7);
    for (int it = 0; it < 300; it++) {
        size_t n = 2 * (2 + rng() % 4);
        std::vector<std::pair<int, int>> pts(n);
        for (auto &p : pts) p = {int(rng() % 5), int(rng() % 5)};
        WeightMatrix w(n);
        for (size_t i = 0; i < n; i++) {
            for (size_t j = i + 1; j < n; j++) {
                w.set(i, j, std::abs(pts[i].first - pts[j].first) + std::abs(pts[i].second - pts[j].second));
            }
        }
        ASSERT_EQ(cost_of(min_weight_perfect_matching(w), w), int64_t(verification::exhaustive_mwpm(w).weight));
    }
}

TEST(Matching, plain_start_and_warm_start_agree) {
    std::mt19937_64 rng(99);
    for (int it = 0; it < 200; it++) {
        size_t n = 2 * (5 + rng() % 20);
        WeightMatrix w(n);
        std::vector<internal::WeightedEdge> edges;
        int64_t top = 0;
        for (size_t i = 0; i < n; i++) {
            for (size_t j = i + 1; j < n; j++) {
                w.set(i, j, int64_t(rng() % 50));
                top = std::max(top, w(i, j));
            }
        }
        for (size_t i = 0; i < n; i++) {
            for (size_t j = i + 1; j < n; j++) edges.push_back({int(i), int(j), top + 1 - w(i, j)});
        }
        internal::BlossomMatcher plain(int(n), edges, true, false);
        auto cold = internal::to_perfect_matching(plain.run());
        ASSERT_EQ(cost_of(cold, w), cost_of(min_weight_perfect_matching(w), w));
    }
}

TEST(Matching, double_weights) {
    std::vector<double> w = {0, 0.5, 2.25, 1.0, 0.5, 0, 1.0, 2.5, 2.25, 1.0, 0, 0.75, 1.0, 2.5, 0.75, 0};
    auto m = min_weight_perfect_matching(std::span<const double>(w), 4);
    EXPECT_EQ(m.pairs, (std::vector<std::pair<uint32_t, uint32_t>>{{0, 1}, {2, 3}}));
    EXPECT_NEAR(m.weight, 1.25, 1e-12);
}

TEST(Matching, warm_start_requires_cardinality_mode) {
    EXPECT_THROW(internal::BlossomMatcher(2, {{0, 1, 2}}, false, true), std::invalid_argument);
}
