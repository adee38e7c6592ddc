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

#include "tcsbond/experiment.hpp"
#include "tcsbond/oracle.hpp"

using namespace tcsbond;
using namespace tcsbond::verification;

TEST(Oracle, exhaustive_two_and_four_nodes) {
    WeightMatrix two(2);
    two.set(0, 1, 5);
    EXPECT_EQ(exhaustive_mwpm(two).weight, 5.0);

    std::vector<int64_t> dense = {0, 1, 3, 10, 1, 0, 10, 3, 3, 10, 0, 1, 10, 3, 1, 0};
    auto m = exhaustive_mwpm(std::span<const int64_t>(dense), 4);
    EXPECT_EQ(m.weight, 2.0);
    EXPECT_EQ(m.pairs, (std::vector<std::pair<uint32_t, uint32_t>>{{0, 1}, {2, 3}}));
}

TEST(Oracle, exhaustive_enforces_caps) {
    EXPECT_THROW(exhaustive_mwpm(WeightMatrix(14)), std::invalid_argument);
    EXPECT_THROW(exhaustive_mwpm(WeightMatrix(3)), std::invalid_argument);
    EXPECT_NO_THROW(exhaustive_mwpm(WeightMatrix(14), OracleConfig{14, 24}));
}

TEST(Oracle, six_node_random_instances_match_main_solver) {
    for (uint64_t seed = 0; seed < 500; seed++) {
        std::mt19937_64 rng(seed);
        WeightMatrix w(6);
        for (size_t i = 0; i < 6; i++) {
            for (size_t j = i + 1; j < 6; j++) w.set(i, j, int64_t(rng() % 100));
        }
        ASSERT_EQ(exhaustive_mwpm(w).weight, min_weight_perfect_matching(w).weight) << "seed " << seed;
    }
}

TEST(Oracle, small_lattice_rate_edge_cases) {
    LatticeGeometry g = build_lattice(2);
    DamageReport clean = assess_damage(g, Scheme::non_adaptive, {0.0, 0.0, 0, 0});
    LogicalRate zero = exact_small_logical_rate(g, clean, 0.0);
    EXPECT_EQ(zero.total, 0.0);
    EXPECT_FALSE(zero.percolated);

    // Adding a syndrome-free logical chain pairs each failing flip set with
    // a passing one, so at p = 1/2 each lattice fails exactly half the time.
    LogicalRate half = exact_small_logical_rate(g, clean, 0.5);
    EXPECT_DOUBLE_EQ(half.per_lattice[0], 0.5);
    EXPECT_DOUBLE_EQ(half.per_lattice[1], 0.5);
    EXPECT_DOUBLE_EQ(half.total, 0.75);

    DamageReport broken = assess_damage(g, Scheme::non_adaptive, {1.0, 0.0, 0, 0});
    ASSERT_TRUE(broken.any_percolation());
    EXPECT_EQ(exact_small_logical_rate(g, broken, 0.1).total, 1.0);

    EXPECT_THROW(exact_small_logical_rate(build_lattice(3), assess_damage(build_lattice(3), Scheme::adaptive, {}), 0.1),
                 std::invalid_argument);
    EXPECT_THROW(exact_small_logical_rate(g, clean, 1.5), std::invalid_argument);
}

TEST(Oracle, small_lattice_rate_matches_monte_carlo) {
    LatticeGeometry g = build_lattice(2);
    DamageReport clean = assess_damage(g, Scheme::non_adaptive, {0.0, 0.0, 0, 0});
    const double p = 0.05;
    LogicalRate exact = exact_small_logical_rate(g, clean, p);
    const uint64_t n = 100000;
    Tally t = run_trials(g, Scheme::non_adaptive, {0.0, p, 12345, 0}, 0, n, 2);
    double sigma = std::sqrt(exact.total * (1 - exact.total) / double(n));
    EXPECT_LT(std::abs(double(t.failures) / double(n) - exact.total), 4 * sigma);
    EXPECT_GT(exact.total, 0.0);
    EXPECT_LT(exact.total, 1.0);
}

TEST(Oracle, matching_suite_passes_and_detects_injected_fault) {
    MatchingSuiteOptions opt;
    opt.instances = 200;
    for (const auto &c : run_matching_suite(opt)) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
    opt.inject_weight_fault = true;
    bool any_failed = false;
    for (const auto &c : run_matching_suite(opt)) any_failed = any_failed || !c.passed;
    EXPECT_TRUE(any_failed);
}
