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

#include <set>

#include "tcsbond/rng.hpp"

using namespace tcsbond;

TEST(Philox, known_answer_vectors) {
    using C = Philox4x32::Counter;
    EXPECT_EQ(Philox4x32::block({0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(
        Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
        (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(
        Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
        (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(TrialRng, same_coordinates_same_sequence) {
    TrialRng a(42, 7, Stream::bond_failures);
    TrialRng b(42, 7, Stream::bond_failures);
    for (int i = 0; i < 100; i++) {
        ASSERT_EQ(a(), b());
    }
}

TEST(TrialRng, coordinates_separate_streams) {
    std::set<uint64_t> firsts;
    for (uint64_t seed : {0u, 1u}) {
        for (uint64_t trial : {0u, 1u, 1u << 20}) {
            for (Stream s : {Stream::bond_failures, Stream::adaptive_choice, Stream::primal_measurement,
                             Stream::dual_measurement, Stream::bootstrap}) {
                firsts.insert(TrialRng(seed, trial, s)());
            }
        }
    }
    EXPECT_EQ(firsts.size(), 30u);
    // High bits of the trial index matter.
    EXPECT_NE(TrialRng(0, 1, Stream::bond_failures)(), TrialRng(0, (uint64_t(1) << 32) | 1, Stream::bond_failures)());
}

TEST(TrialRng, uniform_and_bernoulli) {
    TrialRng rng(3, 0, Stream::primal_measurement);
    double sum = 0.0;
    int hits = 0;
    const int n = 200000;
    for (int i = 0; i < n; i++) {
        double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        hits += rng.bernoulli(0.25);
    }
    EXPECT_NEAR(sum / n, 0.5, 0.005);
    EXPECT_NEAR(double(hits) / n, 0.25, 0.005);
    EXPECT_FALSE(rng.bernoulli(0.0));
    EXPECT_TRUE(rng.bernoulli(1.0));
}
