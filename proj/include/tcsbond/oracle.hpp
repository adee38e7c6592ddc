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

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tcsbond/damage.hpp"
#include "tcsbond/decoder.hpp"
#include "tcsbond/experiment.hpp"
#include "tcsbond/lattice.hpp"
#include "tcsbond/matching.hpp"

/// Brute-force references for small instances. Slow by construction.
namespace tcsbond::verification {

struct OracleConfig {
    size_t max_nodes = 12;
    size_t max_flips = 24;
};

/// Minimum over all perfect matchings by direct enumeration.
inline PerfectMatching exhaustive_mwpm(const WeightMatrix &w, const OracleConfig &config = {}) {
    const size_t n = w.size();
    if (n % 2 != 0) {
        throw std::invalid_argument("perfect matching needs an even vertex count");
    }
    if (n > config.max_nodes) {
        throw std::invalid_argument("instance exceeds the exhaustive matching cap");
    }
    std::vector<int> mate(n, -1);
    std::vector<int> best_mate(n, -1);
    int64_t best = std::numeric_limits<int64_t>::max();
    auto rec = [&](auto &&self, int64_t acc) -> void {
        size_t i = 0;
        while (i < n && mate[i] != -1) i++;
        if (i == n) {
            if (acc < best) {
                best = acc;
                best_mate = mate;
            }
            return;
        }
        for (size_t j = i + 1; j < n; j++) {
            if (mate[j] != -1) continue;
            mate[i] = int(j);
            mate[j] = int(i);
            self(self, acc + w(i, j));
            mate[i] = mate[j] = -1;
        }
    };
    rec(rec, 0);

    PerfectMatching out;
    out.mate.assign(best_mate.begin(), best_mate.end());
    for (size_t i = 0; i < n; i++) {
        if (best_mate[i] > int(i)) out.pairs.push_back({uint32_t(i), uint32_t(best_mate[i])});
    }
    out.weight = n == 0 ? 0.0 : double(best);
    return out;
}

/// Dense row-major table overload.
inline PerfectMatching exhaustive_mwpm(std::span<const int64_t> dense, size_t n, const OracleConfig &config = {}) {
    if (dense.size() != n * n) {
        throw std::invalid_argument("distance table size mismatch");
    }
    WeightMatrix w(n);
    for (size_t i = 0; i < n; i++) {
        for (size_t j = i + 1; j < n; j++) w.set(i, j, dense[i * n + j]);
    }
    return exhaustive_mwpm(w, config);
}

/// Boundary matching by enumeration over the twin construction: each flag
/// gets a boundary twin at its boundary distance and twins pair freely.
inline int64_t exhaustive_boundary_matching_weight(
    const WeightMatrix &pair, std::span<const int64_t> to_boundary, const OracleConfig &config = {}) {
    const size_t n = pair.size();
    constexpr int64_t kForbidden = std::numeric_limits<int64_t>::max() / 16;
    WeightMatrix twin(2 * n, kForbidden);
    for (size_t i = 0; i < n; i++) {
        for (size_t j = i + 1; j < n; j++) {
            twin.set(i, j, pair(i, j));
            twin.set(n + i, n + j, 0);
        }
        twin.set(i, n + i, to_boundary[i]);
    }
    return int64_t(exhaustive_mwpm(twin, config).weight);
}

struct LogicalRate {
    bool percolated = false;
    std::array<double, 2> per_lattice{};  // indexed by Lattice
    std::array<size_t, 2> eligible{};
    double total = 0.0;
};

/// Exact logical failure probability of the full decode pipeline for fixed
/// damage: every flip set on the eligible faces of each lattice is decoded
/// and weighted by its probability. The lattices fail independently.
inline LogicalRate exact_small_logical_rate(
    const LatticeGeometry &g, const DamageReport &damage, double p_comp, const OracleConfig &config = {}) {
    if (!(p_comp >= 0.0 && p_comp <= 1.0)) {
        throw std::invalid_argument("p_comp must be in [0, 1]");
    }
    LogicalRate out;
    if (damage.any_percolation()) {
        out.percolated = true;
        out.total = 1.0;
        return out;
    }
    for (Lattice lattice : kLattices) {
        const Sublattice &sub = g.sublattice(lattice);
        const auto &removed = damage.removed.of(lattice);
        std::vector<uint32_t> eligible;
        for (uint32_t f = 0; f < sub.face_count(); f++) {
            if (!removed[f] && !sub.face_perfect[f]) eligible.push_back(f);
        }
        if (eligible.size() > config.max_flips) {
            throw std::invalid_argument("instance exceeds the exhaustive flip cap");
        }
        out.eligible[size_t(lattice)] = eligible.size();
        const auto &part = damage.partition(lattice);
        auto surface = build_correlation_surface(g, part, removed, lattice);
        LatticeDecoder decoder(g, part, removed, p_comp);

        // Failing flip sets counted by size, then weighted once.
        const size_t m = eligible.size();
        std::vector<uint64_t> failing(m + 1, 0);
        std::vector<uint8_t> flipped(sub.face_count(), 0);
        size_t size = 0;
        for (uint64_t step = 1; step < (uint64_t(1) << m); step++) {
            uint32_t bit = uint32_t(std::countr_zero(step));
            uint8_t &cell = flipped[eligible[bit]];
            cell ^= 1;
            if (cell) {
                size++;
            } else {
                size--;
            }
            if (!decoder.decode(flipped, *surface).success) failing[size]++;
        }
        double rate = 0.0;
        for (size_t k = 0; k <= m; k++) {
            if (failing[k]) {
                rate += double(failing[k]) * std::pow(p_comp, double(k)) * std::pow(1.0 - p_comp, double(m - k));
            }
        }
        out.per_lattice[size_t(lattice)] = rate;
    }
    out.total = 1.0 - (1.0 - out.per_lattice[0]) * (1.0 - out.per_lattice[1]);
    return out;
}

/// One row of a verification report.
struct Check {
    std::string suite;
    std::string name;
    bool passed = true;
    std::string detail;
};

struct MatchingSuiteOptions {
    int instances = 500;
    size_t max_nodes = 8;
    uint64_t seed = 0;
    // Test hook: perturbs one edge weight seen by the main solver.
    bool inject_weight_fault = false;
};

/// Main-path matching against enumeration, for plain and boundary instances.
inline std::vector<Check> run_matching_suite(const MatchingSuiteOptions &opt = {}) {
    std::vector<Check> checks;
    OracleConfig config{std::max<size_t>(opt.max_nodes, 8), 24};

    auto plain = [&]() {
        Check c{"matching", "perfect matching vs enumeration", true, ""};
        int bad = 0;
        for (int i = 0; i < opt.instances; i++) {
            std::mt19937_64 rng(opt.seed * 1000003u + uint64_t(i));
            size_t n = 2 * (1 + rng() % (opt.max_nodes / 2));
            int64_t range = (i % 3 == 0) ? 4 : 1000;
            WeightMatrix w(n);
            for (size_t a = 0; a < n; a++) {
                for (size_t b = a + 1; b < n; b++) w.set(a, b, int64_t(rng() % uint64_t(range)));
            }
            WeightMatrix seen = w;
            if (opt.inject_weight_fault && n >= 4) {
                size_t a = rng() % n;
                size_t b = (a + 1 + rng() % (n - 1)) % n;
                seen.set(a, b, seen(a, b) + range * int64_t(n));
            }
            PerfectMatching got = min_weight_perfect_matching(seen);
            int64_t cost = 0;
            for (auto [a, b] : got.pairs) cost += w(a, b);
            int64_t want = int64_t(exhaustive_mwpm(w, config).weight);
            if (cost != want) {
                if (bad++ < 5) {
                    c.detail += (c.detail.empty() ? "" : "; ") + std::string("instance ") + std::to_string(i) +
                                " seed " + std::to_string(opt.seed * 1000003u + uint64_t(i)) + ": " +
                                std::to_string(cost) + " vs " + std::to_string(want);
                }
            }
        }
        c.passed = bad == 0;
        c.detail = std::to_string(opt.instances - bad) + "/" + std::to_string(opt.instances) + " agree" +
                   (c.detail.empty() ? "" : " (" + c.detail + ")");
        checks.push_back(std::move(c));
    };

    auto boundary = [&]() {
        Check c{"matching", "boundary matching vs twin enumeration", true, ""};
        int bad = 0;
        for (int i = 0; i < opt.instances; i++) {
            uint64_t seed = opt.seed * 1000003u + 7777777u + uint64_t(i);
            std::mt19937_64 rng(seed);
            size_t n = 1 + rng() % (config.max_nodes / 2);
            int64_t range = (i % 3 == 0) ? 4 : 1000;
            WeightMatrix pair(n);
            std::vector<int64_t> to_boundary(n);
            for (size_t a = 0; a < n; a++) {
                to_boundary[a] = int64_t(rng() % uint64_t(range));
                for (size_t b = a + 1; b < n; b++) pair.set(a, b, int64_t(rng() % uint64_t(2 * range)));
            }
            WeightMatrix seen = pair;
            if (opt.inject_weight_fault && n >= 2) {
                seen.set(0, 1, 0);
            }
            auto matched = match_with_boundary(seen, to_boundary);
            int64_t cost = 0;
            for (const auto &mp : matched) {
                cost += mp.second == kNoNode ? to_boundary[mp.first] : pair(mp.first, mp.second);
            }
            int64_t want = exhaustive_boundary_matching_weight(pair, to_boundary, config);
            if (cost != want && bad++ < 5) {
                c.detail += (c.detail.empty() ? "" : "; ") + std::string("instance ") + std::to_string(i) + " seed " +
                            std::to_string(seed) + ": " + std::to_string(cost) + " vs " + std::to_string(want);
            }
        }
        c.passed = bad == 0;
        c.detail = std::to_string(opt.instances - bad) + "/" + std::to_string(opt.instances) + " agree" +
                   (c.detail.empty() ? "" : " (" + c.detail + ")");
        checks.push_back(std::move(c));
    };

    plain();
    boundary();
    return checks;
}

struct SmallLatticeSuiteOptions {
    std::vector<double> p_comps{0.01, 0.02, 0.05, 0.10, 0.20};
    uint64_t trials = 100000;
    uint64_t seed = 0;
    unsigned workers = 1;
    double sigmas = 4.0;
};

/// Monte Carlo on the undamaged distance-2 lattice against the exact rate.
inline std::vector<Check> run_small_lattice_suite(const SmallLatticeSuiteOptions &opt = {}) {
    std::vector<Check> checks;
    LatticeGeometry g = build_lattice(2);
    NoiseParams clean{0.0, 0.0, opt.seed, 0};
    DamageReport damage = assess_damage(g, Scheme::non_adaptive, clean);

    for (double p : opt.p_comps) {
        LogicalRate exact = exact_small_logical_rate(g, damage, p);
        Tally t = run_trials(g, Scheme::non_adaptive, {0.0, p, opt.seed, 0}, 0, opt.trials, opt.workers);
        double mc = double(t.failures) / double(opt.trials);
        double sigma = std::sqrt(std::max(exact.total * (1.0 - exact.total), 1e-12) / double(opt.trials));
        double z = std::abs(mc - exact.total) / sigma;
        char buf[160];
        std::snprintf(buf, sizeof buf, "exact %.6g, monte carlo %.6g over %llu trials, %.2f sigma, seed %llu",
                      exact.total, mc, static_cast<unsigned long long>(opt.trials), z,
                      static_cast<unsigned long long>(opt.seed));
        char name[64];
        std::snprintf(name, sizeof name, "d=2 p_comp=%.6g", p);
        checks.push_back({"small-lattice", name, z <= opt.sigmas, buf});
    }
    return checks;
}

}  // namespace tcsbond::verification
