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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <new>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

#include "tcsbond/damage.hpp"
#include "tcsbond/decoder.hpp"
#include "tcsbond/lattice.hpp"

namespace tcsbond {

enum class FailureClass : uint8_t { none, logical_primal, logical_dual, percolation };

inline const char *to_string(FailureClass c) {
    switch (c) {
        case FailureClass::none:
            return "none";
        case FailureClass::logical_primal:
            return "logical_primal";
        case FailureClass::logical_dual:
            return "logical_dual";
        case FailureClass::percolation:
            return "percolation";
    }
    return "?";
}

struct TrialOutcome {
    bool success = true;
    FailureClass failure_class = FailureClass::none;

    friend bool operator==(const TrialOutcome &, const TrialOutcome &) = default;
};

/// One full trial: sample bond failures, form superchecks and correlation
/// surfaces on both lattices, then sample measurement errors and decode each
/// lattice. Percolation on either lattice is reported before decoding.
inline TrialOutcome run_trial(const LatticeGeometry &g, Scheme scheme, const NoiseParams &params) {
    DamageReport damage = assess_damage(g, scheme, params);
    if (damage.any_percolation()) {
        return {false, FailureClass::percolation};
    }
    for (Lattice lattice : kLattices) {
        const auto &part = damage.partition(lattice);
        const auto &removed = damage.removed.of(lattice);
        auto surface = build_correlation_surface(g, part, removed, lattice);
        MeasurementErrors errors = sample_measurement_errors(g, removed, lattice, params);
        if (std::none_of(errors.flipped.begin(), errors.flipped.end(), [](uint8_t b) { return b != 0; })) {
            continue;
        }
        LatticeDecoder decoder(g, part, removed, params.p_comp);
        if (!decoder.decode(errors.flipped, *surface).success) {
            return {false, lattice == Lattice::primal ? FailureClass::logical_primal : FailureClass::logical_dual};
        }
    }
    return {};
}

struct Interval {
    double low;
    double high;
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(uint64_t successes, uint64_t trials, double z = 1.959963984540054) {
    if (trials == 0) {
        return {0.0, 1.0};
    }
    double n = double(trials);
    double p = double(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    // The endpoints are exact at 0 and n successes; the formula rounds.
    double low = successes == 0 ? 0.0 : std::max(0.0, center - half);
    double high = successes == trials ? 1.0 : std::min(1.0, center + half);
    return {low, high};
}

/// Grid of simulation points. Every point uses trial indices 0..trials-1
/// under the same master seed.
struct SweepSpec {
    Scheme scheme = Scheme::non_adaptive;
    std::vector<int> distances;
    std::vector<double> p_bonds;
    std::vector<double> p_comps;
    uint64_t trials = 1000;
    uint64_t seed = 0;
    unsigned workers = 1;
    bool percolation_only = false;  // skip measurement errors and decoding

    void validate() const {
        if (trials < 1) {
            throw std::invalid_argument("trials must be at least 1");
        }
        if (workers < 1) {
            throw std::invalid_argument("workers must be at least 1");
        }
        if (distances.empty() || p_bonds.empty() || p_comps.empty()) {
            throw std::invalid_argument("sweep grid is empty");
        }
        for (int d : distances) {
            if (d < 2) throw std::invalid_argument("code distance must be at least 2");
        }
        for (const auto *list : {&p_bonds, &p_comps}) {
            for (double p : *list) {
                if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probabilities must lie in [0, 1]");
            }
        }
    }
};

struct PointEstimate {
    Scheme scheme = Scheme::non_adaptive;
    int d = 0;
    double p_bond = 0.0;
    double p_comp = 0.0;
    uint64_t trials = 0;
    uint64_t failures = 0;
    uint64_t percolation_failures = 0;
    double rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    uint64_t seed = 0;

    friend bool operator==(const PointEstimate &, const PointEstimate &) = default;
};

inline PointEstimate make_point(
    Scheme scheme, int d, double p_bond, double p_comp, uint64_t trials, uint64_t failures, uint64_t percolation,
    uint64_t seed) {
    Interval ci = wilson_interval(failures, trials);
    return {scheme, d, p_bond, p_comp, trials, failures, percolation,
            trials ? double(failures) / double(trials) : 0.0, ci.low, ci.high, seed};
}

/// Raised when a batch cannot finish; carries the points completed so far.
class BatchError : public std::runtime_error {
   public:
    BatchError(const std::string &what, std::vector<PointEstimate> partial)
        : std::runtime_error(what), partial_(std::move(partial)) {
    }
    const std::vector<PointEstimate> &partial() const {
        return partial_;
    }

   private:
    std::vector<PointEstimate> partial_;
};

struct Tally {
    uint64_t failures = 0;
    uint64_t percolation = 0;
};

/// Runs trials [first, last) of one parameter point on `workers` threads.
/// Counts are summed, so the result does not depend on the split.
inline Tally run_trials(
    const LatticeGeometry &g,
    Scheme scheme,
    NoiseParams base,
    uint64_t first,
    uint64_t last,
    unsigned workers,
    bool percolation_only = false) {
    std::atomic<uint64_t> next{first};
    std::atomic<uint64_t> failures{0};
    std::atomic<uint64_t> percolation{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    constexpr uint64_t kChunk = 32;

    auto work = [&]() {
        try {
            while (true) {
                uint64_t begin = next.fetch_add(kChunk);
                if (begin >= last) {
                    break;
                }
                uint64_t end = std::min(last, begin + kChunk);
                uint64_t f = 0;
                uint64_t perc = 0;
                for (uint64_t t = begin; t < end; t++) {
                    NoiseParams params = base;
                    params.trial_index = t;
                    if (percolation_only) {
                        if (assess_damage(g, scheme, params).any_percolation()) {
                            f++;
                            perc++;
                        }
                        continue;
                    }
                    TrialOutcome out = run_trial(g, scheme, params);
                    f += !out.success;
                    perc += out.failure_class == FailureClass::percolation;
                }
                failures += f;
                percolation += perc;
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            next = last;
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; w++) {
            pool.emplace_back(work);
        }
        for (auto &t : pool) {
            t.join();
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
    return {failures.load(), percolation.load()};
}

/// Estimates the logical error rate at every grid point. Points are ordered
/// by distance, then p_bond, then p_comp. `on_point` is called as each point
/// completes.
inline std::vector<PointEstimate> run_batch(
    const SweepSpec &spec, const std::function<void(const PointEstimate &)> &on_point = {}) {
    spec.validate();
    std::vector<PointEstimate> out;
    try {
        for (int d : spec.distances) {
            LatticeGeometry g = build_lattice(d);
            for (double p_bond : spec.p_bonds) {
                for (double p_comp : spec.p_comps) {
                    NoiseParams base{p_bond, spec.percolation_only ? 0.0 : p_comp, spec.seed, 0};
                    Tally t = run_trials(g, spec.scheme, base, 0, spec.trials, spec.workers, spec.percolation_only);
                    out.push_back(
                        make_point(spec.scheme, d, p_bond, p_comp, spec.trials, t.failures, t.percolation, spec.seed));
                    if (on_point) {
                        on_point(out.back());
                    }
                }
            }
        }
    } catch (const std::bad_alloc &) {
        throw BatchError("out of memory during batch", out);
    } catch (const std::system_error &e) {
        throw BatchError(std::string("could not run worker threads: ") + e.what(), out);
    }
    return out;
}

/// Qubit-loss percolation threshold of the cubic topological cluster state.
inline constexpr double kLossPercolationThreshold = 0.249;

/// Bond failure rate at which the expected per-qubit removal probability
/// reaches the loss percolation threshold. A bulk qubit has four bonds; each
/// failed bond removes it outright (non-adaptive) or with probability 1/2
/// (adaptive).
inline double percolation_limit_analytic(Scheme scheme) {
    double per_bond = 1.0 - std::pow(1.0 - kLossPercolationThreshold, 0.25);
    return scheme == Scheme::non_adaptive ? per_bond : 2.0 * per_bond;
}

}  // namespace tcsbond
