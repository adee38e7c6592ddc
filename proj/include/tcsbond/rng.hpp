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
#include <cstdint>
#include <limits>

namespace tcsbond {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Every random draw of a trial is a pure function of (seed, trial index,
/// stream id, position), so results do not depend on how trials are spread
/// across worker threads.
class Philox4x32 {
   public:
    using Counter = std::array<uint32_t, 4>;
    using Key = std::array<uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) {
        for (int r = 0; r < 10; r++) {
            if (r > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            uint64_t p0 = uint64_t{kM0} * ctr[0];
            uint64_t p1 = uint64_t{kM1} * ctr[2];
            ctr = {
                uint32_t(p1 >> 32) ^ ctr[1] ^ key[0],
                uint32_t(p1),
                uint32_t(p0 >> 32) ^ ctr[3] ^ key[1],
                uint32_t(p0),
            };
        }
        return ctr;
    }

   private:
    static constexpr uint32_t kM0 = 0xD2511F53;
    static constexpr uint32_t kM1 = 0xCD9E8D57;
    static constexpr uint32_t kW0 = 0x9E3779B9;
    static constexpr uint32_t kW1 = 0xBB67AE85;
};

/// Independent sub-streams of one trial.
enum class Stream : uint32_t {
    bond_failures = 0,
    adaptive_choice = 1,
    primal_measurement = 2,
    dual_measurement = 3,
    bootstrap = 4,
};

/// A UniformRandomBitGenerator over one (seed, trial, stream) triple.
///
/// Counter layout: word 0 is the block position, words 1-2 the trial index,
/// word 3 the stream id. The 64-bit seed is the key.
class TrialRng {
   public:
    using result_type = uint64_t;

    TrialRng(uint64_t seed, uint64_t trial_index, Stream stream)
        : key_{uint32_t(seed), uint32_t(seed >> 32)},
          trial_lo_(uint32_t(trial_index)),
          trial_hi_(uint32_t(trial_index >> 32)),
          stream_(static_cast<uint32_t>(stream)) {
    }

    static constexpr result_type min() {
        return 0;
    }
    static constexpr result_type max() {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() {
        if (used_ == 2) {
            refill();
        }
        uint64_t v = uint64_t{buffer_[2 * used_]} << 32 | buffer_[2 * used_ + 1];
        used_++;
        return v;
    }

    /// Uniform double in [0, 1) with 53 bits of resolution.
    double uniform() {
        return double((*this)() >> 11) * 0x1.0p-53;
    }

    /// True with probability p. p <= 0 never fires; p >= 1 always fires.
    bool bernoulli(double p) {
        return uniform() < p;
    }

    bool coin() {
        return ((*this)() >> 63) != 0;
    }

   private:
    void refill() {
        buffer_ = Philox4x32::block({position_, trial_lo_, trial_hi_, stream_}, key_);
        position_++;
        used_ = 0;
    }

    Philox4x32::Key key_;
    uint32_t trial_lo_;
    uint32_t trial_hi_;
    uint32_t stream_;
    uint32_t position_ = 0;
    Philox4x32::Counter buffer_{};
    int used_ = 2;
};

}  // namespace tcsbond
