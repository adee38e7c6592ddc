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
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tcsbond/lattice.hpp"
#include "tcsbond/rng.hpp"

namespace tcsbond {

/// How a failed bond is mapped onto qubits.
///
/// non_adaptive: both endpoints are treated as lost.
/// adaptive: one endpoint, picked by a fair coin, is measured in Z and then
/// treated as lost; nothing happens if an endpoint was already removed.
enum class Scheme : uint8_t { non_adaptive, adaptive };

inline const char *to_string(Scheme s) {
    return s == Scheme::non_adaptive ? "non-adaptive" : "adaptive";
}

inline std::optional<Scheme> parse_scheme(std::string_view text) {
    if (text == "non-adaptive") return Scheme::non_adaptive;
    if (text == "adaptive") return Scheme::adaptive;
    return std::nullopt;
}

struct NoiseParams {
    double p_bond = 0.0;
    double p_comp = 0.0;
    uint64_t seed = 0;
    uint64_t trial_index = 0;

    void validate() const {
        auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!ok(p_bond) || !ok(p_comp)) {
            throw std::invalid_argument("probabilities must lie in [0, 1]");
        }
    }

    TrialRng rng(Stream stream) const {
        return TrialRng(seed, trial_index, stream);
    }
};

/// Each unprotected bond fails independently with probability p_bond.
/// Returns failed bond ids in increasing order.
inline std::vector<uint32_t> sample_bond_failures(const LatticeGeometry &g, const NoiseParams &params) {
    std::vector<uint32_t> failed;
    if (params.p_bond <= 0.0) {
        return failed;
    }
    TrialRng rng = params.rng(Stream::bond_failures);
    for (uint32_t b = 0; b < g.bonds().size(); b++) {
        if (g.bond_protected(b)) {
            continue;
        }
        if (rng.bernoulli(params.p_bond)) {
            failed.push_back(b);
        }
    }
    return failed;
}

/// Face qubits excluded from the checks of each lattice, indexed by face.
struct RemovedQubits {
    std::array<std::vector<uint8_t>, 2> faces;

    explicit RemovedQubits(const LatticeGeometry &g) {
        for (Lattice k : kLattices) {
            faces[size_t(k)].assign(g.sublattice(k).face_count(), 0);
        }
    }

    const std::vector<uint8_t> &of(Lattice k) const {
        return faces[size_t(k)];
    }

    bool site_removed(const LatticeGeometry &g, uint32_t site) const {
        return faces[size_t(g.site_lattice(site))][g.site_face(site)] != 0;
    }

    void remove_site(const LatticeGeometry &g, uint32_t site) {
        faces[size_t(g.site_lattice(site))][g.site_face(site)] = 1;
    }

    size_t count(Lattice k) const {
        const auto &v = faces[size_t(k)];
        return size_t(std::count(v.begin(), v.end(), uint8_t{1}));
    }
};

inline RemovedQubits map_failures(
    const LatticeGeometry &g, std::span<const uint32_t> failed, Scheme scheme, const NoiseParams &params) {
    RemovedQubits removed(g);
    if (scheme == Scheme::non_adaptive) {
        for (uint32_t b : failed) {
            removed.remove_site(g, g.bonds()[b].primal);
            removed.remove_site(g, g.bonds()[b].dual);
        }
        return removed;
    }

    // Canonical order keeps the "already measured in Z" rule reproducible.
    std::vector<uint32_t> order(failed.begin(), failed.end());
    std::sort(order.begin(), order.end());
    TrialRng rng = params.rng(Stream::adaptive_choice);
    for (uint32_t b : order) {
        const Bond &bond = g.bonds()[b];
        if (removed.site_removed(g, bond.primal) || removed.site_removed(g, bond.dual)) {
            continue;
        }
        removed.remove_site(g, rng.coin() ? bond.primal : bond.dual);
    }
    return removed;
}

/// Grouping of check nodes (cubes and the two terminals) into superchecks.
///
/// Nodes joined by a chain of removed shared faces share a group. Group ids
/// are numbered in order of their smallest node. If both terminals land in
/// the same group the damage percolates.
struct SupercheckPartition {
    Lattice lattice = Lattice::primal;
    std::vector<uint32_t> group_of;
    uint32_t group_count = 0;
    uint32_t group_a = 0;
    uint32_t group_b = 0;

    bool percolated() const {
        return group_a == group_b;
    }
    bool is_terminal_group(uint32_t group) const {
        return group == group_a || group == group_b;
    }
    std::vector<std::vector<uint32_t>> members() const {
        std::vector<std::vector<uint32_t>> out(group_count);
        for (uint32_t n = 0; n < group_of.size(); n++) {
            out[group_of[n]].push_back(n);
        }
        return out;
    }
};

namespace internal {

class DisjointSets {
   public:
    explicit DisjointSets(size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), uint32_t{0});
    }
    uint32_t find(uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(uint32_t a, uint32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent_[std::max(a, b)] = std::min(a, b);
        }
    }

   private:
    std::vector<uint32_t> parent_;
};

}  // namespace internal

inline SupercheckPartition form_superchecks(
    const LatticeGeometry &g, const std::vector<uint8_t> &removed_faces, Lattice lattice) {
    const Sublattice &sub = g.sublattice(lattice);
    internal::DisjointSets sets(sub.node_count());
    for (uint32_t f = 0; f < sub.face_count(); f++) {
        if (!removed_faces[f]) {
            continue;
        }
        const auto &ends = sub.face_nodes[f];
        if (ends[1] == kNoNode) {
            throw std::logic_error("removed face on a closed boundary cannot be absorbed into a supercheck");
        }
        sets.unite(ends[0], ends[1]);
    }

    SupercheckPartition part;
    part.lattice = lattice;
    part.group_of.resize(sub.node_count());
    std::vector<uint32_t> id_of_root(sub.node_count(), kNoNode);
    for (uint32_t n = 0; n < sub.node_count(); n++) {
        uint32_t root = sets.find(n);
        if (id_of_root[root] == kNoNode) {
            id_of_root[root] = part.group_count++;
        }
        part.group_of[n] = id_of_root[root];
    }
    part.group_a = part.group_of[sub.terminal_a()];
    part.group_b = part.group_of[sub.terminal_b()];
    return part;
}

/// Faces measured by a supercheck: every face of its member cubes except
/// those shared between two members. Sorted.
inline std::vector<uint32_t> supercheck_faces(
    const LatticeGeometry &g, const SupercheckPartition &part, uint32_t group) {
    const Sublattice &sub = g.sublattice(part.lattice);
    std::vector<uint32_t> out;
    for (uint32_t n = 0; n < sub.node_count(); n++) {
        if (part.group_of[n] != group) {
            continue;
        }
        for (uint32_t f : sub.node_faces[n]) {
            uint32_t other = sub.across(f, n);
            if (other == kNoNode || part.group_of[other] != group) {
                out.push_back(f);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Set of face qubits whose joint X parity carries one lattice's logical
/// information. Stored as a per-face membership mask.
struct CorrelationSurface {
    Lattice lattice = Lattice::primal;
    std::vector<uint8_t> contains;

    std::vector<uint32_t> faces() const {
        std::vector<uint32_t> out;
        for (uint32_t f = 0; f < contains.size(); f++) {
            if (contains[f]) out.push_back(f);
        }
        return out;
    }
    size_t size() const {
        return size_t(std::count(contains.begin(), contains.end(), uint8_t{1}));
    }
};

/// Cut around the terminal-A supercheck. Returns nullopt when the removed
/// faces connect both terminals (a percolation error).
inline std::optional<CorrelationSurface> build_correlation_surface(
    const LatticeGeometry &g,
    const SupercheckPartition &part,
    const std::vector<uint8_t> &removed_faces,
    Lattice lattice) {
    if (part.percolated()) {
        return std::nullopt;
    }
    const Sublattice &sub = g.sublattice(lattice);
    CorrelationSurface surface{lattice, std::vector<uint8_t>(sub.face_count(), 0)};
    for (uint32_t f = 0; f < sub.face_count(); f++) {
        const auto &ends = sub.face_nodes[f];
        if (ends[1] == kNoNode) {
            continue;
        }
        bool in_a = part.group_of[ends[0]] == part.group_a;
        bool in_b = part.group_of[ends[1]] == part.group_a;
        if (in_a != in_b) {
            if (removed_faces[f]) {
                throw std::logic_error("cut crosses a removed face; partition and removal set disagree");
            }
            surface.contains[f] = 1;
        }
    }
    return surface;
}

/// Multiplies the surface by the check (or supercheck) of `group`.
inline void deform_surface(
    CorrelationSurface &surface, const LatticeGeometry &g, const SupercheckPartition &part, uint32_t group) {
    if (part.is_terminal_group(group)) {
        throw std::invalid_argument("terminal groups are not stabilizers");
    }
    for (uint32_t f : supercheck_faces(g, part, group)) {
        surface.contains[f] ^= 1;
    }
}

/// Everything a trial learns from its bond-failure sample.
struct DamageReport {
    std::vector<uint32_t> failed_bonds;
    RemovedQubits removed;
    std::array<SupercheckPartition, 2> partitions;

    const SupercheckPartition &partition(Lattice k) const {
        return partitions[size_t(k)];
    }
    bool percolation(Lattice k) const {
        return partitions[size_t(k)].percolated();
    }
    bool any_percolation() const {
        return percolation(Lattice::primal) || percolation(Lattice::dual);
    }
};

inline DamageReport assess_damage(const LatticeGeometry &g, Scheme scheme, const NoiseParams &params) {
    auto failed = sample_bond_failures(g, params);
    RemovedQubits removed = map_failures(g, failed, scheme, params);
    std::array<SupercheckPartition, 2> parts{
        form_superchecks(g, removed.of(Lattice::primal), Lattice::primal),
        form_superchecks(g, removed.of(Lattice::dual), Lattice::dual),
    };
    return DamageReport{std::move(failed), std::move(removed), std::move(parts)};
}

}  // namespace tcsbond
