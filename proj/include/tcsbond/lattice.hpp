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
#include <compare>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcsbond {

enum class Lattice : uint8_t { primal = 0, dual = 1 };

inline constexpr std::array<Lattice, 2> kLattices = {Lattice::primal, Lattice::dual};

inline const char *to_string(Lattice lattice) {
    return lattice == Lattice::primal ? "primal" : "dual";
}

/// Integer grid position. Qubits sit at positions with one or two odd
/// coordinates; positions with all coordinates odd are primal cube centers
/// and positions with all coordinates even are dual cube centers.
struct Site {
    int x = 0;
    int y = 0;
    int z = 0;

    friend constexpr auto operator<=>(const Site &, const Site &) = default;
};

constexpr int odd_coordinates(Site s) {
    return (s.x & 1) + (s.y & 1) + (s.z & 1);
}

constexpr bool is_qubit_site(Site s) {
    int n = odd_coordinates(s);
    return n == 1 || n == 2;
}

/// Two odd coordinates: face of a primal cube. One odd coordinate: face of
/// a dual cube (equivalently an edge of the primal lattice).
constexpr Lattice lattice_of(Site s) {
    return odd_coordinates(s) == 2 ? Lattice::primal : Lattice::dual;
}

inline std::string to_string(Site s) {
    return "(" + std::to_string(s.x) + "," + std::to_string(s.y) + "," + std::to_string(s.z) + ")";
}

/// An entangling link. Always joins one primal face qubit to one dual face
/// qubit; both are site ids of the owning LatticeGeometry.
struct Bond {
    uint32_t primal;
    uint32_t dual;
};

/// Box dimensions in unit cells.
///
/// The primal lattice is terminated on its two y faces and the dual lattice on
/// its two x faces; every other face of the box is closed for that lattice.
/// Primal distance is y_cells + 1, dual distance is x_cells + 1.
struct LatticeShape {
    int x_cells;
    int y_cells;
    int layers;

    static LatticeShape for_distance(int d) {
        return {d - 1, d - 1, 4 * d - 1};
    }
};

inline constexpr uint32_t kNoNode = UINT32_MAX;

struct Cube {
    Site center;
    Lattice lattice;
    std::vector<uint32_t> faces;  // face indices into the owning Sublattice
};

/// Check-operator view of one of the two interleaved lattices.
///
/// Nodes 0..cubes.size()-1 are cubes; the next two nodes are the virtual
/// boundary terminals A (low side) and B (high side). Each face qubit is an
/// edge between the two nodes whose checks contain it. A face contained in a
/// single cube on a closed side of the box has kNoNode as its second end.
struct Sublattice {
    Lattice kind = Lattice::primal;
    std::vector<Cube> cubes;
    std::vector<uint32_t> face_site;
    std::vector<std::array<uint32_t, 2>> face_nodes;
    std::vector<uint8_t> face_perfect;
    std::vector<std::vector<uint32_t>> node_faces;

    uint32_t terminal_a() const {
        return uint32_t(cubes.size());
    }
    uint32_t terminal_b() const {
        return uint32_t(cubes.size()) + 1;
    }
    uint32_t node_count() const {
        return uint32_t(cubes.size()) + 2;
    }
    uint32_t face_count() const {
        return uint32_t(face_site.size());
    }
    bool is_terminal(uint32_t node) const {
        return node == terminal_a() || node == terminal_b();
    }
    /// The node on the other side of `face` from `node`, or kNoNode.
    uint32_t across(uint32_t face, uint32_t node) const {
        const auto &ends = face_nodes[face];
        return ends[0] == node ? ends[1] : ends[0];
    }
};

/// Immutable geometry of a planar topological cluster state.
///
/// Coordinates span x in [1, 2*x_cells + 1], y in [0, 2*y_cells] and
/// z in [0, layers - 1]. Bonds between qubits that both lie in the first two
/// or both lie in the last two layers are protected from failure. Primal face
/// qubits in the first and last layer and dual face qubits in the second and
/// penultimate layer are measured perfectly.
class LatticeGeometry {
   public:
    static LatticeGeometry build(LatticeShape shape, int distance) {
        if (shape.x_cells < 1 || shape.y_cells < 1) {
            throw std::invalid_argument("lattice needs at least one cell in x and y");
        }
        if (shape.layers < 5 || shape.layers % 2 == 0) {
            throw std::invalid_argument("layer count must be odd and at least 5");
        }
        LatticeGeometry g;
        g.shape_ = shape;
        g.distance_ = distance;
        g.lo_ = {1, 0, 0};
        g.hi_ = {2 * shape.x_cells + 1, 2 * shape.y_cells, shape.layers - 1};
        g.nx_ = g.hi_.x - g.lo_.x + 1;
        g.ny_ = g.hi_.y - g.lo_.y + 1;
        g.nz_ = g.hi_.z - g.lo_.z + 1;
        g.index_.assign(size_t(g.nx_) * g.ny_ * g.nz_, kNoNode);

        for (int z = g.lo_.z; z <= g.hi_.z; z++) {
            for (int y = g.lo_.y; y <= g.hi_.y; y++) {
                for (int x = g.lo_.x; x <= g.hi_.x; x++) {
                    Site s{x, y, z};
                    if (!is_qubit_site(s)) {
                        continue;
                    }
                    g.index_[g.linear(s)] = uint32_t(g.sites_.size());
                    g.sites_.push_back(s);
                }
            }
        }

        g.site_bonds_.resize(g.sites_.size());
        for (uint32_t id = 0; id < g.sites_.size(); id++) {
            Site s = g.sites_[id];
            if (lattice_of(s) != Lattice::primal) {
                continue;
            }
            for (Site n : axis_neighbors(s)) {
                auto other = g.find_site(n);
                if (!other) {
                    continue;
                }
                uint32_t b = uint32_t(g.bonds_.size());
                g.bonds_.push_back({id, *other});
                g.bond_protected_.push_back(g.in_protected_layers(s, n));
                g.site_bonds_[id].push_back(b);
                g.site_bonds_[*other].push_back(b);
            }
        }

        g.site_face_.assign(g.sites_.size(), kNoNode);
        for (Lattice kind : kLattices) {
            Sublattice &sub = g.subs_[size_t(kind)];
            sub.kind = kind;
            for (uint32_t id = 0; id < g.sites_.size(); id++) {
                if (lattice_of(g.sites_[id]) == kind) {
                    g.site_face_[id] = sub.face_count();
                    sub.face_site.push_back(id);
                    sub.face_perfect.push_back(g.measured_perfectly(g.sites_[id]));
                }
            }
            g.build_cubes(sub);
        }
        return g;
    }

    int distance() const {
        return distance_;
    }
    const LatticeShape &shape() const {
        return shape_;
    }
    Site lower_corner() const {
        return lo_;
    }
    Site upper_corner() const {
        return hi_;
    }
    int layers() const {
        return shape_.layers;
    }

    std::span<const Site> sites() const {
        return sites_;
    }
    std::span<const Bond> bonds() const {
        return bonds_;
    }
    bool bond_protected(uint32_t bond) const {
        return bond_protected_[bond] != 0;
    }
    std::span<const uint32_t> site_bonds(uint32_t site) const {
        return site_bonds_[site];
    }
    Lattice site_lattice(uint32_t site) const {
        return lattice_of(sites_[site]);
    }
    /// Face index of `site` inside its own sublattice.
    uint32_t site_face(uint32_t site) const {
        return site_face_[site];
    }
    const Sublattice &sublattice(Lattice kind) const {
        return subs_[size_t(kind)];
    }

    bool contains(Site s) const {
        return s.x >= lo_.x && s.x <= hi_.x && s.y >= lo_.y && s.y <= hi_.y && s.z >= lo_.z && s.z <= hi_.z;
    }

    std::optional<uint32_t> find_site(Site s) const {
        if (!contains(s)) {
            return std::nullopt;
        }
        uint32_t id = index_[linear(s)];
        if (id == kNoNode) {
            return std::nullopt;
        }
        return id;
    }

    uint32_t site_id(Site s) const {
        auto id = find_site(s);
        if (!id) {
            throw std::out_of_range("no qubit at " + to_string(s));
        }
        return *id;
    }

    /// Strictly inside the box on every axis.
    bool is_bulk(uint32_t site) const {
        Site s = sites_[site];
        return s.x > lo_.x && s.x < hi_.x && s.y > lo_.y && s.y < hi_.y && s.z > lo_.z && s.z < hi_.z;
    }

    bool measured_perfectly(Site s) const {
        if (lattice_of(s) == Lattice::primal) {
            return s.z == lo_.z || s.z == hi_.z;
        }
        return s.z == lo_.z + 1 || s.z == hi_.z - 1;
    }

   private:
    LatticeGeometry() = default;

    static std::array<Site, 6> axis_neighbors(Site s) {
        return {{
            {s.x - 1, s.y, s.z},
            {s.x + 1, s.y, s.z},
            {s.x, s.y - 1, s.z},
            {s.x, s.y + 1, s.z},
            {s.x, s.y, s.z - 1},
            {s.x, s.y, s.z + 1},
        }};
    }

    size_t linear(Site s) const {
        return (size_t(s.z - lo_.z) * ny_ + size_t(s.y - lo_.y)) * nx_ + size_t(s.x - lo_.x);
    }

    bool in_protected_layers(Site a, Site b) const {
        auto front = [&](Site s) { return s.z <= lo_.z + 1; };
        auto back = [&](Site s) { return s.z >= hi_.z - 1; };
        return (front(a) && front(b)) || (back(a) && back(b));
    }

    void build_cubes(Sublattice &sub) {
        // Primal cube centers are all-odd, dual cube centers all-even.
        int parity = sub.kind == Lattice::primal ? 1 : 0;
        auto first = [&](int lo) { return (lo & 1) == parity ? lo : lo + 1; };
        std::vector<std::vector<uint32_t>> owners(sub.face_count());
        for (int z = first(lo_.z); z <= hi_.z; z += 2) {
            for (int y = first(lo_.y); y <= hi_.y; y += 2) {
                for (int x = first(lo_.x); x <= hi_.x; x += 2) {
                    Cube cube{{x, y, z}, sub.kind, {}};
                    uint32_t c = uint32_t(sub.cubes.size());
                    for (Site f : axis_neighbors(cube.center)) {
                        if (auto id = find_site(f)) {
                            uint32_t face = site_face_[*id];
                            cube.faces.push_back(face);
                            owners[face].push_back(c);
                        }
                    }
                    sub.cubes.push_back(std::move(cube));
                }
            }
        }

        sub.face_nodes.resize(sub.face_count());
        sub.node_faces.assign(sub.node_count(), {});
        for (uint32_t f = 0; f < sub.face_count(); f++) {
            const auto &own = owners[f];
            if (own.size() == 2) {
                sub.face_nodes[f] = {own[0], own[1]};
            } else if (own.size() == 1) {
                sub.face_nodes[f] = {own[0], open_side(sub, sites_[sub.face_site[f]])};
            } else {
                throw std::logic_error("face qubit without a cube at " + to_string(sites_[sub.face_site[f]]));
            }
            for (uint32_t node : sub.face_nodes[f]) {
                if (node != kNoNode) {
                    sub.node_faces[node].push_back(f);
                }
            }
        }
    }

    // A face owned by one cube sits on the box surface. It is a terminal face
    // when its normal is the lattice's terminal axis.
    uint32_t open_side(const Sublattice &sub, Site s) const {
        if (sub.kind == Lattice::primal) {
            if ((s.y & 1) == 0 && (s.x & 1) && (s.z & 1)) {
                if (s.y == lo_.y) return sub.terminal_a();
                if (s.y == hi_.y) return sub.terminal_b();
            }
        } else {
            if ((s.x & 1) && (s.y & 1) == 0 && (s.z & 1) == 0) {
                if (s.x == lo_.x) return sub.terminal_a();
                if (s.x == hi_.x) return sub.terminal_b();
            }
        }
        return kNoNode;
    }

    LatticeShape shape_{};
    int distance_ = 0;
    Site lo_{};
    Site hi_{};
    int nx_ = 0;
    int ny_ = 0;
    int nz_ = 0;
    std::vector<uint32_t> index_;
    std::vector<Site> sites_;
    std::vector<Bond> bonds_;
    std::vector<uint8_t> bond_protected_;
    std::vector<std::vector<uint32_t>> site_bonds_;
    std::vector<uint32_t> site_face_;
    std::array<Sublattice, 2> subs_;
};

/// Geometry with code distance d on both lattices and 4d - 1 layers.
inline LatticeGeometry build_lattice(int d) {
    if (d < 2) {
        throw std::invalid_argument("code distance must be at least 2, got " + std::to_string(d));
    }
    return LatticeGeometry::build(LatticeShape::for_distance(d), d);
}

/// Fewest face qubits whose flips connect the two terminals of a lattice
/// without flagging any check.
inline int code_distance(const LatticeGeometry &g, Lattice which) {
    const Sublattice &sub = g.sublattice(which);
    std::vector<int> dist(sub.node_count(), -1);
    std::deque<uint32_t> queue{sub.terminal_a()};
    dist[sub.terminal_a()] = 0;
    while (!queue.empty()) {
        uint32_t n = queue.front();
        queue.pop_front();
        if (n == sub.terminal_b()) {
            return dist[n];
        }
        for (uint32_t f : sub.node_faces[n]) {
            uint32_t m = sub.across(f, n);
            if (m != kNoNode && dist[m] < 0) {
                dist[m] = dist[n] + 1;
                queue.push_back(m);
            }
        }
    }
    throw std::logic_error(std::string("terminals of the ") + to_string(which) + " lattice are disconnected");
}

/// Bond-adjacent qubits of `s`, sorted.
inline std::vector<Site> neighbors(const LatticeGeometry &g, Site s) {
    uint32_t id = g.site_id(s);
    std::vector<Site> out;
    for (uint32_t b : g.site_bonds(id)) {
        const Bond &bond = g.bonds()[b];
        out.push_back(g.sites()[bond.primal == id ? bond.dual : bond.primal]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace tcsbond
