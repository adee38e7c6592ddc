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
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tcsbond {

/// Dense symmetric matrix of integer edge weights on a complete graph.
class WeightMatrix {
   public:
    WeightMatrix() = default;
    explicit WeightMatrix(size_t n, int64_t fill = 0) : n_(n), w_(n * n, fill) {
    }

    size_t size() const {
        return n_;
    }
    int64_t operator()(size_t i, size_t j) const {
        return w_[i * n_ + j];
    }
    void set(size_t i, size_t j, int64_t w) {
        w_[i * n_ + j] = w;
        w_[j * n_ + i] = w;
    }

   private:
    size_t n_ = 0;
    std::vector<int64_t> w_;
};

struct PerfectMatching {
    std::vector<uint32_t> mate;
    std::vector<std::pair<uint32_t, uint32_t>> pairs;  // (i, j) with i < j, sorted by i
    double weight = 0.0;
};

namespace internal {

struct WeightedEdge {
    int u;
    int v;
    int64_t w;
};

// Maximum-weight general matching by Edmonds' blossom algorithm with dual
// variables, O(n^3). Follows the structure of J. van Rantwijk's reference
// implementation; all arithmetic is integral.
class BlossomMatcher {
   public:
    // With `warm_start`, vertex duals start at the heaviest incident edge
    // weight and mutually tight edges are matched greedily before the first
    // stage. Only valid with max_cardinality, and edge weights must be even
    // so that all free vertices keep duals of equal parity.
    BlossomMatcher(int n, std::vector<WeightedEdge> edges, bool max_cardinality, bool warm_start = false)
        : n_(n), edges_(std::move(edges)), max_cardinality_(max_cardinality), warm_start_(warm_start) {
        if (warm_start_ && !max_cardinality_) {
            throw std::invalid_argument("warm start requires maximum-cardinality mode");
        }
    }

    // Returns the mate of each vertex, or -1.
    std::vector<int> run() {
        const int n = n_;
        const int m = int(edges_.size());
        if (n == 0) {
            return {};
        }
        int64_t maxweight = 0;
        for (const auto &e : edges_) {
            maxweight = std::max(maxweight, e.w);
        }
        endpoint_.resize(2 * size_t(m));
        neighbend_.assign(n, {});
        for (int k = 0; k < m; k++) {
            endpoint_[2 * k] = edges_[k].u;
            endpoint_[2 * k + 1] = edges_[k].v;
            neighbend_[edges_[k].u].push_back(2 * k + 1);
            neighbend_[edges_[k].v].push_back(2 * k);
        }
        mate_.assign(n, -1);
        label_.assign(2 * n, 0);
        labelend_.assign(2 * n, -1);
        inblossom_.resize(n);
        for (int i = 0; i < n; i++) inblossom_[i] = i;
        parent_.assign(2 * n, -1);
        childs_.assign(2 * n, {});
        base_.assign(2 * n, -1);
        for (int i = 0; i < n; i++) base_[i] = i;
        endps_.assign(2 * n, {});
        bestedge_.assign(2 * n, -1);
        best_lists_.assign(2 * n, {});
        has_best_list_.assign(2 * n, 0);
        unused_.clear();
        for (int b = 2 * n - 1; b >= n; b--) unused_.push_back(b);
        dual_.assign(2 * n, 0);
        for (int i = 0; i < n; i++) dual_[i] = maxweight;
        allowedge_.assign(m, 0);
        if (warm_start_) {
            seed_tight_matching();
        }

        for (int stage = 0; stage < n; stage++) {
            std::fill(label_.begin(), label_.end(), 0);
            std::fill(bestedge_.begin(), bestedge_.end(), -1);
            for (int b = n; b < 2 * n; b++) {
                best_lists_[b].clear();
                has_best_list_[b] = 0;
            }
            std::fill(allowedge_.begin(), allowedge_.end(), 0);
            queue_.clear();

            for (int v = 0; v < n; v++) {
                if (mate_[v] == -1 && label_[inblossom_[v]] == 0) {
                    assign_label(v, 1, -1);
                }
            }

            bool augmented = false;
            while (true) {
                while (!queue_.empty() && !augmented) {
                    int v = queue_.back();
                    queue_.pop_back();
                    for (int p : neighbend_[v]) {
                        int k = p / 2;
                        int w = endpoint_[p];
                        if (inblossom_[v] == inblossom_[w]) {
                            continue;
                        }
                        int64_t kslack = 0;
                        if (!allowedge_[k]) {
                            kslack = slack(k);
                            if (kslack <= 0) {
                                allowedge_[k] = 1;
                            }
                        }
                        if (allowedge_[k]) {
                            if (label_[inblossom_[w]] == 0) {
                                assign_label(w, 2, p ^ 1);
                            } else if (label_[inblossom_[w]] == 1) {
                                int base = scan_blossom(v, w);
                                if (base >= 0) {
                                    add_blossom(base, k);
                                } else {
                                    augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if (label_[w] == 0) {
                                label_[w] = 2;
                                labelend_[w] = p ^ 1;
                            }
                        } else if (label_[inblossom_[w]] == 1) {
                            int b = inblossom_[v];
                            if (bestedge_[b] == -1 || kslack < slack(bestedge_[b])) {
                                bestedge_[b] = k;
                            }
                        } else if (label_[w] == 0) {
                            if (bestedge_[w] == -1 || kslack < slack(bestedge_[w])) {
                                bestedge_[w] = k;
                            }
                        }
                    }
                }
                if (augmented) {
                    break;
                }

                int deltatype = -1;
                int64_t delta = 0;
                int deltaedge = -1;
                int deltablossom = -1;
                if (!max_cardinality_) {
                    deltatype = 1;
                    delta = *std::min_element(dual_.begin(), dual_.begin() + n);
                }
                for (int v = 0; v < n; v++) {
                    if (label_[inblossom_[v]] == 0 && bestedge_[v] != -1) {
                        int64_t d = slack(bestedge_[v]);
                        if (deltatype == -1 || d < delta) {
                            delta = d;
                            deltatype = 2;
                            deltaedge = bestedge_[v];
                        }
                    }
                }
                for (int b = 0; b < 2 * n; b++) {
                    if (parent_[b] == -1 && label_[b] == 1 && bestedge_[b] != -1) {
                        int64_t kslack = slack(bestedge_[b]);
                        int64_t d = kslack / 2;
                        if (deltatype == -1 || d < delta) {
                            delta = d;
                            deltatype = 3;
                            deltaedge = bestedge_[b];
                        }
                    }
                }
                for (int b = n; b < 2 * n; b++) {
                    if (base_[b] >= 0 && parent_[b] == -1 && label_[b] == 2 &&
                        (deltatype == -1 || dual_[b] < delta)) {
                        delta = dual_[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                if (deltatype == -1) {
                    deltatype = 1;
                    delta = std::max<int64_t>(0, *std::min_element(dual_.begin(), dual_.begin() + n));
                }

                for (int v = 0; v < n; v++) {
                    if (label_[inblossom_[v]] == 1) {
                        dual_[v] -= delta;
                    } else if (label_[inblossom_[v]] == 2) {
                        dual_[v] += delta;
                    }
                }
                for (int b = n; b < 2 * n; b++) {
                    if (base_[b] >= 0 && parent_[b] == -1) {
                        if (label_[b] == 1) {
                            dual_[b] += delta;
                        } else if (label_[b] == 2) {
                            dual_[b] -= delta;
                        }
                    }
                }

                if (deltatype == 1) {
                    break;
                } else if (deltatype == 2) {
                    allowedge_[deltaedge] = 1;
                    int i = edges_[deltaedge].u;
                    int j = edges_[deltaedge].v;
                    if (label_[inblossom_[i]] == 0) {
                        std::swap(i, j);
                    }
                    queue_.push_back(i);
                } else if (deltatype == 3) {
                    allowedge_[deltaedge] = 1;
                    queue_.push_back(edges_[deltaedge].u);
                } else {
                    expand_blossom(deltablossom, false);
                }
            }

            if (!augmented) {
                break;
            }
            for (int b = n; b < 2 * n; b++) {
                if (parent_[b] == -1 && base_[b] >= 0 && label_[b] == 1 && dual_[b] == 0) {
                    expand_blossom(b, true);
                }
            }
        }

        std::vector<int> result(n, -1);
        for (int v = 0; v < n; v++) {
            if (mate_[v] >= 0) {
                result[v] = endpoint_[mate_[v]];
            }
        }
        return result;
    }

   private:
    void seed_tight_matching() {
        std::vector<int64_t> heaviest(n_, std::numeric_limits<int64_t>::min());
        for (const auto &e : edges_) {
            heaviest[e.u] = std::max(heaviest[e.u], e.w);
            heaviest[e.v] = std::max(heaviest[e.v], e.w);
        }
        for (int i = 0; i < n_; i++) {
            dual_[i] = heaviest[i] == std::numeric_limits<int64_t>::min() ? 0 : heaviest[i];
        }
        for (int k = 0; k < int(edges_.size()); k++) {
            const auto &e = edges_[k];
            if (mate_[e.u] == -1 && mate_[e.v] == -1 && e.u != e.v && slack(k) == 0) {
                mate_[e.u] = 2 * k + 1;
                mate_[e.v] = 2 * k;
            }
        }
    }

    int64_t slack(int k) const {
        const auto &e = edges_[k];
        return dual_[e.u] + dual_[e.v] - 2 * e.w;
    }

    void leaves(int b, std::vector<int> &out) const {
        if (b < n_) {
            out.push_back(b);
            return;
        }
        for (int t : childs_[b]) {
            leaves(t, out);
        }
    }

    std::vector<int> leaves(int b) const {
        std::vector<int> out;
        leaves(b, out);
        return out;
    }

    static int wrap(int j, int len) {
        return ((j % len) + len) % len;
    }

    void assign_label(int w, int t, int p) {
        int b = inblossom_[w];
        label_[w] = label_[b] = t;
        labelend_[w] = labelend_[b] = p;
        bestedge_[w] = bestedge_[b] = -1;
        if (t == 1) {
            leaves(b, queue_);
        } else if (t == 2) {
            int base = base_[b];
            assign_label(endpoint_[mate_[base]], 1, mate_[base] ^ 1);
        }
    }

    // Walks up from v and w in alternation. Returns the base of a new
    // blossom, or -1 when the two trees are distinct (augmenting path).
    int scan_blossom(int v, int w) {
        std::vector<int> path;
        int base = -1;
        while (v != -1 || w != -1) {
            int b = inblossom_[v];
            if (label_[b] & 4) {
                base = base_[b];
                break;
            }
            path.push_back(b);
            label_[b] = 5;
            if (labelend_[b] == -1) {
                v = -1;
            } else {
                v = endpoint_[labelend_[b]];
                b = inblossom_[v];
                v = endpoint_[labelend_[b]];
            }
            if (w != -1) {
                std::swap(v, w);
            }
        }
        for (int b : path) {
            label_[b] = 1;
        }
        return base;
    }

    void add_blossom(int base, int k) {
        int v = edges_[k].u;
        int w = edges_[k].v;
        int bb = inblossom_[base];
        int bv = inblossom_[v];
        int bw = inblossom_[w];
        int b = unused_.back();
        unused_.pop_back();
        base_[b] = base;
        parent_[b] = -1;
        parent_[bb] = b;
        std::vector<int> path;
        std::vector<int> endps;
        while (bv != bb) {
            parent_[bv] = b;
            path.push_back(bv);
            endps.push_back(labelend_[bv]);
            v = endpoint_[labelend_[bv]];
            bv = inblossom_[v];
        }
        path.push_back(bb);
        std::reverse(path.begin(), path.end());
        std::reverse(endps.begin(), endps.end());
        endps.push_back(2 * k);
        while (bw != bb) {
            parent_[bw] = b;
            path.push_back(bw);
            endps.push_back(labelend_[bw] ^ 1);
            w = endpoint_[labelend_[bw]];
            bw = inblossom_[w];
        }
        childs_[b] = path;
        endps_[b] = std::move(endps);

        label_[b] = 1;
        labelend_[b] = labelend_[bb];
        dual_[b] = 0;
        for (int leaf : leaves(b)) {
            if (label_[inblossom_[leaf]] == 2) {
                queue_.push_back(leaf);
            }
            inblossom_[leaf] = b;
        }

        std::vector<int> bestedgeto(2 * size_t(n_), -1);
        auto consider = [&](int kk) {
            int i = edges_[kk].u;
            int j = edges_[kk].v;
            if (inblossom_[j] == b) {
                std::swap(i, j);
            }
            int bj = inblossom_[j];
            if (bj != b && label_[bj] == 1 && (bestedgeto[bj] == -1 || slack(kk) < slack(bestedgeto[bj]))) {
                bestedgeto[bj] = kk;
            }
        };
        for (int child : path) {
            if (!has_best_list_[child]) {
                for (int leaf : leaves(child)) {
                    for (int p : neighbend_[leaf]) {
                        consider(p / 2);
                    }
                }
            } else {
                for (int kk : best_lists_[child]) {
                    consider(kk);
                }
            }
            best_lists_[child].clear();
            has_best_list_[child] = 0;
            bestedge_[child] = -1;
        }
        best_lists_[b].clear();
        for (int kk : bestedgeto) {
            if (kk != -1) {
                best_lists_[b].push_back(kk);
            }
        }
        has_best_list_[b] = 1;
        bestedge_[b] = -1;
        for (int kk : best_lists_[b]) {
            if (bestedge_[b] == -1 || slack(kk) < slack(bestedge_[b])) {
                bestedge_[b] = kk;
            }
        }
    }

    void expand_blossom(int b, bool endstage) {
        const std::vector<int> children = childs_[b];
        for (int s : children) {
            parent_[s] = -1;
            if (s < n_) {
                inblossom_[s] = s;
            } else if (endstage && dual_[s] == 0) {
                expand_blossom(s, endstage);
            } else {
                for (int leaf : leaves(s)) {
                    inblossom_[leaf] = s;
                }
            }
        }

        if (!endstage && label_[b] == 2) {
            const auto &endps = endps_[b];
            const int len = int(children.size());
            int entrychild = inblossom_[endpoint_[labelend_[b] ^ 1]];
            int j = int(std::find(children.begin(), children.end(), entrychild) - children.begin());
            int jstep;
            int endptrick;
            if (j & 1) {
                j -= len;
                jstep = 1;
                endptrick = 0;
            } else {
                jstep = -1;
                endptrick = 1;
            }
            int p = labelend_[b];
            while (j != 0) {
                label_[endpoint_[p ^ 1]] = 0;
                label_[endpoint_[endps[wrap(j - endptrick, len)] ^ endptrick ^ 1]] = 0;
                assign_label(endpoint_[p ^ 1], 2, p);
                allowedge_[endps[wrap(j - endptrick, len)] / 2] = 1;
                j += jstep;
                p = endps[wrap(j - endptrick, len)] ^ endptrick;
                allowedge_[p / 2] = 1;
                j += jstep;
            }
            int bv = children[wrap(j, len)];
            label_[endpoint_[p ^ 1]] = label_[bv] = 2;
            labelend_[endpoint_[p ^ 1]] = labelend_[bv] = p;
            bestedge_[bv] = -1;
            j += jstep;
            while (children[wrap(j, len)] != entrychild) {
                bv = children[wrap(j, len)];
                if (label_[bv] == 1) {
                    j += jstep;
                    continue;
                }
                int found = -1;
                for (int leaf : leaves(bv)) {
                    if (label_[leaf] != 0) {
                        found = leaf;
                        break;
                    }
                }
                if (found >= 0) {
                    label_[found] = 0;
                    label_[endpoint_[mate_[base_[bv]]]] = 0;
                    assign_label(found, 2, labelend_[found]);
                }
                j += jstep;
            }
        }

        label_[b] = labelend_[b] = -1;
        childs_[b].clear();
        endps_[b].clear();
        base_[b] = -1;
        best_lists_[b].clear();
        has_best_list_[b] = 0;
        bestedge_[b] = -1;
        unused_.push_back(b);
    }

    // Swaps matched and unmatched edges along the even path from vertex v
    // to the base of blossom b, then makes v the new base.
    void augment_blossom(int b, int v) {
        int t = v;
        while (parent_[t] != b) {
            t = parent_[t];
        }
        if (t >= n_) {
            augment_blossom(t, v);
        }
        auto &children = childs_[b];
        auto &endps = endps_[b];
        const int len = int(children.size());
        int i = int(std::find(children.begin(), children.end(), t) - children.begin());
        int j = i;
        int jstep;
        int endptrick;
        if (i & 1) {
            j -= len;
            jstep = 1;
            endptrick = 0;
        } else {
            jstep = -1;
            endptrick = 1;
        }
        while (j != 0) {
            j += jstep;
            t = children[wrap(j, len)];
            int p = endps[wrap(j - endptrick, len)] ^ endptrick;
            if (t >= n_) {
                augment_blossom(t, endpoint_[p]);
            }
            j += jstep;
            t = children[wrap(j, len)];
            if (t >= n_) {
                augment_blossom(t, endpoint_[p ^ 1]);
            }
            mate_[endpoint_[p]] = p ^ 1;
            mate_[endpoint_[p ^ 1]] = p;
        }
        std::rotate(children.begin(), children.begin() + i, children.end());
        std::rotate(endps.begin(), endps.begin() + i, endps.end());
        base_[b] = base_[children[0]];
    }

    void augment_matching(int k) {
        const int ends[2][2] = {{edges_[k].u, 2 * k + 1}, {edges_[k].v, 2 * k}};
        for (const auto &start : ends) {
            int s = start[0];
            int p = start[1];
            while (true) {
                int bs = inblossom_[s];
                if (bs >= n_) {
                    augment_blossom(bs, s);
                }
                mate_[s] = p;
                if (labelend_[bs] == -1) {
                    break;
                }
                int t = endpoint_[labelend_[bs]];
                int bt = inblossom_[t];
                s = endpoint_[labelend_[bt]];
                int j = endpoint_[labelend_[bt] ^ 1];
                if (bt >= n_) {
                    augment_blossom(bt, j);
                }
                mate_[j] = labelend_[bt];
                p = labelend_[bt] ^ 1;
            }
        }
    }

    int n_;
    std::vector<WeightedEdge> edges_;
    bool max_cardinality_;
    bool warm_start_;

    std::vector<int> endpoint_;
    std::vector<std::vector<int>> neighbend_;
    std::vector<int> mate_;
    std::vector<int> label_;
    std::vector<int> labelend_;
    std::vector<int> inblossom_;
    std::vector<int> parent_;
    std::vector<std::vector<int>> childs_;
    std::vector<int> base_;
    std::vector<std::vector<int>> endps_;
    std::vector<int> bestedge_;
    std::vector<std::vector<int>> best_lists_;
    std::vector<uint8_t> has_best_list_;
    std::vector<int> unused_;
    std::vector<int64_t> dual_;
    std::vector<uint8_t> allowedge_;
    std::vector<int> queue_;
};

inline PerfectMatching to_perfect_matching(const std::vector<int> &mate) {
    PerfectMatching out;
    out.mate.resize(mate.size());
    for (size_t i = 0; i < mate.size(); i++) {
        if (mate[i] < 0) {
            throw std::logic_error("matching is not perfect");
        }
        out.mate[i] = uint32_t(mate[i]);
        if (size_t(mate[i]) > i) {
            out.pairs.emplace_back(uint32_t(i), uint32_t(mate[i]));
        }
    }
    return out;
}

}  // namespace internal

/// Exact minimum-weight perfect matching on a complete graph with an even
/// number of vertices.
inline PerfectMatching min_weight_perfect_matching(const WeightMatrix &w) {
    const size_t n = w.size();
    if (n % 2 != 0) {
        throw std::invalid_argument("perfect matching needs an even vertex count");
    }
    if (n == 0) {
        return {};
    }
    if (n > size_t(std::numeric_limits<int>::max() / 4)) {
        throw std::invalid_argument("matching instance too large");
    }
    int64_t top = std::numeric_limits<int64_t>::min();
    for (size_t i = 0; i < n; i++) {
        for (size_t j = i + 1; j < n; j++) {
            top = std::max(top, w(i, j));
        }
    }
    // Maximising 2 * (top + 1 - w) over maximum-cardinality matchings
    // minimises the total of w over perfect matchings.
    std::vector<internal::WeightedEdge> edges;
    edges.reserve(n * (n - 1) / 2);
    for (size_t i = 0; i < n; i++) {
        for (size_t j = i + 1; j < n; j++) {
            edges.push_back({int(i), int(j), 2 * (top + 1 - w(i, j))});
        }
    }
    internal::BlossomMatcher matcher(int(n), std::move(edges), true, true);
    PerfectMatching out = internal::to_perfect_matching(matcher.run());
    for (auto [i, j] : out.pairs) {
        out.weight += double(w(i, j));
    }
    return out;
}

/// Floating-point front end: weights are quantised to 2^-40 of the largest
/// magnitude before matching. `weights` is a row-major n x n matrix.
inline PerfectMatching min_weight_perfect_matching(std::span<const double> weights, size_t n) {
    if (weights.size() != n * n) {
        throw std::invalid_argument("weight matrix must be n x n");
    }
    double largest = 0.0;
    for (double x : weights) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("weights must be finite");
        }
        largest = std::max(largest, std::abs(x));
    }
    double scale = largest > 0.0 ? std::ldexp(1.0, 40) / largest : 1.0;
    WeightMatrix q(n);
    for (size_t i = 0; i < n; i++) {
        for (size_t j = i + 1; j < n; j++) {
            q.set(i, j, std::llround(weights[i * n + j] * scale));
        }
    }
    PerfectMatching out = min_weight_perfect_matching(q);
    out.weight = 0.0;
    for (auto [i, j] : out.pairs) {
        out.weight += weights[i * n + j];
    }
    return out;
}

}  // namespace tcsbond
