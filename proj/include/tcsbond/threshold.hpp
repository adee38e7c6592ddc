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
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tcsbond/experiment.hpp"
#include "tcsbond/rng.hpp"

namespace tcsbond {

enum class ThresholdMethod : uint8_t { scaling_fit, scaling_fit_fixed_nu, pairwise_crossings, no_crossing };

inline const char *to_string(ThresholdMethod m) {
    switch (m) {
        case ThresholdMethod::scaling_fit:
            return "scaling-fit";
        case ThresholdMethod::scaling_fit_fixed_nu:
            return "scaling-fit-fixed-nu";
        case ThresholdMethod::pairwise_crossings:
            return "pairwise-crossings";
        case ThresholdMethod::no_crossing:
            return "no-crossing";
    }
    return "?";
}

/// Where the curves of two distances intersect. `smaller` < `larger`.
struct PairCrossing {
    int smaller = 0;
    int larger = 0;
    double at = 0.0;
};

struct ThresholdEstimate {
    Scheme scheme = Scheme::non_adaptive;
    double p_bond = 0.0;
    bool crossing = false;
    double p_th = std::numeric_limits<double>::quiet_NaN();
    double ci_low = std::numeric_limits<double>::quiet_NaN();
    double ci_high = std::numeric_limits<double>::quiet_NaN();
    ThresholdMethod method = ThresholdMethod::no_crossing;
    double nu = std::numeric_limits<double>::quiet_NaN();
    std::array<double, 3> coefficients{};  // rate = c0 + c1 x + c2 x^2
    double chi2_per_dof = std::numeric_limits<double>::quiet_NaN();
    std::vector<PairCrossing> pair_crossings;
    std::string note;
};

struct ThresholdOptions {
    int bootstrap_resamples = 1000;
    uint64_t seed = 0;
    double nu_min = 0.5;
    double nu_max = 2.5;
    double fallback_nu = 1.0;
};

namespace internal {

/// One sampled point of a curve.
struct CurveSample {
    double x = 0.0;
    uint64_t trials = 0;
    uint64_t hits = 0;

    double rate() const {
        return double(hits) / double(trials);
    }
    // Variance of the rate with a +1/+2 pseudo-count so zero counts keep a
    // finite weight.
    double variance() const {
        double r = (double(hits) + 1.0) / (double(trials) + 2.0);
        return r * (1.0 - r) / double(trials);
    }
};

using Curves = std::map<int, std::vector<CurveSample>>;  // distance -> samples sorted by x

inline std::optional<double> crossing_between(const std::vector<CurveSample> &lo, const std::vector<CurveSample> &hi) {
    // Difference (larger distance minus smaller) on the common grid.
    std::vector<std::pair<double, double>> diff;
    std::vector<double> sigma;
    size_t j = 0;
    for (const auto &a : lo) {
        while (j < hi.size() && hi[j].x < a.x) {
            j++;
        }
        if (j < hi.size() && hi[j].x == a.x) {
            diff.push_back({a.x, hi[j].rate() - a.rate()});
            sigma.push_back(std::sqrt(a.variance() + hi[j].variance()));
        }
    }
    // Among rising sign changes pick the most significant one.
    std::optional<double> best;
    double best_score = -1.0;
    for (size_t k = 0; k + 1 < diff.size(); k++) {
        auto [x0, y0] = diff[k];
        auto [x1, y1] = diff[k + 1];
        if (y0 <= 0.0 && y1 > 0.0) {
            double score = -y0 / sigma[k] + y1 / sigma[k + 1];
            double at = y1 == y0 ? x0 : x0 + (x1 - x0) * (-y0) / (y1 - y0);
            if (score > best_score) {
                best_score = score;
                best = at;
            }
        }
    }
    return best;
}

inline std::vector<PairCrossing> pairwise_crossings(const Curves &curves) {
    std::vector<PairCrossing> out;
    for (auto a = curves.begin(); a != curves.end(); ++a) {
        for (auto b = std::next(a); b != curves.end(); ++b) {
            if (auto at = crossing_between(a->second, b->second)) {
                out.push_back({a->first, b->first, *at});
            }
        }
    }
    return out;
}

/// Weighted least squares of the scaling ansatz at fixed (p_th, nu); the
/// quadratic coefficients are solved exactly.
struct ScalingFit {
    double chi2 = std::numeric_limits<double>::infinity();
    std::array<double, 3> coefficients{};
};

inline bool solve3(std::array<std::array<double, 3>, 3> m, std::array<double, 3> v, std::array<double, 3> &out) {
    double scale = 0.0;
    for (const auto &row : m) {
        for (double x : row) scale = std::max(scale, std::abs(x));
    }
    for (int c = 0; c < 3; c++) {
        int piv = c;
        for (int r = c + 1; r < 3; r++) {
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        }
        if (!(std::abs(m[piv][c]) > 1e-13 * scale)) {
            return false;
        }
        std::swap(m[c], m[piv]);
        std::swap(v[c], v[piv]);
        for (int r = 0; r < 3; r++) {
            if (r == c) continue;
            double f = m[r][c] / m[c][c];
            for (int k = c; k < 3; k++) m[r][k] -= f * m[c][k];
            v[r] -= f * v[c];
        }
    }
    for (int c = 0; c < 3; c++) out[c] = v[c] / m[c][c];
    return true;
}

inline ScalingFit fit_scaling(const Curves &curves, double p_th, double nu) {
    std::array<std::array<double, 3>, 3> normal{};
    std::array<double, 3> rhs{};
    for (const auto &[d, samples] : curves) {
        double scale = std::pow(double(d), 1.0 / nu);
        for (const auto &s : samples) {
            double x = (s.x - p_th) * scale;
            double w = 1.0 / s.variance();
            std::array<double, 3> basis{1.0, x, x * x};
            for (int i = 0; i < 3; i++) {
                rhs[i] += w * basis[i] * s.rate();
                for (int j = 0; j < 3; j++) normal[i][j] += w * basis[i] * basis[j];
            }
        }
    }
    ScalingFit fit;
    if (!solve3(normal, rhs, fit.coefficients)) {
        return fit;
    }
    fit.chi2 = 0.0;
    for (const auto &[d, samples] : curves) {
        double scale = std::pow(double(d), 1.0 / nu);
        for (const auto &s : samples) {
            double x = (s.x - p_th) * scale;
            const auto &c = fit.coefficients;
            double r = s.rate() - (c[0] + c[1] * x + c[2] * x * x);
            fit.chi2 += r * r / s.variance();
        }
    }
    return fit;
}

/// Nelder-Mead over (p_th, nu) with both clamped to their boxes.
inline std::pair<double, double> minimize_scaling(
    const Curves &curves, double p0, double nu0, double p_lo, double p_hi, double nu_lo, double nu_hi,
    bool fix_nu) {
    auto clampv = [&](std::array<double, 2> v) {
        v[0] = std::clamp(v[0], p_lo, p_hi);
        v[1] = fix_nu ? nu0 : std::clamp(v[1], nu_lo, nu_hi);
        return v;
    };
    auto cost = [&](const std::array<double, 2> &v) { return fit_scaling(curves, v[0], v[1]).chi2; };
    double span = p_hi - p_lo;
    std::array<std::array<double, 2>, 3> simplex{
        clampv({p0, nu0}), clampv({p0 + 0.05 * span, nu0}), clampv({p0, nu0 + (fix_nu ? 0.0 : 0.1)})};
    if (simplex[1][0] == simplex[0][0]) simplex[1] = clampv({p0 - 0.05 * span, nu0});
    if (!fix_nu && simplex[2][1] == simplex[0][1]) simplex[2] = clampv({p0, nu0 - 0.1});
    std::array<double, 3> f{cost(simplex[0]), cost(simplex[1]), cost(simplex[2])};
    for (int iter = 0; iter < 400; iter++) {
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return f[a] < f[b]; });
        auto best = simplex[idx[0]];
        auto mid = simplex[idx[1]];
        auto worst = simplex[idx[2]];
        if (std::abs(f[idx[2]] - f[idx[0]]) < 1e-10 * (1.0 + std::abs(f[idx[0]])) &&
            std::abs(worst[0] - best[0]) < 1e-9 * span) {
            break;
        }
        std::array<double, 2> centroid{(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
        auto along = [&](double t) {
            return clampv({centroid[0] + t * (worst[0] - centroid[0]), centroid[1] + t * (worst[1] - centroid[1])});
        };
        auto refl = along(-1.0);
        double fr = cost(refl);
        if (fr < f[idx[0]]) {
            auto exp = along(-2.0);
            double fe = cost(exp);
            if (fe < fr) {
                simplex[idx[2]] = exp;
                f[idx[2]] = fe;
            } else {
                simplex[idx[2]] = refl;
                f[idx[2]] = fr;
            }
        } else if (fr < f[idx[1]]) {
            simplex[idx[2]] = refl;
            f[idx[2]] = fr;
        } else {
            auto con = along(fr < f[idx[2]] ? -0.5 : 0.5);
            double fc = cost(con);
            if (fc < std::min(fr, f[idx[2]])) {
                simplex[idx[2]] = con;
                f[idx[2]] = fc;
            } else {
                for (int k : {idx[1], idx[2]}) {
                    simplex[k] = clampv({(simplex[k][0] + best[0]) / 2, (simplex[k][1] + best[1]) / 2});
                    f[k] = cost(simplex[k]);
                }
            }
        }
    }
    int arg = int(std::min_element(f.begin(), f.end()) - f.begin());
    return {simplex[arg][0], simplex[arg][1]};
}

struct Fitted {
    ThresholdMethod method = ThresholdMethod::no_crossing;
    double p_th = std::numeric_limits<double>::quiet_NaN();
    double nu = std::numeric_limits<double>::quiet_NaN();
    ScalingFit fit;
    std::vector<PairCrossing> crossings;
    std::string note;
};

inline size_t sample_count(const Curves &curves) {
    size_t n = 0;
    for (const auto &[d, s] : curves) n += s.size();
    return n;
}

/// Full estimation path. With `forced` set, the given method is reused
/// (bootstrap replicates follow the path chosen for the data).
inline Fitted fit_curves(
    const Curves &curves, const ThresholdOptions &opt, std::optional<ThresholdMethod> forced = std::nullopt,
    std::optional<std::pair<double, double>> start = std::nullopt) {
    Fitted out;
    out.crossings = pairwise_crossings(curves);
    if (out.crossings.empty()) {
        out.method = ThresholdMethod::no_crossing;
        out.note = "curves do not intersect in the swept range";
        return out;
    }
    double p_lo = std::numeric_limits<double>::infinity();
    double p_hi = -p_lo;
    for (const auto &[d, s] : curves) {
        p_lo = std::min(p_lo, s.front().x);
        p_hi = std::max(p_hi, s.back().x);
    }
    double span = p_hi - p_lo;
    double pair_mean = 0.0;
    for (const auto &c : out.crossings) pair_mean += c.at;
    pair_mean /= double(out.crossings.size());

    auto use_pairwise = [&](std::string note) {
        out.method = ThresholdMethod::pairwise_crossings;
        out.p_th = pair_mean;
        out.note = std::move(note);
        return out;
    };
    if (forced == ThresholdMethod::pairwise_crossings) {
        return use_pairwise("");
    }
    double dof = double(sample_count(curves)) - 5.0;
    if (dof < 1.0) {
        return use_pairwise("too few points for the scaling fit");
    }
    auto interior = [&](double v, double lo, double hi, double tol) { return v > lo + tol && v < hi - tol; };

    if (forced != ThresholdMethod::scaling_fit_fixed_nu) {
        double p0 = pair_mean;
        double nu0 = opt.fallback_nu;
        if (start) {
            std::tie(p0, nu0) = *start;
        } else {
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i <= 40; i++) {
                double p = p_lo + span * i / 40.0;
                for (int j = 0; j <= 20; j++) {
                    double nu = opt.nu_min + (opt.nu_max - opt.nu_min) * j / 20.0;
                    double c = fit_scaling(curves, p, nu).chi2;
                    if (c < best) {
                        best = c;
                        p0 = p;
                        nu0 = nu;
                    }
                }
            }
        }
        auto [p, nu] = minimize_scaling(curves, p0, nu0, p_lo, p_hi, opt.nu_min, opt.nu_max, false);
        ScalingFit fit = fit_scaling(curves, p, nu);
        bool stable = std::isfinite(fit.chi2) && interior(p, p_lo, p_hi, 1e-6 * span) &&
                      interior(nu, opt.nu_min, opt.nu_max, 1e-3);
        if (stable || forced == ThresholdMethod::scaling_fit) {
            out.method = ThresholdMethod::scaling_fit;
            out.p_th = p;
            out.nu = nu;
            out.fit = fit;
            return out;
        }
        out.note = "free exponent fit unstable; exponent fixed";
    }

    double nu = opt.fallback_nu;
    double p0 = start ? start->first : pair_mean;
    if (!start) {
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 80; i++) {
            double p = p_lo + span * i / 80.0;
            double c = fit_scaling(curves, p, nu).chi2;
            if (c < best) {
                best = c;
                p0 = p;
            }
        }
    }
    auto [p, unused] = minimize_scaling(curves, p0, nu, p_lo, p_hi, nu, nu, true);
    (void)unused;
    ScalingFit fit = fit_scaling(curves, p, nu);
    if ((std::isfinite(fit.chi2) && interior(p, p_lo, p_hi, 1e-6 * span)) ||
        forced == ThresholdMethod::scaling_fit_fixed_nu) {
        out.method = ThresholdMethod::scaling_fit_fixed_nu;
        out.p_th = p;
        out.nu = nu;
        out.fit = fit;
        return out;
    }
    return use_pairwise("scaling fit ill-conditioned; averaged pairwise crossings");
}

inline double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * double(v.size() - 1);
    size_t i = size_t(std::floor(pos));
    size_t j = std::min(v.size() - 1, i + 1);
    return v[i] + (pos - double(i)) * (v[j] - v[i]);
}

/// Groups points by distance; the abscissa comes from `x_of`, the hit count
/// from `hits_of`.
template <typename X, typename H>
Curves group_curves(const std::vector<PointEstimate> &points, X x_of, H hits_of) {
    Curves curves;
    for (const auto &pt : points) {
        if (pt.trials == 0) {
            throw std::invalid_argument("point with zero trials");
        }
        curves[pt.d].push_back({x_of(pt), pt.trials, hits_of(pt)});
    }
    for (auto &[d, s] : curves) {
        std::sort(s.begin(), s.end(), [](const CurveSample &a, const CurveSample &b) { return a.x < b.x; });
        for (size_t i = 1; i < s.size(); i++) {
            if (s[i].x == s[i - 1].x) {
                throw std::invalid_argument("duplicate point for one distance");
            }
        }
    }
    return curves;
}

}  // namespace internal

/// Locates the crossing of logical failure rates across distances at one
/// bond failure rate. Requires at least three distances with four or more
/// p_comp values each.
inline ThresholdEstimate estimate_threshold(const std::vector<PointEstimate> &points, const ThresholdOptions &opt = {}) {
    if (points.empty()) {
        throw std::invalid_argument("no points");
    }
    for (const auto &pt : points) {
        if (pt.p_bond != points.front().p_bond || pt.scheme != points.front().scheme) {
            throw std::invalid_argument("points must share scheme and p_bond");
        }
    }
    internal::Curves curves = internal::group_curves(
        points, [](const PointEstimate &p) { return p.p_comp; }, [](const PointEstimate &p) { return p.failures; });
    if (curves.size() < 3) {
        throw std::invalid_argument("threshold estimation needs at least 3 distances");
    }
    for (const auto &[d, s] : curves) {
        if (s.size() < 4) {
            throw std::invalid_argument("threshold estimation needs at least 4 p_comp values per distance");
        }
    }

    ThresholdEstimate est;
    est.scheme = points.front().scheme;
    est.p_bond = points.front().p_bond;
    internal::Fitted fitted = internal::fit_curves(curves, opt);
    est.method = fitted.method;
    est.pair_crossings = fitted.crossings;
    est.note = fitted.note;
    if (fitted.method == ThresholdMethod::no_crossing) {
        return est;
    }
    est.crossing = true;
    est.p_th = fitted.p_th;
    est.nu = fitted.nu;
    est.coefficients = fitted.fit.coefficients;
    if (fitted.method != ThresholdMethod::pairwise_crossings) {
        est.chi2_per_dof = fitted.fit.chi2 / (double(internal::sample_count(curves)) - 5.0);
    }

    // Parametric bootstrap: redraw each point's count from its binomial.
    std::vector<double> replicates;
    for (int b = 0; b < opt.bootstrap_resamples; b++) {
        TrialRng rng(opt.seed, uint64_t(b), Stream::bootstrap);
        internal::Curves resampled = curves;
        for (auto &[d, samples] : resampled) {
            for (auto &s : samples) {
                std::binomial_distribution<uint64_t> draw(s.trials, s.rate());
                s.hits = draw(rng);
            }
        }
        auto start = std::make_pair(fitted.p_th, std::isfinite(fitted.nu) ? fitted.nu : opt.fallback_nu);
        internal::Fitted rep = internal::fit_curves(resampled, opt, fitted.method, start);
        if (std::isfinite(rep.p_th)) {
            replicates.push_back(rep.p_th);
        }
    }
    if (replicates.size() >= 2) {
        est.ci_low = internal::percentile(replicates, 0.025);
        est.ci_high = internal::percentile(replicates, 0.975);
    }
    return est;
}

/// Bond failure rate at which the percolation frequency stops decreasing
/// with distance: the mean of pairwise crossings of percolation curves.
struct PercolationCrossover {
    bool crossing = false;
    double p_bond = std::numeric_limits<double>::quiet_NaN();
    std::vector<PairCrossing> pair_crossings;
};

inline PercolationCrossover estimate_percolation_crossover(const std::vector<PointEstimate> &points) {
    internal::Curves curves = internal::group_curves(
        points, [](const PointEstimate &p) { return p.p_bond; },
        [](const PointEstimate &p) { return p.percolation_failures; });
    if (curves.size() < 2) {
        throw std::invalid_argument("crossover needs at least 2 distances");
    }
    PercolationCrossover out;
    out.pair_crossings = internal::pairwise_crossings(curves);
    if (!out.pair_crossings.empty()) {
        out.crossing = true;
        double sum = 0.0;
        for (const auto &c : out.pair_crossings) sum += c.at;
        out.p_bond = sum / double(out.pair_crossings.size());
    }
    return out;
}

/// Least-squares quadratic y = c0 + c1 x + c2 x^2 with standard errors.
struct QuadraticFit {
    std::array<double, 3> coefficients{};
    std::array<double, 3> standard_errors{};
    double residual_sum_squares = 0.0;
};

inline QuadraticFit fit_threshold_curve(const std::vector<std::pair<double, double>> &pairs) {
    if (pairs.size() < 4) {
        throw std::invalid_argument("quadratic fit needs at least 4 points");
    }
    std::array<std::array<double, 3>, 3> normal{};
    std::array<double, 3> rhs{};
    for (auto [x, y] : pairs) {
        std::array<double, 3> basis{1.0, x, x * x};
        for (int i = 0; i < 3; i++) {
            rhs[i] += basis[i] * y;
            for (int j = 0; j < 3; j++) normal[i][j] += basis[i] * basis[j];
        }
    }
    QuadraticFit fit;
    if (!internal::solve3(normal, rhs, fit.coefficients)) {
        throw std::invalid_argument("quadratic fit is singular");
    }
    for (auto [x, y] : pairs) {
        const auto &c = fit.coefficients;
        double r = y - (c[0] + c[1] * x + c[2] * x * x);
        fit.residual_sum_squares += r * r;
    }
    double s2 = fit.residual_sum_squares / double(pairs.size() - 3);
    for (int k = 0; k < 3; k++) {
        std::array<double, 3> unit{};
        unit[k] = 1.0;
        std::array<double, 3> col{};
        if (!internal::solve3(normal, unit, col)) {
            throw std::invalid_argument("quadratic fit is singular");
        }
        fit.standard_errors[k] = std::sqrt(std::max(0.0, s2 * col[k]));
    }
    return fit;
}

}  // namespace tcsbond
