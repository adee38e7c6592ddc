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

#include <cmath>

#include "tcsbond/threshold.hpp"

using namespace tcsbond;

namespace {

PointEstimate point(int d, double p_bond, double p_comp, uint64_t trials, uint64_t failures, uint64_t perc = 0) {
    PointEstimate p;
    p.scheme = Scheme::non_adaptive;
    p.d = d;
    p.p_bond = p_bond;
    p.p_comp = p_comp;
    p.trials = trials;
    p.failures = failures;
    p.percolation_failures = perc;
    p.rate = double(failures) / double(trials);
    return p;
}

// Noise-free counts drawn from a universal quadratic scaling form.
std::vector<PointEstimate> scaling_points(double p_th, double nu, std::vector<int> distances) {
    const uint64_t trials = 1000000;
    std::vector<PointEstimate> out;
    for (int d : distances) {
        for (int i = 0; i <= 8; i++) {
            double p = 0.02 + 0.0025 * i;
            double x = (p - p_th) * std::pow(double(d), 1.0 / nu);
            double rate = 0.2 + 1.0 * x + 0.5 * x * x;
            out.push_back(point(d, 0.0, p, trials, uint64_t(std::llround(rate * double(trials)))));
        }
    }
    return out;
}

}  // namespace

TEST(Threshold, recovers_synthetic_scaling_crossing) {
    ThresholdOptions opt;
    opt.bootstrap_resamples = 50;
    ThresholdEstimate est = estimate_threshold(scaling_points(0.029, 1.2, {5, 7, 9}), opt);
    ASSERT_TRUE(est.crossing);
    EXPECT_EQ(est.method, ThresholdMethod::scaling_fit);
    EXPECT_NEAR(est.p_th, 0.029, 1e-4);
    EXPECT_NEAR(est.nu, 1.2, 0.05);
    EXPECT_NEAR(est.coefficients[0], 0.2, 1e-3);
    EXPECT_LE(est.ci_low, est.p_th);
    EXPECT_GE(est.ci_high, est.p_th);
    EXPECT_LT(est.ci_high - est.ci_low, 0.002);
    EXPECT_EQ(est.pair_crossings.size(), 3u);
    for (const auto &c : est.pair_crossings) EXPECT_NEAR(c.at, 0.029, 5e-4);
}

TEST(Threshold, bootstrap_is_reproducible) {
    ThresholdOptions opt;
    opt.bootstrap_resamples = 40;
    opt.seed = 3;
    auto pts = scaling_points(0.031, 1.0, {5, 7, 9});
    ThresholdEstimate a = estimate_threshold(pts, opt);
    ThresholdEstimate b = estimate_threshold(pts, opt);
    EXPECT_EQ(a.ci_low, b.ci_low);
    EXPECT_EQ(a.ci_high, b.ci_high);
}

TEST(Threshold, parallel_curves_report_no_crossing) {
    std::vector<PointEstimate> pts;
    for (int d : {5, 7, 9}) {
        for (int i = 0; i < 5; i++) {
            double rate = 0.05 + 0.01 * d + 0.5 * 0.005 * i;
            pts.push_back(point(d, 0.08, 0.02 + 0.005 * i, 100000, uint64_t(rate * 100000)));
        }
    }
    ThresholdEstimate est = estimate_threshold(pts);
    EXPECT_FALSE(est.crossing);
    EXPECT_EQ(est.method, ThresholdMethod::no_crossing);
    EXPECT_TRUE(std::isnan(est.p_th));
    EXPECT_TRUE(std::isnan(est.ci_low));
    EXPECT_FALSE(est.note.empty());
}

TEST(Threshold, rejects_insufficient_or_mixed_data) {
    EXPECT_THROW(estimate_threshold({}), std::invalid_argument);
    EXPECT_THROW(estimate_threshold(scaling_points(0.03, 1.0, {5, 7})), std::invalid_argument);

    auto few = scaling_points(0.03, 1.0, {5, 7, 9});
    std::erase_if(few, [](const PointEstimate &p) { return p.d == 7 && p.p_comp > 0.026; });
    EXPECT_THROW(estimate_threshold(few), std::invalid_argument);

    auto mixed = scaling_points(0.03, 1.0, {5, 7, 9});
    mixed[0].p_bond = 0.01;
    EXPECT_THROW(estimate_threshold(mixed), std::invalid_argument);

    auto dup = scaling_points(0.03, 1.0, {5, 7, 9});
    dup.push_back(dup[0]);
    EXPECT_THROW(estimate_threshold(dup), std::invalid_argument);
}

TEST(Threshold, method_names) {
    EXPECT_STREQ(to_string(ThresholdMethod::scaling_fit), "scaling-fit");
    EXPECT_STREQ(to_string(ThresholdMethod::scaling_fit_fixed_nu), "scaling-fit-fixed-nu");
    EXPECT_STREQ(to_string(ThresholdMethod::pairwise_crossings), "pairwise-crossings");
    EXPECT_STREQ(to_string(ThresholdMethod::no_crossing), "no-crossing");
}

TEST(Threshold, pairwise_crossing_interpolates_linearly) {
    internal::Curves curves;
    curves[3] = {{0.0, 1000, 100}, {1.0, 1000, 300}};
    curves[5] = {{0.0, 1000, 50}, {1.0, 1000, 450}};
    auto c = internal::pairwise_crossings(curves);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].smaller, 3);
    EXPECT_EQ(c[0].larger, 5);
    // Difference goes from -0.05 to +0.15.
    EXPECT_NEAR(c[0].at, 0.25, 1e-12);
}

TEST(Threshold, percolation_crossover_on_synthetic_curves) {
    std::vector<PointEstimate> pts;
    for (int d : {4, 6, 8}) {
        for (int i = 0; i <= 10; i++) {
            double p = 0.04 + 0.005 * i;
            double rate = 1.0 / (1.0 + std::exp(-(p - 0.065) * 40.0 * d));
            uint64_t hits = uint64_t(std::llround(rate * 10000));
            pts.push_back(point(d, p, 0.0, 10000, hits, hits));
        }
    }
    PercolationCrossover c = estimate_percolation_crossover(pts);
    ASSERT_TRUE(c.crossing);
    EXPECT_NEAR(c.p_bond, 0.065, 0.002);
    EXPECT_EQ(c.pair_crossings.size(), 3u);

    std::erase_if(pts, [](const PointEstimate &p) { return p.d != 4; });
    EXPECT_THROW(estimate_percolation_crossover(pts), std::invalid_argument);
}

TEST(Threshold, quadratic_curve_fit_recovers_exact_coefficients) {
    const std::array<double, 3> c{0.029, -0.587, 2.786};
    std::vector<std::pair<double, double>> pairs;
    for (double x : {0.0, 0.02, 0.04, 0.06, 0.08}) pairs.emplace_back(x, c[0] + c[1] * x + c[2] * x * x);
    QuadraticFit fit = fit_threshold_curve(pairs);
    for (int i = 0; i < 3; i++) EXPECT_NEAR(fit.coefficients[i], c[i], 1e-6);
    EXPECT_NEAR(fit.residual_sum_squares, 0.0, 1e-15);

    pairs.resize(3);
    EXPECT_THROW(fit_threshold_curve(pairs), std::invalid_argument);
    EXPECT_THROW(fit_threshold_curve({{0.1, 1}, {0.1, 2}, {0.1, 3}, {0.1, 4}}), std::invalid_argument);
}
