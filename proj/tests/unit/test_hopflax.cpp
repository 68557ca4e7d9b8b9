#include "helpers.hpp"
#include "otflow/calculus.hpp"
#include "otflow/error.hpp"
#include "otflow/hopflax.hpp"

#include <gtest/gtest.h>

using namespace otflow;
using namespace otflow::testutil;

TEST(HopfLax, TwoPointExamples) {
    auto s = two_point();
    ScalarField f(s, {0.0, 1.0});
    auto a = hopflax::hopf_lax(s, f, 0.25);
    EXPECT_EQ(a.q.values(), (std::vector<double>{0.0, 1.0}));
    EXPECT_EQ(a.d_plus, (std::vector<double>{0.0, 0.0}));
    auto b = hopflax::hopf_lax(s, f, 1.0);
    EXPECT_EQ(b.q[0], 0.0);
    EXPECT_EQ(b.q[1], 0.5);
    EXPECT_EQ(b.d_plus[1], 1.0);
    EXPECT_THROW(hopflax::hopf_lax(s, f, 0.0), NonPositiveTime);
}

TEST(HopfLax, ConstantFunction) {
    auto s = gen_circle_grid(9);
    ScalarField f(s, std::vector<double>(9, 3.5));
    auto r = hopflax::hopf_lax(s, f, 0.3);
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_EQ(r.q[i], 3.5);
        EXPECT_EQ(r.d_plus[i], 0.0);
        EXPECT_EQ(r.d_minus[i], 0.0);
    }
    auto rep = hopflax::hj_residuals(s, f, 0.3);
    for (const auto& [k, v] : rep.residuals) EXPECT_EQ(v, 0.0) << k;
}

// brute force min over y, no tie band
TEST(HopfLax, MatchesBruteForceAndInvariants) {
    SplitMix64 rng(11);
    for (int rep = 0; rep < 30; ++rep) {
        auto s = random_space(rng, 2 + rng.below(20));
        ScalarField f(s, random_values(rng, s.n()));
        double t = rng.uniform(0.01, 2.0);
        auto r = hopflax::hopf_lax(s, f, t);
        double lip = hopflax::lipschitz_constant(s, f);
        for (std::size_t x = 0; x < s.n(); ++x) {
            double best = INFINITY;
            for (std::size_t y = 0; y < s.n(); ++y) best = std::min(best, f[y] + s.dist(x, y) * s.dist(x, y) / (2 * t));
            EXPECT_NEAR(r.q[x], best, 4e-16 * (1 + std::abs(best)));
            EXPECT_LE(r.q[x], f[x]);
            EXPECT_LE(r.d_minus[x], r.d_plus[x]);
            EXPECT_LE(r.d_plus[x], 2 * t * lip + 1e-12);
        }
        // monotone in time
        auto later = hopflax::hopf_lax(s, f, 1.5 * t);
        for (std::size_t x = 0; x < s.n(); ++x) EXPECT_LE(later.q[x], r.q[x]);
    }
}

TEST(HopfLax, MonotonicityOfDpm) {
    auto s = gen_circle_grid(16);
    std::vector<double> v(16);
    for (std::size_t i = 0; i < 16; ++i) v[i] = i < 8 ? double(i) / 8.0 : 1.0;
    auto r = hopflax::check_dpm_monotone(s, ScalarField(s, v), {0.1, 0.2, 0.4});
    EXPECT_TRUE(r.pass());
    EXPECT_EQ(r.residuals.at("max_violation"), 0.0);
    auto two = two_point();
    EXPECT_TRUE(hopflax::check_dpm_monotone(two, ScalarField(two, {0, 1}), {0.25, 1.0}).pass());
    EXPECT_THROW(hopflax::check_dpm_monotone(two, ScalarField(two, {0, 1}), {0.5, 0.25}), InvalidArgument);
}

TEST(HopfLax, RandomMonotonicity) {
    SplitMix64 rng(12);
    for (int rep = 0; rep < 20; ++rep) {
        auto s = random_space(rng, 3 + rng.below(15));
        ScalarField f(s, random_values(rng, s.n()));
        EXPECT_TRUE(hopflax::check_dpm_monotone(s, f, {0.05, 0.1, 0.3, 0.9}).pass());
    }
}

TEST(HopfLax, TwoPointTimeDerivative) {
    auto s = two_point();
    auto pw = hopflax::hj_pointwise(s, ScalarField(s, {0.0, 1.0}), 1.0, 1e-3);
    EXPECT_NEAR(pw.dt_q[1], -0.5, 1e-6);
    EXPECT_NEAR(pw.r_dini[1], 0.0, 1e-6);
    EXPECT_TRUE(pw.r_sup.empty());
}

TEST(HopfLax, SupersolutionOnCircle) {
    auto s = gen_circle_grid(64);
    std::vector<double> f(64);
    for (std::size_t i = 0; i < 64; ++i) f[i] = s.dist(i, 0);
    auto r = hopflax::hj_residuals(s, ScalarField(s, f), 0.1, 1e-3);
    ASSERT_TRUE(r.residuals.count("supersolution"));
    EXPECT_LE(r.residuals.at("supersolution"), 0.2);
    EXPECT_TRUE(r.pass());
}

TEST(HopfLax, SemigroupComparison) {
    SplitMix64 rng(13);
    auto s = gen_circle_grid(32);
    ScalarField f(s, random_values(rng, 32));
    auto qs = hopflax::hopf_lax(s, f, 0.05).q;
    auto qts = hopflax::hopf_lax(s, f, 0.15).q;
    auto comp = hopflax::hopf_lax(s, qs, 0.1).q;
    for (std::size_t i = 0; i < 32; ++i) EXPECT_LE(qts[i], comp[i] + 1e-12);
}

TEST(HopfLax, SlopeBoundedByDplus) {
    SplitMix64 rng(14);
    for (std::size_t n : {32, 64}) {
        auto s = gen_circle_grid(n);
        ScalarField f(s, random_values(rng, n));
        const double t = 0.1, h = *s.mesh(), lip = hopflax::lipschitz_constant(s, f);
        auto r = hopflax::hopf_lax(s, f, t);
        auto sl = calculus::slope(s, r.q);
        for (std::size_t x = 0; x < n; ++x) EXPECT_LE(sl.values[x], r.d_plus[x] / t + 4 * h * lip / t);
    }
}
