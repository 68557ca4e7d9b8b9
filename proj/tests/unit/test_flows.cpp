#include "helpers.hpp"
#include "otflow/calculus.hpp"
#include "otflow/error.hpp"
#include "otflow/flows.hpp"
#include "otflow/presets.hpp"
#include "otflow/transport.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace otflow;
using namespace otflow::testutil;
namespace ca = otflow::calculus;
namespace fl = otflow::flows;

namespace {

double jko_objective(const MetricMeasureSpace& s, const Eigen::MatrixXd& g, const std::vector<std::size_t>& rows,
                     double tau) {
    std::vector<double> b(s.n(), 0.0);
    double cost = 0;
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < s.n(); ++j) {
            double w = g(Eigen::Index(r), Eigen::Index(j));
            b[j] += w;
            cost += s.dist(rows[r], j) * s.dist(rows[r], j) * w;
        }
    return cost / (2 * tau) + transport::relative_entropy(b, s.measure());
}

std::vector<double> scaled(const std::vector<double>& v, double a) {
    auto r = v;
    for (auto& x : r) x *= a;
    return r;
}

}  // namespace

TEST(HeatFlow, ConstantStaysConstant) {
    auto s = gen_circle_grid(16);
    for (auto be : {ca::EnergyBackend::quadratic(s), ca::EnergyBackend::slope(s)}) {
        auto t = fl::heat_flow(s, ScalarField(s, std::vector<double>(16, 0.7)), be, 1e-3, 4);
        for (const auto& f : t.fields)
            for (double v : f) EXPECT_NEAR(v, 0.7, 1e-12);
    }
}

TEST(HeatFlow, FourierModeDecay) {
    auto s = gen_circle_grid(64);
    auto f0 = preset_field("cosine_mode", {{"k", 1}}, s);
    const double tau = 1e-3, h = 1.0 / 64;
    const std::size_t M = 50;
    auto t = fl::heat_flow(s, f0, ca::EnergyBackend::quadratic(s), tau, M);
    double lambda = 2 * (1 - std::cos(2 * std::numbers::pi * h)) / (h * h);
    double factor = std::pow(1 + tau * lambda, -double(M));
    for (std::size_t i = 0; i < 64; ++i)
        EXPECT_NEAR(t.fields.back()[i], 1 + factor * std::cos(2 * std::numbers::pi * i * h), 1e-10);
    EXPECT_EQ(t.times.size(), M + 1);
    EXPECT_NEAR(t.times.back(), 0.05, 1e-15);
}

TEST(HeatFlow, SlopeBackendOnLinfGrid) {
    const std::size_t side = 6;
    auto g = gen_box_grid(side, Norm::linf);
    std::vector<double> f(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) f[i] = g.coords()[i][0] + g.coords()[i][1];
    auto be = ca::EnergyBackend::slope(g);
    auto t = fl::heat_flow(g, ScalarField(g, f), be, 1e-2, 4);
    for (std::size_t k = 0; k + 1 < t.fields.size(); ++k) {
        const auto& a = t.fields[k];
        const auto& b = t.fields[k + 1];
        EXPECT_LE(ca::cheeger_energy(g, b, be), ca::cheeger_energy(g, a, be) + 1e-9);
        for (std::size_t i = 0; i < g.n(); ++i) {
            if (i % side + 1 < side) EXPECT_LE(b[i], b[i + 1] + 1e-7);
            if (i + side < g.n()) EXPECT_LE(b[i], b[i + side] + 1e-7);
        }
    }
}

TEST(HeatFlow, EnergyInequalityPerStep) {
    SplitMix64 rng(41);
    auto s = gen_circle_grid(32);
    ScalarField f0(s, random_values(rng, 32));
    for (auto be : {ca::EnergyBackend::quadratic(s), ca::EnergyBackend::slope(s)}) {
        const double tau = 2e-3;
        auto t = fl::heat_flow(s, f0, be, tau, 5);
        for (std::size_t k = 0; k + 1 < t.fields.size(); ++k) {
            double q = 0;
            for (std::size_t i = 0; i < 32; ++i)
                q += s.mass(i) * std::pow(t.fields[k + 1][i] - t.fields[k][i], 2);
            EXPECT_LE(ca::cheeger_energy(s, t.fields[k + 1], be) + q / (2 * tau),
                      ca::cheeger_energy(s, t.fields[k], be) + 1e-8);
        }
    }
}

TEST(HeatFlow, ComparisonAndLinearity) {
    SplitMix64 rng(42);
    auto s = gen_box_grid(6, Norm::euclidean);
    auto be = ca::EnergyBackend::quadratic(s);
    auto f = random_values(rng, s.n()), g = random_values(rng, s.n());
    auto up = f;
    for (std::size_t i = 0; i < up.size(); ++i) up[i] += rng.uniform(0, 0.5);
    const double a = 0.7, b = -1.3;
    std::vector<double> comb(s.n());
    for (std::size_t i = 0; i < s.n(); ++i) comb[i] = a * f[i] + b * g[i];
    auto tf = fl::heat_flow(s, ScalarField(s, f), be, 1e-3, 5);
    auto tg = fl::heat_flow(s, ScalarField(s, g), be, 1e-3, 5);
    auto tu = fl::heat_flow(s, ScalarField(s, up), be, 1e-3, 5);
    auto tc = fl::heat_flow(s, ScalarField(s, comb), be, 1e-3, 5);
    for (std::size_t k = 0; k <= 5; ++k)
        for (std::size_t i = 0; i < s.n(); ++i) {
            EXPECT_LE(tf.fields[k][i], tu.fields[k][i] + 1e-9);
            EXPECT_NEAR(tc.fields[k][i], a * tf.fields[k][i] + b * tg.fields[k][i], 1e-9);
        }
}

TEST(HeatFlow, OneHomogeneous) {
    SplitMix64 rng(43);
    auto s = gen_box_grid(5, Norm::linf);
    auto f = random_values(rng, s.n());
    for (auto be : {ca::EnergyBackend::quadratic(s), ca::EnergyBackend::slope(s)}) {
        auto t1 = fl::heat_flow(s, ScalarField(s, f), be, 5e-3, 3);
        auto t3 = fl::heat_flow(s, ScalarField(s, scaled(f, 3.0)), be, 5e-3, 3);
        for (std::size_t k = 0; k <= 3; ++k)
            for (std::size_t i = 0; i < s.n(); ++i) EXPECT_NEAR(t3.fields[k][i], 3 * t1.fields[k][i], 1e-7);
    }
}

TEST(JKO, UniformIsFixed) {
    auto s = gen_circle_grid(16);
    auto t = fl::jko_flow(s, DensityField(s, std::vector<double>(16, 1.0)), 1e-2, 3);
    for (const auto& f : t.fields)
        for (double v : f) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(JKO, TwoPointScalarOracle) {
    auto s = two_point();
    auto step = fl::jko_step(s, {0.75, 0.25}, 0.5);
    // grid search over the transported mass p
    double best_p = 0, best = INFINITY;
    for (long i = 0; i <= 500000; ++i) {
        double p = double(i) * 1e-6;
        double b0 = 0.75 - p, b1 = 0.25 + p;
        double v = p / (2 * 0.5) + (b0 > 0 ? b0 * std::log(b0 / 0.5) : 0) + b1 * std::log(b1 / 0.5);
        if (v < best) best = v, best_p = p;
    }
    EXPECT_NEAR(best_p, 0.0189, 1e-4);
    EXPECT_NEAR(step.masses[1] - 0.25, best_p, 2e-6);
    EXPECT_NEAR(step.masses[0] + step.masses[1], 1.0, 1e-14);
    EXPECT_LE(step.kkt_residual, 1e-7);
}

// moving mass eps inside any row from column j to column k never helps
TEST(JKO, SmallSpacesAreLocallyOptimal) {
    SplitMix64 rng(44);
    for (int rep = 0; rep < 10; ++rep) {
        auto s = random_space(rng, 3 + rng.below(3));
        auto a = random_density(rng, s, 0.05).masses(s);
        const double tau = rng.uniform(0.01, 0.5);
        auto r = fl::jko_step(s, a, tau);
        double base = jko_objective(s, r.gamma, r.rows, tau);
        for (std::size_t row = 0; row < r.rows.size(); ++row) {
            EXPECT_NEAR(r.gamma.row(Eigen::Index(row)).sum(), a[r.rows[row]], 1e-12);
            for (std::size_t j = 0; j < s.n(); ++j)
                for (std::size_t k = 0; k < s.n(); ++k) {
                    double eps = std::min(1e-6, r.gamma(Eigen::Index(row), Eigen::Index(j)));
                    if (j == k || eps <= 0) continue;
                    auto g = r.gamma;
                    g(Eigen::Index(row), Eigen::Index(j)) -= eps;
                    g(Eigen::Index(row), Eigen::Index(k)) += eps;
                    EXPECT_GE(jko_objective(s, g, r.rows, tau), base - 1e-12);
                }
        }
    }
}

TEST(JKO, EntropyDecreasesAndMassIsKept) {
    auto s = gen_circle_grid(32);
    auto mu0 = preset_density("cosine_mode", {{"k", 1}}, s);
    auto t = fl::jko_flow(s, mu0, 2e-3, 5);
    auto ent = fl::entropy_along(s, t);
    for (std::size_t k = 0; k + 1 < ent.size(); ++k) EXPECT_LE(ent[k + 1], ent[k] + 1e-12);
    for (std::size_t k = 0; k <= 5; ++k) EXPECT_NO_THROW(t.density_at(s, k));
}

TEST(MetricSpeed, Examples) {
    auto s = two_point();
    fl::Trajectory t;
    t.space_id = s.id();
    t.kind = fl::FlowKind::jko_entropy;
    t.density = true;
    t.tau = 0.5;
    t.times = {0.0, 0.5, 1.0};
    t.fields = {{1.5, 0.5}, {1.2, 0.8}, {1.2, 0.8}};
    auto v = fl::metric_speed(s, t);
    ASSERT_EQ(v.size(), 2u);
    double cost = transport::w2_exact(s, DensityField(s, {1.5, 0.5}), DensityField(s, {1.2, 0.8})).cost;
    EXPECT_NEAR(v[0], std::sqrt(cost) / 0.5, 1e-14);
    EXPECT_EQ(v[1], 0.0);
    auto r = t;
    std::reverse(r.fields.begin(), r.fields.end());
    auto w = fl::metric_speed(s, r);
    EXPECT_NEAR(w[0], v[1], 1e-15);
    EXPECT_NEAR(w[1], v[0], 1e-15);
}

TEST(EntropyAlong, Examples) {
    auto s = gen_circle_grid(4);
    fl::Trajectory t;
    t.space_id = s.id();
    t.density = true;
    t.times = {0.0, 1.0};
    t.fields = {{1, 1, 1, 1}, {4, 0, 0, 0}};
    auto e = fl::entropy_along(s, t);
    EXPECT_EQ(e[0], 0.0);
    EXPECT_NEAR(e[1], 1.386294, 1e-6);
    EXPECT_EQ(fl::fisher_along(s, t)[0], 0.0);
}

// d/dt Ent = -Fisher up to the O(h) bias of the two-sided slope
TEST(EntropyAlong, HeatFlowDissipation) {
    auto worst_rel = [](std::size_t n) {
        auto s = gen_circle_grid(n);
        auto mu0 = preset_density("cosine_mode", {{"k", 1}, {"amplitude", 0.5}}, s);
        const double tau = 1e-5;
        auto t = fl::heat_flow(s, mu0.as_scalar(), ca::EnergyBackend::quadratic(s), tau, 20);
        auto ent = fl::entropy_along(s, t);
        auto fis = fl::fisher_along(s, t);
        double worst = 0;
        for (std::size_t k = 0; k + 1 < ent.size(); ++k) {
            EXPECT_LE(ent[k + 1], ent[k]);
            double rate = (ent[k + 1] - ent[k]) / tau;
            worst = std::max(worst, std::abs(rate + 0.5 * (fis[k] + fis[k + 1])) / fis[k]);
        }
        auto id = fl::fisher_identity_residual(s, t);
        for (std::size_t k = 0; k < id.size(); ++k) EXPECT_LE(id[k], 4.0 / double(n) * fis[k]);
        return worst;
    };
    double r64 = worst_rel(64), r128 = worst_rel(128);
    EXPECT_LE(r64, 8.0 / 64);
    EXPECT_LE(r128, 0.65 * r64);
}

TEST(Trajectory, FileRoundTrip) {
    TempDir tmp("traj");
    auto s = gen_circle_grid(12);
    auto t = fl::jko_flow(s, preset_density("bump", {}, s), 1e-2, 2);
    fl::write_trajectory(t, tmp.path / "jko");
    auto back = fl::read_trajectory(s, tmp.path / "jko");
    EXPECT_EQ(back.fields, t.fields);
    EXPECT_EQ(back.times, t.times);
    EXPECT_EQ(back.kind, t.kind);
    EXPECT_EQ(back.tau, t.tau);
    EXPECT_TRUE(back.density);
    EXPECT_THROW(fl::read_trajectory(gen_circle_grid(13), tmp.path / "jko"), DimensionMismatch);
}
