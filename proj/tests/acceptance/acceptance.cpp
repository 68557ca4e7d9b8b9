#include <unistd.h>
// Acceptance run: one PASS/FAIL line per criterion, exit status = number of failures.
// Usage: acceptance [criterion ...]   (default: all thirteen)

#include "otflow/calculus.hpp"
#include "otflow/diagnostics.hpp"
#include "otflow/error.hpp"
#include "otflow/flows.hpp"
#include "otflow/hopflax.hpp"
#include "otflow/pipeline.hpp"
#include "otflow/presets.hpp"
#include "otflow/rng.hpp"
#include "otflow/transport.hpp"
#include "otflow/util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

using namespace otflow;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// random euclidean point cloud in the unit square: always a metric
MetricMeasureSpace random_space(SplitMix64& rng, std::size_t n) {
    std::vector<std::array<double, 2>> p(n);
    for (auto& q : p) q = {rng.uniform(), rng.uniform()};
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) d(Eigen::Index(i), Eigen::Index(j)) = std::hypot(p[i][0] - p[j][0], p[i][1] - p[j][1]);
    std::vector<double> m(n);
    double total = 0.0;
    for (auto& x : m) total += (x = rng.uniform(0.2, 1.0));
    for (auto& x : m) x /= total;
    double rest = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) rest += m[i];
    m[n - 1] = 1.0 - rest;
    return make_space(d, m);
}

std::vector<double> random_values(SplitMix64& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

// ---------------------------------------------------------------------------

Outcome c1_hopf_lax_monotonicity() {
    SplitMix64 rng(101);
    double worst = 0.0;
    bool ok = true;
    for (int s = 0; s < 50; ++s) {
        std::size_t n = 2 + rng.below(31);
        auto space = random_space(rng, n);
        ScalarField f(space, random_values(rng, n, -1.0, 1.0));
        for (int p = 0; p < 5; ++p) {
            double t = rng.uniform(0.01, 1.0), u = rng.uniform(0.01, 1.0);
            auto r = hopflax::check_dpm_monotone(space, f, {std::min(t, u), std::max(t, u)});
            double v = r.residuals.at("max_violation");
            worst = std::max(worst, v / space.diameter());
            ok = ok && v <= 1e-12 * space.diameter();
        }
    }
    return {ok, "max violation / diam = " + fmt("%.3g", worst)};
}

Outcome c2_hj_supersolution() {
    std::vector<double> res, hs;
    for (std::size_t n : {32, 64, 128}) {
        auto space = gen_circle_grid(n);
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = space.dist(i, 0);
        auto pw = hopflax::hj_pointwise(space, ScalarField(space, f), 0.1, 0.0);
        res.push_back(*std::max_element(pw.r_sup.begin(), pw.r_sup.end()));
        hs.push_back(1.0 / double(n));
    }
    // least-squares slope of log r against log h
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < 3; ++k) mx += std::log(hs[k]) / 3.0, my += std::log(res[k]) / 3.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        sxy += (std::log(hs[k]) - mx) * (std::log(res[k]) - my);
        sxx += (std::log(hs[k]) - mx) * (std::log(hs[k]) - mx);
    }
    const double order = sxy / sxx;
    bool ok = order >= 0.8 && res[2] <= 0.1;
    return {ok, "residuals " + fmt("%.4g", res[0]) + ", " + fmt("%.4g", res[1]) + ", " + fmt("%.4g", res[2]) +
                    "; fitted order " + fmt("%.3f", order)};
}

// cost of the coupling u -> (F^-1(u), G^-1(u + theta mod 1)) on positions i/n with circle distance
double cyclic_quantile_cost(const std::vector<double>& a, const std::vector<double>& b, double theta,
                            const std::function<double(std::size_t, std::size_t)>& d) {
    const std::size_t n = a.size();
    std::vector<double> A(n + 1, 0.0), B(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) A[i + 1] = A[i] + a[i], B[i + 1] = B[i] + b[i];
    A[n] = B[n] = 1.0;
    std::vector<double> cuts{0.0, 1.0};
    for (std::size_t k = 0; k <= n; ++k) {
        cuts.push_back(A[k]);
        double c = B[k] - theta;
        c -= std::floor(c);
        cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    double cost = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double len = cuts[k + 1] - cuts[k];
        if (len <= 0.0) continue;
        double u = 0.5 * (cuts[k] + cuts[k + 1]);
        double v = u + theta;
        v -= std::floor(v);
        std::size_t i = std::size_t(std::upper_bound(A.begin(), A.end(), u) - A.begin()) - 1;
        std::size_t j = std::size_t(std::upper_bound(B.begin(), B.end(), v) - B.begin()) - 1;
        i = std::min(i, n - 1), j = std::min(j, n - 1);
        double dd = d(i, j);
        cost += len * dd * dd;
    }
    return cost;
}

double circle_oracle(const MetricMeasureSpace& s, const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    std::vector<double> A(n + 1, 0.0), B(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) A[i + 1] = A[i] + a[i], B[i + 1] = B[i] + b[i];
    // the cost is piecewise linear in theta: scan every breakpoint
    std::set<double> thetas;
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = 0; j <= n; ++j) {
            double t = B[j] - A[i];
            thetas.insert(t - std::floor(t));
        }
    double best = std::numeric_limits<double>::infinity();
    auto d = [&](std::size_t i, std::size_t j) { return s.dist(i, j); };
    for (double t : thetas) best = std::min(best, cyclic_quantile_cost(a, b, t, d));
    return best;
}

// basic feasible solutions of the transport LP: spanning trees of K_{n,n} with nonnegative flows
double vertex_enumeration(const Eigen::MatrixXd& cost, const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size(), cells = n * n, k = 2 * n - 1;
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> pick(k);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
        if (depth == k) {
            std::vector<std::size_t> parent(2 * n);
            for (std::size_t u = 0; u < 2 * n; ++u) parent[u] = u;
            std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
                return parent[x] == x ? x : parent[x] = find(parent[x]);
            };
            for (std::size_t c : pick) {
                std::size_t u = find(c / n), v = find(n + c % n);
                if (u == v) return;
                parent[u] = v;
            }
            std::vector<double> net(2 * n);
            for (std::size_t i = 0; i < n; ++i) net[i] = a[i], net[n + i] = -b[i];
            std::vector<char> used(k, 0);
            double total = 0.0;
            for (std::size_t round = 0; round < k; ++round) {
                bool progressed = false;
                for (std::size_t u = 0; u < 2 * n && !progressed; ++u) {
                    std::size_t deg = 0, last = 0;
                    for (std::size_t e = 0; e < k; ++e)
                        if (!used[e] && (pick[e] / n == u || n + pick[e] % n == u)) ++deg, last = e;
                    if (deg != 1) continue;
                    std::size_t i = pick[last] / n, j = pick[last] % n;
                    double flow = u < n ? net[u] : -net[u];
                    if (flow < -1e-12) return;
                    net[i] -= flow;
                    net[n + j] += flow;
                    used[last] = 1;
                    total += flow * cost(Eigen::Index(i), Eigen::Index(j));
                    progressed = true;
                }
                if (!progressed) return;
            }
            best = std::min(best, total);
            return;
        }
        for (std::size_t c = start; c + (k - depth) <= cells; ++c) {
            pick[depth] = c;
            rec(c + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

Outcome c3_ot_oracles() {
    SplitMix64 rng(303);
    double worst_1d = 0.0, worst_gap = 0.0, worst_vertex = 0.0;
    for (std::size_t n : {8, 16, 33, 64, 128}) {
        for (int kind = 0; kind < 2; ++kind) {
            auto s = kind == 0 ? gen_path_grid(n) : gen_circle_grid(n);
            for (int rep = 0; rep < 3; ++rep) {
                auto mu = DensityField::normalized(s, random_values(rng, n, 0.0, 1.0));
                auto nu = DensityField::normalized(s, random_values(rng, n, 0.0, 1.0));
                auto a = mu.masses(s), b = nu.masses(s);
                double exact = transport::w2_exact(s, mu, nu).cost;
                double oracle = kind == 0 ? cyclic_quantile_cost(a, b, 0.0, [&](std::size_t i, std::size_t j) {
                    return s.dist(i, j);
                })
                                          : circle_oracle(s, a, b);
                worst_1d = std::max(worst_1d, std::abs(exact - oracle));
            }
        }
    }
    for (int rep = 0; rep < 20; ++rep) {
        std::size_t n = 2 + rng.below(7);
        auto s = random_space(rng, n);
        auto mu = DensityField::normalized(s, random_values(rng, n, 0.05, 1.0));
        auto nu = DensityField::normalized(s, random_values(rng, n, 0.05, 1.0));
        auto sol = transport::solve_exact(s, mu, nu);
        auto a = mu.masses(s), b = nu.masses(s);
        // certificate: primal feasible, dual feasible, zero gap
        double dual = 0.0, infeas = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dual += sol.potentials.psi[i] * a[i] + sol.potentials.psi_c[i] * b[i];
            infeas = std::max(infeas, std::abs(sol.plan.gamma.row(Eigen::Index(i)).sum() - a[i]));
            infeas = std::max(infeas, std::abs(sol.plan.gamma.col(Eigen::Index(i)).sum() - b[i]));
            for (std::size_t j = 0; j < n; ++j) {
                double d = s.dist(i, j);
                infeas = std::max(infeas, sol.potentials.psi[i] + sol.potentials.psi_c[j] - 0.5 * d * d);
                infeas = std::max(infeas, -sol.plan.gamma(Eigen::Index(i), Eigen::Index(j)));
            }
        }
        worst_gap = std::max({worst_gap, std::abs(0.5 * sol.plan.cost - dual), infeas});
        if (n <= 4) {
            Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) c(Eigen::Index(i), Eigen::Index(j)) = s.dist(i, j) * s.dist(i, j);
            worst_vertex = std::max(worst_vertex, std::abs(vertex_enumeration(c, a, b) - sol.plan.cost));
        }
    }
    bool ok = worst_1d <= 1e-8 && worst_gap <= 1e-8 && worst_vertex <= 1e-8;
    return {ok, "1-D oracle " + fmt("%.3g", worst_1d) + ", certificate " + fmt("%.3g", worst_gap) +
                    ", vertex enumeration " + fmt("%.3g", worst_vertex)};
}

Outcome c4_involution() {
    SplitMix64 rng(404);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        std::size_t n = 2 + rng.below(63);
        auto s = rep % 2 ? random_space(rng, n) : gen_circle_grid(std::max<std::size_t>(n, 3));
        n = s.n();
        auto psi = random_values(rng, n, -1.0, 1.0);
        auto c1 = transport::c_transform_values(s, psi);
        auto c3 = transport::c_transform_values(s, transport::c_transform_values(s, c1));
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(c3[i] - c1[i]));
    }
    return {worst <= 1e-12, "max |psi^ccc - psi^c| = " + fmt("%.3g", worst)};
}

struct FlowPair {
    MetricMeasureSpace space;
    flows::Trajectory heat, jko;
};

std::vector<double> cosine_density(const MetricMeasureSpace& s) {
    return preset_density("cosine_mode", {{"k", 1.0}}, s).values();
}

FlowPair run_pair(std::size_t n, double tau, double T) {
    auto s = gen_circle_grid(n);
    auto mu0 = DensityField(s, cosine_density(s));
    std::size_t M = std::size_t(std::llround(T / tau));
    auto heat = flows::heat_flow(s, mu0.as_scalar(), calculus::EnergyBackend::quadratic(s), tau, M);
    auto jko = flows::jko_flow(s, mu0, tau, M);
    return {s, std::move(heat), std::move(jko)};
}

// shared by criteria 5 to 7
const FlowPair& coarse_pair() {
    static FlowPair p = run_pair(64, 1e-3, 0.05);
    return p;
}
const FlowPair& fine_pair() {
    static FlowPair p = run_pair(128, 5e-4, 0.05);
    return p;
}

Outcome c5_heat_equals_entropy_flow() {
    const auto& a = coarse_pair();
    const auto& b = fine_pair();
    double g1 = flows::l1_gap(a.space, a.heat, a.jko), g2 = flows::l1_gap(b.space, b.heat, b.jko);
    bool ok = g1 <= 0.05 && g2 < g1;
    return {ok, "L1 gap " + fmt("%.4g", g1) + " (n=64, tau=1e-3), " + fmt("%.4g", g2) + " (n=128, tau=5e-4)"};
}

Outcome c6_ede() {
    const auto& a = coarse_pair();
    auto r = diagnostics::ede_residual(a.space, a.jko);
    double ede = r.residuals.at("ede_max"), ineq = r.residuals.at("ede_inequality");
    bool ok = ede <= 0.05 && ineq <= 1e-6;
    return {ok, "EDE residual " + fmt("%.4g", ede) + ", inequality excess " + fmt("%.3g", ineq)};
}

// heat flow of the same cosine family with density bounded below
double kuwada_violation(std::size_t n, double tau) {
    auto s = gen_circle_grid(n);
    auto f0 = preset_density("cosine_mode", {{"k", 1.0}, {"amplitude", 0.5}}, s);
    auto heat = flows::heat_flow(s, f0.as_scalar(), calculus::EnergyBackend::quadratic(s), tau,
                                 std::size_t(std::llround(0.05 / tau)));
    return diagnostics::kuwada_check(s, heat).residuals.at("max_violation");
}

Outcome c7_kuwada() {
    double v1 = kuwada_violation(64, 1e-3), v2 = kuwada_violation(128, 5e-4);
    bool ok = v1 <= 0.02 && v2 <= v1;
    return {ok, "max (speed^2 - Fisher)+ " + fmt("%.4g", v1) + " (n=64), " + fmt("%.4g", v2) + " (n=128)"};
}

double brenier_ratio(std::size_t n) {
    auto s = gen_circle_grid(n);
    auto mu0 = preset_density("constant", {}, s);
    auto mu1 = preset_density("bump", {{"center", 0.3}, {"width", 0.08}}, s);
    auto r = diagnostics::brenier_check(s, mu0, mu1);
    return r.context.at("relative_b").get<double>();
}

Outcome c8_brenier() {
    double r1 = brenier_ratio(128), r2 = brenier_ratio(256);
    double q = r2 / r1;
    bool ok = r1 <= 0.1 && q >= 0.35 && q <= 0.65;
    return {ok, "relative error " + fmt("%.4g", r1) + " (n=128), " + fmt("%.4g", r2) + " (n=256), ratio " +
                    fmt("%.3f", q)};
}

Outcome c9_quadraticity() {
    bool ok = true;
    std::ostringstream msg;
    double worst_circle = 0.0;
    for (std::size_t n : {32, 64, 128}) {
        auto s = gen_circle_grid(n);
        auto b = calculus::EnergyBackend::slope(s);
        std::vector<ScalarField> probes;
        for (double k : {1.0, 2.0, 3.0})
            probes.push_back(preset_field("cosine_mode",
                                          {{"k", k}, {"offset", 0.0}, {"amplitude", 1.0 / (2.0 * std::numbers::pi * k)}},
                                          s));
        for (std::size_t i = 0; i < probes.size(); ++i)
            for (std::size_t j = i + 1; j < probes.size(); ++j) {
                double d = calculus::parallelogram_defect(s, probes[i], probes[j], b);
                worst_circle = std::max(worst_circle, d / (2.0 * b.radius()));
                ok = ok && d <= 2.0 * b.radius();
            }
    }
    msg << "circle defect/2h max " << fmt("%.3g", worst_circle);
    double min_box = std::numeric_limits<double>::infinity();
    for (std::size_t side : {5, 9, 17, 33}) {
        auto s = gen_box_grid(side, Norm::linf);
        ScalarField x(s, preset_field("ramp", {}, s).values());
        std::vector<double> yv(s.n());
        for (std::size_t i = 0; i < s.n(); ++i) yv[i] = s.coords()[i][1];
        ScalarField y(s, yv);
        double d = calculus::parallelogram_defect(s, x, y, calculus::EnergyBackend::slope(s));
        min_box = std::min(min_box, d);
        ok = ok && d >= 1.0;
    }
    msg << "; linf defect min " << fmt("%.4g", min_box);
    auto s = gen_box_grid(9, Norm::linf);
    std::vector<double> xv(s.n()), yv(s.n());
    for (std::size_t i = 0; i < s.n(); ++i) xv[i] = s.coords()[i][0], yv[i] = s.coords()[i][1];
    ScalarField x(s, xv), y(s, yv);
    const double h = *s.mesh();
    double add_slope = diagnostics::flow_additivity_defect(s, x, y, calculus::EnergyBackend::slope(s), h * h, 5);
    auto sc = gen_circle_grid(64);
    ScalarField p1(sc, preset_field("cosine_mode", {{"k", 1.0}}, sc).values());
    ScalarField p2(sc, preset_field("bump", {}, sc).values());
    double add_quad = diagnostics::flow_additivity_defect(sc, p1, p2, calculus::EnergyBackend::quadratic(sc),
                                                          1.0 / (64.0 * 64.0), 5);
    double add_quad_box = diagnostics::flow_additivity_defect(s, x, y, calculus::EnergyBackend::quadratic(s), h * h, 5);
    add_quad = std::max(add_quad, add_quad_box);
    ok = ok && add_slope >= 1e-3 && add_quad <= 1e-9;
    msg << "; additivity slope/linf " << fmt("%.3g", add_slope) << ", quadratic " << fmt("%.3g", add_quad);
    return {ok, msg.str()};
}

Outcome c10_convexity() {
    auto s = gen_circle_grid(128);
    auto mu0 = preset_density("bump", {{"center", 0.25}, {"width", 0.06}}, s);
    auto mu1 = preset_density("bump", {{"center", 0.6}, {"width", 0.1}}, s);
    const double h = 1.0 / 128.0;
    auto r0 = diagnostics::displacement_convexity_check(s, mu0, mu1, 0.0, 8);
    auto r50 = diagnostics::displacement_convexity_check(s, mu0, mu1, 50.0, 8);
    double v0 = r0.residuals.at("weak_violation"), v50 = r50.residuals.at("weak_violation");
    bool ok = v0 <= 2.0 * h && v50 > 0.01;
    return {ok, "K=0 violation " + fmt("%.3g", v0) + " (2h = " + fmt("%.3g", 2.0 * h) + "), K=50 violation " +
                    fmt("%.4g", v50)};
}

Outcome c11_pushforward() {
    SplitMix64 rng(1111);
    double worst = -std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 200; ++rep) {
        std::size_t n = 2 + rng.below(15);
        auto s = rep % 2 ? random_space(rng, n) : gen_circle_grid(std::max<std::size_t>(n, 3));
        n = s.n();
        auto mu = DensityField::normalized(s, random_values(rng, n, 0.0, 1.0));
        auto nu = DensityField::normalized(s, random_values(rng, n, 0.1, 1.0));
        // bounded deformation: each row spreads over a few targets with weights in [0.5, 1.5]
        transport::TransportPlan g;
        g.space_id = s.id();
        g.gamma = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t k = 1 + rng.below(3);
            for (std::size_t t = 0; t < k; ++t) g.gamma(Eigen::Index(i), Eigen::Index(rng.below(n))) += rng.uniform(0.5, 1.5);
        }
        auto [gm, pm] = transport::push_forward_plan(s, g, mu);
        auto [gn, pn] = transport::push_forward_plan(s, g, nu);
        double lhs = transport::relative_entropy(pm.masses(s), pn.masses(s));
        double rhs = transport::relative_entropy(mu.masses(s), nu.masses(s));
        worst = std::max(worst, lhs - rhs);
    }
    return {worst <= 1e-9, "max Ent(push mu|push nu) - Ent(mu|nu) = " + fmt("%.3g", worst)};
}

Outcome c12_ede_demo() {
    auto r = diagnostics::ede_nonuniqueness_demo(21);
    double a = r.residuals.at("straight"), b = r.residuals.at("diagonal");
    double c = r.context.at("out_of_family_residual").get<double>();
    bool ok = a <= 1e-9 && b <= 1e-9 && c > 0.1;
    return {ok, "straight " + fmt("%.3g", a) + ", diagonal " + fmt("%.3g", b) + ", |y'|=2 " + fmt("%.4g", c)};
}

Outcome c13_determinism() {
    fs::path root = fs::temp_directory_path() / ("otflow_acceptance_" + std::to_string(::getpid()));
    const std::string text =
        "space.kind = circle\nspace.n = 64\nfield.kind = cosine_mode\nfield.k = 1\n"
        "flow.kind = both\nflow.backend = quadratic\nflow.tau = 1e-3\nflow.steps = 50\n"
        "diag.list = gap, ede\nrun.seed = 7\n";
    std::string digests[2];
    for (int run = 0; run < 2; ++run) {
        auto cfg = parse_run_config(text + "run.out = " + (root / ("run" + std::to_string(run))).string() + "\n");
        auto res = run_pipeline(cfg);
        digests[run] = sha256_file(res.manifest);
    }
    fs::remove_all(root);
    return {digests[0] == digests[1], "manifest sha256 " + digests[0].substr(0, 16) + " / " + digests[1].substr(0, 16)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"hopf-lax monotonicity", c1_hopf_lax_monotonicity},
        {"hj supersolution", c2_hj_supersolution},
        {"ot oracle equivalence", c3_ot_oracles},
        {"c-transform involution", c4_involution},
        {"heat flow = entropy flow", c5_heat_equals_entropy_flow},
        {"ede residual", c6_ede},
        {"kuwada", c7_kuwada},
        {"metric brenier", c8_brenier},
        {"riemannian/finsler discrimination", c9_quadraticity},
        {"displacement convexity", c10_convexity},
        {"pushforward entropy contraction", c11_pushforward},
        {"ede non-uniqueness", c12_ede_demo},
        {"determinism", c13_determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (!only.empty() && !only.count(int(k + 1))) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const Error& e) {
            o = {false, std::string("error ") + e.module() + ": " + e.what()};
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures;
}
