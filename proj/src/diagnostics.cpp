#include "otflow/diagnostics.hpp"

#include "otflow/calculus.hpp"
#include "otflow/error.hpp"
#include "otflow/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace otflow::diagnostics {

namespace {

void require_density(const flows::Trajectory& traj, const char* what) {
    if (!traj.density) throw InvalidArgument("diagnostics", std::string(what) + " needs a density trajectory");
    if (traj.fields.empty()) throw InvalidArgument("diagnostics", "empty trajectory");
}

double time_step(const flows::Trajectory& traj) {
    return traj.tau > 0.0 ? traj.tau : (traj.times.size() > 1 ? traj.times[1] - traj.times[0] : 0.0);
}

void stamp(DiagnosticsReport& r, double tau, double h, double C) {
    r.context["tau"] = tau;
    r.context["h"] = h;
    r.context["C"] = C;
}

}  // namespace

DiagnosticsReport ede_residual(const MetricMeasureSpace& space, const flows::Trajectory& traj, double C,
                               double slack) {
    require_density(traj, "ede_residual");
    const double h = space.mesh_or_min_dist(), tau = time_step(traj);
    auto ent = flows::entropy_along(space, traj);
    auto fisher = flows::fisher_along(space, traj);
    std::vector<double> speed;
    if (traj.fields.size() > 1) speed = flows::w2_speed(space, traj);
    double kinetic = 0.0, dissipation = 0.0, worst = 0.0, worst_ineq = 0.0;
    std::vector<double> per_t{0.0};
    for (std::size_t k = 0; k + 1 < traj.fields.size(); ++k) {
        double dt = traj.times[k + 1] - traj.times[k];
        kinetic += 0.5 * speed[k] * speed[k] * dt;
        dissipation += 0.5 * 0.5 * (fisher[k] + fisher[k + 1]) * dt;
        double balance = ent[0] - ent[k + 1] - kinetic - dissipation;
        if (std::isnan(balance)) balance = -std::numeric_limits<double>::infinity();
        worst = std::max(worst, std::abs(balance));
        worst_ineq = std::max(worst_ineq, balance);
        per_t.push_back(std::abs(balance));
    }
    DiagnosticsReport r;
    r.name = "ede";
    r.add("ede_max", worst, C * (tau + h));
    r.add("ede_inequality", std::max(0.0, worst_ineq), slack);
    r.context["per_time"] = nlohmann::json::array();
    for (double v : per_t) r.context["per_time"].push_back(json_number(v));
    r.context["final_residual"] = json_number(per_t.back());
    r.context["kinetic"] = json_number(kinetic);
    r.context["dissipation"] = json_number(dissipation);
    r.context["entropy_drop"] = json_number(ent.front() - ent.back());
    r.context["flow_kind"] = flows::to_string(traj.kind);
    stamp(r, tau, h, C);
    return r;
}

DiagnosticsReport evi_residual(const MetricMeasureSpace& space, const flows::Trajectory& traj,
                               const std::vector<DensityField>& probes, double K, double C) {
    require_density(traj, "evi_residual");
    const double h = space.mesh_or_min_dist(), tau = time_step(traj);
    auto dens = traj.densities(space);
    auto ent = flows::entropy_along(space, traj);
    double worst = 0.0;
    for (const auto& z : probes) {
        require_same_space(space, z.space_id(), z.size(), "diagnostics");
        const double ent_z = transport::entropy(space, z);
        std::vector<double> w2;
        for (const auto& mu : dens) w2.push_back(transport::w2_exact(space, mu, z).cost);
        for (std::size_t k = 0; k + 1 < dens.size(); ++k) {
            double dt = traj.times[k + 1] - traj.times[k];
            double v = 0.5 * (w2[k + 1] - w2[k]) + 0.5 * K * 0.5 * (w2[k] + w2[k + 1]) * dt +
                       0.5 * (ent[k] + ent[k + 1]) * dt - dt * ent_z;
            worst = std::max(worst, v / dt);
        }
    }
    DiagnosticsReport r;
    r.name = "evi";
    r.add("evi_max", worst, C * (tau + h));
    r.context["K"] = K;
    r.context["probes"] = probes.size();
    stamp(r, tau, h, C);
    return r;
}

DiagnosticsReport kuwada_check(const MetricMeasureSpace& space, const flows::Trajectory& traj, double C) {
    require_density(traj, "kuwada_check");
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& f : traj.fields)
        for (double v : f) lowest = std::min(lowest, v);
    if (lowest < 1e-8) throw NotBoundedBelow(lowest);
    const double h = space.mesh_or_min_dist(), tau = time_step(traj);
    auto fisher = flows::fisher_along(space, traj);
    std::vector<double> speed;
    if (traj.fields.size() > 1) speed = flows::w2_speed(space, traj);
    double worst = 0.0, max_speed_sq = 0.0, max_fisher = 0.0;
    for (std::size_t k = 0; k < speed.size(); ++k) {
        double fk = 0.5 * (fisher[k] + fisher[k + 1]);
        worst = std::max(worst, speed[k] * speed[k] - fk);
        max_speed_sq = std::max(max_speed_sq, speed[k] * speed[k]);
        max_fisher = std::max(max_fisher, fk);
    }
    DiagnosticsReport r;
    r.name = "kuwada";
    r.add("max_violation", std::max(0.0, worst), C * (tau + h));
    r.context["max_speed_sq"] = max_speed_sq;
    r.context["max_fisher"] = max_fisher;
    r.context["flow_kind"] = flows::to_string(traj.kind);
    stamp(r, tau, h, C);
    return r;
}

DiagnosticsReport brenier_check(const MetricMeasureSpace& space, const DensityField& mu0, const DensityField& mu1,
                                double C) {
    auto sol = transport::solve_exact(space, mu0, mu1);
    const double h = space.mesh_or_min_dist();
    const auto& psi = sol.potentials.psi.values();
    auto nb = calculus::Neighborhood::build(space, h);
    auto asc = calculus::slope_values(nb, psi, calculus::SlopeVariant::ascending);
    auto two = calculus::slope_values(nb, psi, calculus::SlopeVariant::two_sided);
    double res_a = 0.0, mass = 0.0;
    for (const auto& [x, y, w] : sol.plan.support()) {
        res_a += w * std::abs(space.dist(x, y) - asc[x]);
        mass += w;
    }
    res_a /= std::max(mass, 1e-300);
    double integral = 0.0;
    for (std::size_t i = 0; i < space.n(); ++i) integral += two[i] * two[i] * mu0[i] * space.mass(i);
    const double w2sq = sol.plan.cost;
    DiagnosticsReport r;
    r.name = "brenier";
    r.add("residual_a", res_a, C * h * space.diameter());
    r.add("residual_b", std::abs(w2sq - integral), C * h * w2sq);
    r.context["w2_squared"] = w2sq;
    r.context["slope_integral"] = integral;
    r.context["relative_b"] = w2sq > 0.0 ? std::abs(w2sq - integral) / w2sq : 0.0;
    r.context["duality_gap"] = sol.potentials.gap;
    r.context["h"] = h;
    r.context["C"] = C;
    return r;
}

double flow_additivity_defect(const MetricMeasureSpace& space, const ScalarField& f, const ScalarField& g,
                              const calculus::EnergyBackend& backend, double tau, std::size_t steps) {
    std::vector<double> sum(f.size());
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = f[i] + g[i];
    auto tf = flows::heat_flow(space, f, backend, tau, steps);
    auto tg = flows::heat_flow(space, g, backend, tau, steps);
    auto ts = flows::heat_flow(space, ScalarField(space.id(), sum), backend, tau, steps);
    double worst = 0.0;
    for (std::size_t k = 0; k < ts.fields.size(); ++k)
        for (std::size_t i = 0; i < space.n(); ++i)
            worst = std::max(worst, std::abs(ts.fields[k][i] - tf.fields[k][i] - tg.fields[k][i]));
    return worst;
}

DiagnosticsReport quadraticity_check(const MetricMeasureSpace& space, const std::vector<ScalarField>& probes,
                                     double C, double floor) {
    if (probes.size() < 2) throw InvalidArgument("diagnostics", "quadraticity check needs at least two probes");
    auto backend = calculus::EnergyBackend::slope(space);
    const double h = backend.radius();
    double worst = 0.0;
    for (std::size_t a = 0; a < probes.size(); ++a)
        for (std::size_t b = a + 1; b < probes.size(); ++b)
            worst = std::max(worst, calculus::parallelogram_defect(space, probes[a], probes[b], backend));
    const double additivity = flow_additivity_defect(space, probes[0], probes[1], backend, h * h, 5);
    std::string verdict = "indeterminate";
    if (worst <= C * h && additivity <= C * h) verdict = "riemannian-like";
    else if (worst >= floor) verdict = "finsler-like";
    DiagnosticsReport r;
    r.name = "quadraticity";
    r.add("parallelogram_defect", worst, C * h);
    r.add("flow_additivity_defect", additivity, C * h);
    r.context["verdict"] = verdict;
    r.context["finsler_floor"] = floor;
    stamp(r, h * h, h, C);
    return r;
}

DiagnosticsReport displacement_convexity_check(const MetricMeasureSpace& space, const DensityField& mu0,
                                               const DensityField& mu1, double K, std::size_t M, std::uint64_t seed,
                                               double C) {
    auto plan = transport::geodesic_plan(space, mu0, mu1, M);
    const double h = space.mesh_or_min_dist();
    const auto& m = space.measure();
    auto violation_of = [&](const std::vector<double>& weights) {
        double total = 0.0, w2 = 0.0;
        for (std::size_t c = 0; c < plan.curves.size(); ++c) total += weights[c];
        std::vector<std::vector<double>> slices(plan.slices(), std::vector<double>(space.n(), 0.0));
        for (std::size_t c = 0; c < plan.curves.size(); ++c) {
            const auto& p = plan.curves[c].path;
            double w = weights[c] / total;
            for (std::size_t k = 0; k < p.size(); ++k) slices[k][p[k]] += w;
            w2 += w * space.dist(p.front(), p.back()) * space.dist(p.front(), p.back());
        }
        double e0 = transport::relative_entropy(slices.front(), m), e1 = transport::relative_entropy(slices.back(), m);
        double worst = 0.0;
        for (std::size_t k = 1; k + 1 < plan.slices(); ++k) {
            double t = plan.times[k];
            double bound = (1.0 - t) * e0 + t * e1 - 0.5 * K * t * (1.0 - t) * w2;
            worst = std::max(worst, transport::relative_entropy(slices[k], m) - bound);
        }
        return worst;
    };
    std::vector<double> base(plan.curves.size());
    for (std::size_t c = 0; c < base.size(); ++c) base[c] = plan.curves[c].weight;
    const double weak = violation_of(base);
    SplitMix64 rng(seed);
    double strong = weak;
    for (int rep = 0; rep < 3; ++rep) {
        std::vector<double> w(base.size());
        for (std::size_t c = 0; c < w.size(); ++c) w[c] = base[c] * rng.uniform(0.25, 1.75);
        strong = std::max(strong, violation_of(w));
    }
    DiagnosticsReport r;
    r.name = "convexity";
    r.add("weak_violation", weak, C * h);
    r.add("strong_violation", strong, C * h);
    r.context["K"] = K;
    r.context["slices"] = plan.slices();
    r.context["seed"] = seed;
    r.context["action"] = plan.action(space);
    r.context["h"] = h;
    r.context["C"] = C;
    return r;
}

DiagnosticsReport horizontal_vertical_check(const MetricMeasureSpace& space, const ScalarField& f,
                                            const ScalarField& g, const transport::CurvePlan& plan, double eps,
                                            double C) {
    if (plan.slices() < 2) throw DegeneratePlan("curve plan needs at least two slices");
    const double dt = plan.times[1] - plan.times[0];
    if (!(dt > 0.0)) throw DegeneratePlan("first slice interval is empty");
    double total = 0.0;
    for (const auto& c : plan.curves) total += c.weight;
    if (!(total > 0.0)) throw DegeneratePlan("curve plan carries no mass");
    if (!(eps > 0.0)) throw InvalidArgument("diagnostics", "eps must be positive");
    require_same_space(space, f.space_id(), f.size(), "diagnostics");
    require_same_space(space, g.space_id(), g.size(), "diagnostics");
    const double h = space.mesh_or_min_dist();
    auto nb = calculus::Neighborhood::build(space, h);
    std::vector<double> ge(g.size());
    for (std::size_t i = 0; i < ge.size(); ++i) ge[i] = g[i] + eps * f[i];
    auto sg = calculus::slope_values(nb, g.values()), sge = calculus::slope_values(nb, ge);
    double lhs = 0.0, rhs = 0.0;
    for (const auto& c : plan.curves) {
        std::size_t x0 = c.path[0], x1 = c.path[1];
        lhs += c.weight * (f[x1] - f[x0]) / dt;
        rhs += c.weight * 0.5 * (sg[x0] * sg[x0] - sge[x0] * sge[x0]) / eps;
    }
    lhs /= total;
    rhs /= total;
    DiagnosticsReport r;
    r.name = "horver";
    r.add("violation", std::max(0.0, rhs - lhs), C * (h / dt + eps));
    r.context["lhs"] = lhs;
    r.context["rhs"] = rhs;
    r.context["eps"] = eps;
    r.context["dt"] = dt;
    r.context["h"] = h;
    r.context["C"] = C;
    return r;
}

DiagnosticsReport dw2_heatflow_check(const MetricMeasureSpace& space, const flows::Trajectory& traj,
                                     const DensityField& sigma, double C) {
    require_density(traj, "dw2_heatflow_check");
    const double h = space.mesh_or_min_dist(), tau = time_step(traj);
    auto backend = calculus::EnergyBackend::quadratic(space);
    auto dens = traj.densities(space);
    std::vector<double> half_w2;
    for (const auto& mu : dens) half_w2.push_back(0.5 * transport::w2_exact(space, mu, sigma).cost);
    double worst = 0.0, max_derivative = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k + 1 < dens.size(); ++k) {
        double lhs = (half_w2[k + 1] - half_w2[k - 1]) / (traj.times[k + 1] - traj.times[k - 1]);
        auto pot = transport::kantorovich_potential(space, dens[k], sigma);
        auto lap = calculus::quadratic_laplacian(space, dens[k].values(), backend);
        double rhs = 0.0;
        for (std::size_t i = 0; i < space.n(); ++i) rhs += pot.psi[i] * lap[i] * space.mass(i);
        worst = std::max(worst, std::abs(lhs - rhs));
        max_derivative = std::max(max_derivative, lhs);
    }
    DiagnosticsReport r;
    r.name = "dw2";
    r.add("max_gap", worst, C * (tau + h));
    r.context["max_derivative"] = json_number(max_derivative);
    stamp(r, tau, h, C);
    return r;
}

double curve_ede_residual(const MetricMeasureSpace& space, const std::vector<double>& energy,
                          const std::vector<std::size_t>& path, const std::vector<double>& times) {
    auto nb = calculus::Neighborhood::build(space, space.mesh_or_min_dist());
    auto slope = calculus::slope_values(nb, energy, calculus::SlopeVariant::descending);
    double kinetic = 0.0, dissipation = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        double dt = times[k + 1] - times[k];
        double v = space.dist(path[k], path[k + 1]) / dt;
        kinetic += 0.5 * v * v * dt;
        double s0 = slope[path[k]], s1 = slope[path[k + 1]];
        dissipation += 0.5 * 0.5 * (s0 * s0 + s1 * s1) * dt;
    }
    return std::abs(energy[path.front()] - energy[path.back()] - kinetic - dissipation);
}

DiagnosticsReport ede_nonuniqueness_demo(std::size_t side) {
    if (side < 21) throw InvalidArgument("diagnostics", "demo needs side >= 21");
    auto space = gen_box_grid(side, Norm::linf);
    const double h = *space.mesh();
    std::vector<double> energy(space.n());
    for (std::size_t i = 0; i < space.n(); ++i) energy[i] = space.coords()[i][0];
    const std::size_t steps = 8, c0 = 16, r0 = 2;
    auto curve = [&](std::size_t rise) {
        std::vector<std::size_t> p;
        std::vector<double> t;
        for (std::size_t k = 0; k <= steps; ++k) {
            p.push_back((r0 + rise * k) * side + (c0 - k));
            t.push_back(double(k) * h);
        }
        return curve_ede_residual(space, energy, p, t);
    };
    const double straight = curve(0), diagonal = curve(1), steep = curve(2);
    DiagnosticsReport r;
    r.name = "ede_demo";
    r.add("straight", straight, 1e-9);
    r.add("diagonal", diagonal, 1e-9);
    // the out-of-family curve must fail: its residual has to reach 0.1
    r.add("out_of_family_deficit", std::max(0.0, 0.1 - steep), 0.0);
    r.context["out_of_family_residual"] = steep;
    r.context["side"] = side;
    r.context["h"] = h;
    return r;
}

double entropy_slope_lower_bound(const MetricMeasureSpace& space, const DensityField& mu,
                                 const std::vector<DensityField>& pool) {
    const double e = transport::entropy(space, mu);
    double best = 0.0;
    for (const auto& nu : pool) {
        double drop = e - transport::entropy(space, nu);
        if (drop <= 0.0) continue;
        double w = std::sqrt(transport::w2_exact(space, mu, nu).cost);
        if (w > 0.0) best = std::max(best, drop / w);
    }
    return best;
}

DensityField random_density(const MetricMeasureSpace& space, SplitMix64& rng, double floor) {
    std::vector<double> v(space.n());
    for (auto& x : v) x = rng.uniform(floor, 1.0);
    return DensityField::normalized(space, std::move(v));
}

std::vector<DensityField> probe_pool(const MetricMeasureSpace& space, const DensityField& mu, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<DensityField> pool;
    for (int k = 0; k < 64; ++k) pool.push_back(random_density(space, rng, 0.0));
    const double h = space.mesh_or_min_dist();
    for (double tau : {h * h, 10.0 * h * h, 100.0 * h * h}) {
        auto st = flows::jko_step(space, mu.masses(space), tau);
        std::vector<double> f(space.n());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = st.masses[i] / space.mass(i);
        pool.push_back(DensityField::normalized(space, std::move(f)));
    }
    return pool;
}

DiagnosticsReport fisher_slope_check(const MetricMeasureSpace& space, const DensityField& mu,
                                     const std::vector<DensityField>& pool, double C) {
    const double h = space.mesh_or_min_dist();
    const double lower = entropy_slope_lower_bound(space, mu, pool);
    const double fisher = calculus::fisher_information(space, mu.values(), calculus::EnergyBackend::slope(space));
    DiagnosticsReport r;
    r.name = "fisher_slope";
    r.add("excess", std::max(0.0, lower - std::sqrt(fisher)), C * h);
    r.context["slope_lower_bound"] = lower;
    r.context["sqrt_fisher"] = json_number(std::sqrt(fisher));
    r.context["pool"] = pool.size();
    r.context["h"] = h;
    r.context["C"] = C;
    return r;
}

double fisher_convexity_violation(const MetricMeasureSpace& space, const std::vector<double>& f0,
                                  const std::vector<double>& f1, const calculus::EnergyBackend& backend) {
    const double F0 = calculus::fisher_information(space, f0, backend);
    const double F1 = calculus::fisher_information(space, f1, backend);
    double worst = -std::numeric_limits<double>::infinity();
    for (double l : {0.25, 0.5, 0.75}) {
        std::vector<double> f(f0.size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = (1.0 - l) * f0[i] + l * f1[i];
        worst = std::max(worst, calculus::fisher_information(space, f, backend) - (1.0 - l) * F0 - l * F1);
    }
    return worst;
}

}  // namespace otflow::diagnostics
