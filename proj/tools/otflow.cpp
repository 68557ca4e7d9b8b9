#include "otflow/calculus.hpp"
#include "otflow/diagnostics.hpp"
#include "otflow/error.hpp"
#include "otflow/flows.hpp"
#include "otflow/hopflax.hpp"
#include "otflow/pipeline.hpp"
#include "otflow/presets.hpp"
#include "otflow/transport.hpp"
#include "otflow/util.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

using namespace otflow;
namespace fs = std::filesystem;

namespace {

// set by the diag handlers: exit 3 when a report fails
int g_exit = 0;

void emit(const nlohmann::json& j, const std::string& out) {
    if (out.empty()) std::cout << dump_json(j);
    else write_file_atomic(out, dump_json(j));
}

void emit_report(const DiagnosticsReport& r, const std::string& out) {
    emit(r.to_json(), out);
    if (!r.pass()) g_exit = 3;
}

ScalarField scalar(const MetricMeasureSpace& s, const std::string& path) {
    return ScalarField(s, load_field_values(path));
}

DensityField density(const MetricMeasureSpace& s, const std::string& path) {
    return DensityField(s, load_field_values(path));
}

/// One field path per line, relative to the list file.
std::vector<std::vector<double>> load_probe_list(const std::string& path) {
    std::vector<std::vector<double>> out;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line.erase(0, line.find_first_not_of(" \t\r"));
        line.erase(line.find_last_not_of(" \t\r") + 1);
        if (line.empty()) continue;
        fs::path p = line;
        if (p.is_relative()) p = fs::path(path).parent_path() / p;
        out.push_back(load_field_values(p));
    }
    return out;
}

nlohmann::json plan_summary(const transport::TransportPlan& plan) {
    return {{"w2_squared", json_number(plan.cost)},
            {"w2", json_number(std::sqrt(plan.cost))},
            {"optimal", plan.is_optimal},
            {"support", plan.support().size()}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Metric measure spaces, optimal transport and gradient flows"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version());

    std::string space_file, out, f_file, g_file, mu_file, nu_file, in_dir, probes_file, kind = "circle",
                norm = "euclidean", backend = "slope", plan_file, variant = "two_sided";
    std::size_t n = 64, steps = 10, slices = 8, side = 21;
    double t = 0.1, dt = 0.0, tau = 1e-3, eps = 0.0, K = 0.0, C = diagnostics::kDefaultC, h = 0.0;
    std::uint64_t seed = 1;
    bool exact = false;

    auto add_space = [&](CLI::App* c) { c->add_option("--space", space_file, "space file")->required()->check(CLI::ExistingFile); };
    auto add_out = [&](CLI::App* c, bool required) {
        auto* o = c->add_option("--out", out, "output path");
        if (required) o->required();
    };

    // space
    auto* sp = app.add_subcommand("space", "generate or validate spaces");
    sp->require_subcommand(1);
    auto* sp_gen = sp->add_subcommand("gen", "write a generated space");
    sp_gen->add_option("--kind", kind)->check(CLI::IsMember({"circle", "box", "path"}));
    sp_gen->add_option("--n", n, "points (circle, path) or side length (box)");
    sp_gen->add_option("--norm", norm)->check(CLI::IsMember({"euclidean", "linf"}));
    add_out(sp_gen, true);
    sp_gen->callback([&] {
        MetricMeasureSpace s = kind == "circle" ? gen_circle_grid(n)
                               : kind == "path" ? gen_path_grid(n)
                                                : gen_box_grid(n, parse_norm(norm));
        save_space(s, out);
    });
    auto* sp_val = sp->add_subcommand("validate", "parse and validate a space file");
    sp_val->add_option("file", space_file)->required()->check(CLI::ExistingFile);
    sp_val->callback([&] {
        auto s = load_space(space_file);
        char id[17];
        std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(s.id()));
        emit({{"valid", true}, {"n", s.n()}, {"mesh", json_number(s.mesh_or_min_dist())},
              {"diameter", json_number(s.diameter())}, {"id", id}, {"geodesic_hint", s.has_geodesic_hint()}},
             "");
    });

    // field
    auto* fld = app.add_subcommand("field", "write a preset field");
    std::vector<std::string> params;
    bool as_density = false;
    add_space(fld);
    fld->add_option("--kind", kind, "constant, cosine_mode, bump, ramp, indicator or dirac_like")->required();
    fld->add_option("--param", params, "key=value, repeatable");
    fld->add_flag("--density", as_density, "normalize to a probability density");
    add_out(fld, true);
    fld->callback([&] {
        auto s = load_space(space_file);
        PresetParams pp;
        for (const auto& kv : params) {
            auto eq = kv.find('=');
            double x;
            if (eq == std::string::npos || !parse_double(kv.substr(eq + 1), x))
                throw ConfigError("bad --param '" + kv + "', expected key=value");
            pp[kv.substr(0, eq)] = x;
        }
        save_field_values(as_density ? preset_density(kind, pp, s).values() : preset_field(kind, pp, s).values(), out);
    });

    // hj
    auto* hj = app.add_subcommand("hj", "Hopf-Lax semigroup");
    hj->require_subcommand(1);
    auto* hj_run = hj->add_subcommand("run", "Hamilton-Jacobi residuals of Q_t f");
    add_space(hj_run);
    hj_run->add_option("--f", f_file)->required()->check(CLI::ExistingFile);
    hj_run->add_option("--t", t)->required();
    hj_run->add_option("--dt", dt);
    hj_run->add_option("--C", C);
    add_out(hj_run, false);
    hj_run->callback([&] {
        auto s = load_space(space_file);
        emit_report(hopflax::hj_residuals(s, scalar(s, f_file), t, dt, C), out);
    });

    // ot
    auto* ot = app.add_subcommand("ot", "optimal transport");
    ot->require_subcommand(1);
    auto* ot_w2 = ot->add_subcommand("w2", "Wasserstein distance");
    auto* ot_pot = ot->add_subcommand("potential", "Kantorovich potentials");
    auto* ot_geo = ot->add_subcommand("geodesic", "displacement interpolation as a curve plan");
    for (auto* c : {ot_w2, ot_pot, ot_geo}) {
        add_space(c);
        c->add_option("--mu", mu_file)->required()->check(CLI::ExistingFile);
        c->add_option("--nu", nu_file)->required()->check(CLI::ExistingFile);
        add_out(c, c == ot_geo);
    }
    auto* ex = ot_w2->add_flag("--exact", exact, "network simplex (default)");
    ot_w2->add_option("--entropic", eps, "Sinkhorn with this epsilon")->excludes(ex);
    ot_w2->add_option("--plan", plan_file, "write the plan as i j mass lines");
    ot_w2->callback([&] {
        auto s = load_space(space_file);
        auto mu = density(s, mu_file), nu = density(s, nu_file);
        auto plan = eps > 0.0 ? transport::w2_entropic(s, mu, nu, eps) : transport::w2_exact(s, mu, nu);
        if (!plan_file.empty()) transport::save_plan(plan, plan_file);
        emit(plan_summary(plan), out);
    });
    ot_pot->callback([&] {
        auto s = load_space(space_file);
        auto pot = transport::kantorovich_potential(s, density(s, mu_file), density(s, nu_file));
        nlohmann::json psi = nlohmann::json::array(), psic = nlohmann::json::array();
        for (double v : pot.psi.values()) psi.push_back(json_number(v));
        for (double v : pot.psi_c.values()) psic.push_back(json_number(v));
        emit({{"psi", psi}, {"psi_c", psic}, {"gap", json_number(pot.gap)}}, out);
    });
    ot_geo->add_option("--slices", slices)->required();
    ot_geo->callback([&] {
        auto s = load_space(space_file);
        transport::save_curve_plan(transport::geodesic_plan(s, density(s, mu_file), density(s, nu_file), slices), out);
    });

    // calc
    auto* calc = app.add_subcommand("calc", "slopes, Cheeger energies and Laplacians");
    calc->require_subcommand(1);
    auto* c_en = calc->add_subcommand("energy", "Cheeger energy of f");
    auto* c_lap = calc->add_subcommand("laplacian", "Laplacian of f");
    auto* c_par = calc->add_subcommand("parallelogram", "parallelogram defect of f and g");
    auto* c_slope = calc->add_subcommand("slope", "pointwise slope of f");
    for (auto* c : {c_en, c_lap, c_par, c_slope}) {
        add_space(c);
        c->add_option("--f", f_file)->required()->check(CLI::ExistingFile);
        c->add_option("--backend", backend)->check(CLI::IsMember({"slope", "quadratic"}));
        c->add_option("--radius", h, "neighbourhood radius (default mesh)");
        add_out(c, false);
    }
    c_par->add_option("--g", g_file)->required()->check(CLI::ExistingFile);
    c_lap->add_option("--tau", tau, "prox step of the slope backend");
    c_slope->add_option("--variant", variant)->check(CLI::IsMember({"two_sided", "descending", "ascending"}));
    auto make_b = [&](const MetricMeasureSpace& s) { return calculus::make_backend(s, calculus::parse_backend(backend), h); };
    c_en->callback([&] {
        auto s = load_space(space_file);
        emit({{"energy", json_number(calculus::cheeger_energy(s, scalar(s, f_file), make_b(s)))}, {"backend", backend}},
             out);
    });
    c_lap->callback([&] {
        auto s = load_space(space_file);
        auto lap = calculus::laplacian(s, scalar(s, f_file), make_b(s), tau);
        if (out.empty()) {
            for (double v : lap.values()) std::cout << format_double(v) << "\n";
        } else {
            save_field_values(lap.values(), out);
        }
    });
    c_par->callback([&] {
        auto s = load_space(space_file);
        emit({{"defect", json_number(calculus::parallelogram_defect(s, scalar(s, f_file), scalar(s, g_file), make_b(s)))},
              {"backend", backend}},
             out);
    });
    c_slope->callback([&] {
        auto s = load_space(space_file);
        auto sl = calculus::slope(s, scalar(s, f_file), h, calculus::parse_variant(variant));
        if (out.empty()) {
            for (double v : sl.values) std::cout << format_double(v) << "\n";
        } else {
            save_field_values(sl.values, out);
        }
    });

    // flow
    auto* flow = app.add_subcommand("flow", "gradient flows");
    flow->require_subcommand(1);
    auto* fl_heat = flow->add_subcommand("heat", "implicit Euler for the Cheeger energy");
    auto* fl_jko = flow->add_subcommand("jko", "minimizing movement of the entropy in W2");
    for (auto* c : {fl_heat, fl_jko}) {
        add_space(c);
        c->add_option("--tau", tau)->required();
        c->add_option("--steps", steps)->required();
        add_out(c, true);
    }
    fl_heat->add_option("--f0", f_file)->required()->check(CLI::ExistingFile);
    fl_heat->add_option("--backend", backend)->check(CLI::IsMember({"slope", "quadratic"}));
    fl_jko->add_option("--mu0", mu_file)->required()->check(CLI::ExistingFile);
    fl_heat->callback([&] {
        auto s = load_space(space_file);
        flows::heat_flow(s, scalar(s, f_file), make_b(s), tau, steps, flows::trajectory_writer(out));
    });
    fl_jko->callback([&] {
        auto s = load_space(space_file);
        flows::jko_flow(s, density(s, mu_file), tau, steps, {}, flows::trajectory_writer(out));
    });

    // diag
    auto* dg = app.add_subcommand("diag", "diagnostics reports (exit 3 when a report fails)");
    dg->require_subcommand(1);
    auto* d_ede = dg->add_subcommand("ede", "energy dissipation equality along a density trajectory");
    auto* d_evi = dg->add_subcommand("evi", "integrated EVI_K against probe densities");
    auto* d_kuw = dg->add_subcommand("kuwada", "W2 speed against Fisher information");
    auto* d_dw2 = dg->add_subcommand("dw2", "derivative of W2^2 to a fixed measure along heat flow");
    for (auto* c : {d_ede, d_evi, d_kuw, d_dw2}) {
        add_space(c);
        c->add_option("--in", in_dir, "trajectory directory")->required()->check(CLI::ExistingDirectory);
    }
    d_evi->add_option("--probes", probes_file, "list of density files")->required()->check(CLI::ExistingFile);
    d_evi->add_option("--K", K);
    d_dw2->add_option("--sigma", nu_file)->required()->check(CLI::ExistingFile);
    auto* d_bre = dg->add_subcommand("brenier", "metric Brenier identities");
    auto* d_cvx = dg->add_subcommand("convexity", "displacement convexity of the entropy");
    for (auto* c : {d_bre, d_cvx}) {
        add_space(c);
        c->add_option("--mu0", mu_file)->required()->check(CLI::ExistingFile);
        c->add_option("--mu1", nu_file)->required()->check(CLI::ExistingFile);
    }
    d_cvx->add_option("--K", K);
    d_cvx->add_option("--slices", slices);
    d_cvx->add_option("--seed", seed);
    auto* d_quad = dg->add_subcommand("quadraticity", "parallelogram and flow additivity defects");
    add_space(d_quad);
    d_quad->add_option("--probes", probes_file, "list of scalar field files")->required()->check(CLI::ExistingFile);
    auto* d_hv = dg->add_subcommand("horver", "horizontal against vertical derivative");
    add_space(d_hv);
    d_hv->add_option("--f", f_file)->required()->check(CLI::ExistingFile);
    d_hv->add_option("--g", g_file)->required()->check(CLI::ExistingFile);
    d_hv->add_option("--plan", plan_file, "curve plan file")->required()->check(CLI::ExistingFile);
    d_hv->add_option("--eps", eps)->required();
    auto* d_demo = dg->add_subcommand("ede-demo", "EDE without uniqueness on an L-infinity grid");
    d_demo->add_option("--side", side);
    for (auto* c : dg->get_subcommands({})) {
        c->add_option("--C", C);
        add_out(c, false);
    }

    d_ede->callback([&] {
        auto s = load_space(space_file);
        emit_report(diagnostics::ede_residual(s, flows::read_trajectory(s, in_dir), C), out);
    });
    d_evi->callback([&] {
        auto s = load_space(space_file);
        std::vector<DensityField> probes;
        for (auto& v : load_probe_list(probes_file)) probes.emplace_back(s, std::move(v));
        emit_report(diagnostics::evi_residual(s, flows::read_trajectory(s, in_dir), probes, K, C), out);
    });
    d_kuw->callback([&] {
        auto s = load_space(space_file);
        emit_report(diagnostics::kuwada_check(s, flows::read_trajectory(s, in_dir), C), out);
    });
    d_dw2->callback([&] {
        auto s = load_space(space_file);
        emit_report(diagnostics::dw2_heatflow_check(s, flows::read_trajectory(s, in_dir), density(s, nu_file), C), out);
    });
    d_bre->callback([&] {
        auto s = load_space(space_file);
        emit_report(diagnostics::brenier_check(s, density(s, mu_file), density(s, nu_file), C), out);
    });
    d_cvx->callback([&] {
        auto s = load_space(space_file);
        emit_report(diagnostics::displacement_convexity_check(s, density(s, mu_file), density(s, nu_file), K, slices,
                                                              seed, C),
                    out);
    });
    d_quad->callback([&] {
        auto s = load_space(space_file);
        std::vector<ScalarField> probes;
        for (auto& v : load_probe_list(probes_file)) probes.emplace_back(s, std::move(v));
        emit_report(diagnostics::quadraticity_check(s, probes, C), out);
    });
    d_hv->callback([&] {
        auto s = load_space(space_file);
        auto plan = transport::load_curve_plan(s, plan_file);
        emit_report(diagnostics::horizontal_vertical_check(s, scalar(s, f_file), scalar(s, g_file), plan, eps, C), out);
    });
    d_demo->callback([&] { emit_report(diagnostics::ede_nonuniqueness_demo(side), out); });

    // run
    auto* run = app.add_subcommand("run", "config-driven pipeline");
    std::string config_file;
    run->add_option("--config", config_file)->required();
    run->callback([&] {
        auto res = run_pipeline(load_run_config(config_file));
        std::cout << res.manifest.string() << "\n";
        for (const auto& [name, ok] : res.passes) std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
        g_exit = res.exit_code;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << e.module() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return g_exit;
}
