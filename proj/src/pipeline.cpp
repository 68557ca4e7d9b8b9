#include "otflow/pipeline.hpp"

#include "otflow/diagnostics.hpp"
#include "otflow/error.hpp"
#include "otflow/flows.hpp"
#include "otflow/hopflax.hpp"
#include "otflow/report.hpp"
#include "otflow/util.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

namespace otflow {

namespace fs = std::filesystem;

std::string version() { return "0.1.0"; }

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double number(const std::string& key, const std::string& v) {
    double x = 0.0;
    if (!parse_double(v, x) || !std::isfinite(x)) throw ConfigError(key + ": '" + v + "' is not a finite number");
    return x;
}

std::size_t count(const std::string& key, const std::string& v) {
    double x = number(key, v);
    if (x < 0.0 || x != std::floor(x) || x > 1e12) throw ConfigError(key + ": '" + v + "' is not a count");
    return std::size_t(x);
}

const std::set<std::string> kKnownDiagnostics = {"ede", "evi", "kuwada", "brenier", "quadraticity", "convexity",
                                                 "horver", "dw2", "ede-demo", "gap", "fisher-slope", "hj"};

void field_key(FieldSpec& spec, const std::string& sub, const std::string& key, const std::string& v,
               const fs::path& base) {
    if (sub == "kind") spec.kind = v;
    else if (sub == "file") spec.file = base.empty() ? fs::path(v) : base / v;
    else spec.params[sub] = number(key, v);
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
    RunConfig c;
    std::map<std::string, std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        if (key.empty() || v.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        if (seen.count(key)) throw ConfigError("duplicate key " + key);
        seen[key] = v;
        auto dot = key.find('.');
        if (dot == std::string::npos) throw ConfigError("key " + key + " has no section");
        std::string sec = key.substr(0, dot), sub = key.substr(dot + 1);
        if (sec == "space") {
            if (sub == "kind") c.space_kind = v;
            else if (sub == "n") c.space_n = count(key, v);
            else if (sub == "side") c.space_side = count(key, v);
            else if (sub == "norm") {
                try { c.space_norm = parse_norm(v); } catch (const Error&) { throw ConfigError(key + ": unknown norm " + v); }
            } else if (sub == "file") c.space_file = base_dir.empty() ? fs::path(v) : base_dir / v;
            else throw ConfigError("unknown key " + key);
        } else if (sec == "field") {
            field_key(c.field, sub, key, v, base_dir);
        } else if (sec == "target") {
            field_key(c.target, sub, key, v, base_dir);
        } else if (sec == "flow") {
            if (sub == "kind") c.flow_kind = v;
            else if (sub == "backend") c.backend = v;
            else if (sub == "tau") c.tau = number(key, v);
            else if (sub == "steps") c.steps = count(key, v);
            else throw ConfigError("unknown key " + key);
        } else if (sec == "diag") {
            if (sub == "list") {
                std::istringstream ls(v);
                std::string item;
                while (std::getline(ls, item, ',')) {
                    item = trim(item);
                    if (item.empty()) continue;
                    if (!kKnownDiagnostics.count(item)) throw ConfigError("unknown diagnostic " + item);
                    c.diagnostics.push_back(item);
                }
            } else if (sub == "C") c.C = number(key, v);
            else if (sub == "K") c.K = number(key, v);
            else if (sub == "slices") c.slices = count(key, v);
            else if (sub == "eps") c.eps = number(key, v);
            else throw ConfigError("unknown key " + key);
        } else if (sec == "tol") {
            c.tolerance_overrides[sub] = number(key, v);
        } else if (sec == "run") {
            if (sub == "seed") {
                if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
                    throw ConfigError(key + ": '" + v + "' is not an unsigned integer");
                c.seed = std::stoull(v);
            } else if (sub == "out") c.out = base_dir.empty() ? fs::path(v) : base_dir / v;
            else throw ConfigError("unknown key " + key);
        } else {
            throw ConfigError("unknown section " + sec);
        }
    }

    if (c.space_kind != "circle" && c.space_kind != "box" && c.space_kind != "path" && c.space_kind != "file")
        throw ConfigError("space.kind must be circle, box, path or file");
    if (c.space_kind == "file" && !fs::exists(c.space_file))
        throw ConfigError("space file not found: " + c.space_file.string());
    for (const FieldSpec* f : {&c.field, &c.target})
        if (f->kind == "file" && !fs::exists(f->file)) throw ConfigError("field file not found: " + f->file.string());
    if (c.flow_kind != "heat" && c.flow_kind != "jko" && c.flow_kind != "both" && c.flow_kind != "none")
        throw ConfigError("flow.kind must be heat, jko, both or none");
    if (c.backend != "slope" && c.backend != "quadratic") throw ConfigError("flow.backend must be slope or quadratic");
    if (!(c.tau > 0.0)) throw ConfigError("flow.tau must be positive");
    if (c.flow_kind != "none" && c.steps == 0) throw ConfigError("flow.steps must be positive");
    if (!(c.C > 0.0)) throw ConfigError("diag.C must be positive");
    if (c.slices == 0) throw ConfigError("diag.slices must be positive");
    if (!(c.eps > 0.0)) throw ConfigError("diag.eps must be positive");

    // run.out is where results go, not what they are: it stays out of the digest
    std::ostringstream canon;
    for (const auto& [k, v] : seen)
        if (k != "run.out") canon << k << " = " << v << "\n";
    c.canonical = canon.str();
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config not found: " + path.string());
    return parse_run_config(read_file(path), path.parent_path());
}

namespace {

using Clock = std::chrono::steady_clock;

struct Stage {
    std::string name;
    nlohmann::json& timings;
    Clock::time_point start = Clock::now();
    ~Stage() { timings[name] = std::chrono::duration<double>(Clock::now() - start).count(); }
};

template <class Fn>
auto step(const std::string& name, nlohmann::json& timings, Fn&& fn) {
    Stage s{name, timings};
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.module(), "step '" + name + "': " + e.what());
    }
}

MetricMeasureSpace build_space(const RunConfig& c) {
    if (c.space_kind == "circle") return gen_circle_grid(c.space_n);
    if (c.space_kind == "box") return gen_box_grid(c.space_side, c.space_norm);
    if (c.space_kind == "path") return gen_path_grid(c.space_n);
    return load_space(c.space_file);
}

std::vector<double> build_values(const FieldSpec& f, const MetricMeasureSpace& space) {
    if (f.kind == "file") {
        auto v = load_field_values(f.file);
        require_same_space(space, space.id(), v.size(), "cli");
        return v;
    }
    return preset_field(f.kind, f.params, space).values();
}

DensityField build_density(const FieldSpec& f, const MetricMeasureSpace& space) {
    if (f.kind == "file") return DensityField::normalized(space, build_values(f, space));
    return preset_density(f.kind, f.params, space);
}

std::vector<fs::path> list_files(const fs::path& root, const fs::path& sub) {
    std::vector<fs::path> out;
    if (!fs::exists(root / sub)) return out;
    if (fs::is_regular_file(root / sub)) return {sub};
    for (const auto& e : fs::recursive_directory_iterator(root / sub))
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

RunResult run_pipeline(const RunConfig& c) {
    nlohmann::json timings = nlohmann::json::object();
    const fs::path out = c.out;
    fs::create_directories(out);
    for (const char* sub : {"heat", "jko", "reports"}) fs::remove_all(out / sub);

    auto space = step("space", timings, [&] { return build_space(c); });
    save_space(space, out / "space.txt");

    auto f0 = step("field", timings, [&] { return build_values(c.field, space); });
    save_field_values(f0, out / "field.csv");
    std::optional<DensityField> mu0, target;
    auto density0 = [&]() -> const DensityField& {
        if (!mu0) mu0 = step("field", timings, [&] { return build_density(c.field, space); });
        return *mu0;
    };
    auto target_density = [&]() -> const DensityField& {
        if (!target) {
            target = step("target", timings, [&] { return build_density(c.target, space); });
            save_field_values(target->values(), out / "target.csv");
        }
        return *target;
    };

    std::optional<flows::Trajectory> heat, jko;
    if (c.flow_kind == "heat" || c.flow_kind == "both") {
        heat = step("flow.heat", timings, [&] {
            auto backend = calculus::make_backend(space, calculus::parse_backend(c.backend));
            return flows::heat_flow(space, ScalarField(space, f0), backend, c.tau, c.steps,
                                    flows::trajectory_writer(out / "heat"));
        });
    }
    if (c.flow_kind == "jko" || c.flow_kind == "both") {
        jko = step("flow.jko", timings, [&] {
            return flows::jko_flow(space, density0(), c.tau, c.steps, {}, flows::trajectory_writer(out / "jko"));
        });
    }
    auto density_traj = [&](bool prefer_jko) -> const flows::Trajectory& {
        const flows::Trajectory* first = prefer_jko ? (jko ? &*jko : nullptr) : (heat ? &*heat : nullptr);
        const flows::Trajectory* second = prefer_jko ? (heat ? &*heat : nullptr) : (jko ? &*jko : nullptr);
        for (auto* t : {first, second})
            if (t && t->density) return *t;
        throw ConfigError("diagnostic needs a density trajectory: set flow.kind and a nonnegative normalized field");
    };

    fs::create_directories(out / "reports");
    RunResult result;
    for (const auto& name : c.diagnostics) {
        DiagnosticsReport r = step("diag." + name, timings, [&]() -> DiagnosticsReport {
            using namespace diagnostics;
            if (name == "ede") return ede_residual(space, density_traj(true), c.C);
            if (name == "evi") {
                SplitMix64 rng(c.seed);
                std::vector<DensityField> probes;
                for (int k = 0; k < 3; ++k) probes.push_back(random_density(space, rng, 0.1));
                return evi_residual(space, density_traj(true), probes, c.K, c.C);
            }
            if (name == "kuwada") return kuwada_check(space, density_traj(false), c.C);
            if (name == "brenier") return brenier_check(space, density0(), target_density(), c.C);
            if (name == "quadraticity") {
                std::vector<ScalarField> probes;
                for (double k : {1.0, 2.0})
                    probes.push_back(preset_field(
                        "cosine_mode", {{"k", k}, {"offset", 0.0}, {"amplitude", 1.0 / (2.0 * std::numbers::pi * k)}},
                        space));
                return quadraticity_check(space, probes, c.C);
            }
            if (name == "convexity")
                return displacement_convexity_check(space, density0(), target_density(), c.K, c.slices, c.seed, c.C);
            if (name == "horver") {
                auto plan = transport::geodesic_plan(space, density0(), target_density(), c.slices);
                return horizontal_vertical_check(space, ScalarField(space, f0),
                                                 ScalarField(space, build_values(c.target, space)), plan, c.eps, c.C);
            }
            if (name == "dw2") {
                if (!heat || !heat->density) throw ConfigError("dw2 needs a density heat flow");
                return dw2_heatflow_check(space, *heat, target_density(), c.C);
            }
            if (name == "ede-demo") return ede_nonuniqueness_demo();
            if (name == "fisher-slope") {
                auto pool = probe_pool(space, density0(), c.seed);
                return fisher_slope_check(space, density0(), pool, c.C);
            }
            if (name == "hj") return hopflax::hj_residuals(space, ScalarField(space, f0), c.tau * double(c.steps), 0.0, c.C);
            // gap
            if (!heat || !jko) throw ConfigError("gap needs flow.kind = both");
            DiagnosticsReport g;
            g.name = "gap";
            g.add("l1_gap", flows::l1_gap(space, *heat, *jko), 0.05);
            g.context["tau"] = c.tau;
            g.context["h"] = space.mesh_or_min_dist();
            return g;
        });
        for (auto& [label, tol] : r.tolerances)
            if (auto it = c.tolerance_overrides.find(label); it != c.tolerance_overrides.end()) tol = it->second;
        r.write(out / "reports" / (name + ".json"));
        result.passes[name] = r.pass();
    }

    nlohmann::json inputs = nlohmann::json::object();
    inputs["config"] = sha256_hex(c.canonical);
    if (c.space_kind == "file") inputs["space_file"] = sha256_file(c.space_file);
    if (c.field.kind == "file") inputs["field_file"] = sha256_file(c.field.file);
    if (c.target.kind == "file") inputs["target_file"] = sha256_file(c.target.file);

    nlohmann::json artifacts = nlohmann::json::object();
    for (const char* sub : {"space.txt", "field.csv", "target.csv", "heat", "jko", "reports"})
        for (const auto& rel : list_files(out, sub)) artifacts[rel.generic_string()] = sha256_file(out / rel);

    nlohmann::json reports = nlohmann::json::object();
    bool all = true;
    for (const auto& [name, ok] : result.passes) {
        reports[name] = {{"path", "reports/" + name + ".json"}, {"pass", ok}};
        all = all && ok;
    }
    result.exit_code = all ? 0 : 3;

    nlohmann::json manifest = {
        {"inputs", inputs},
        {"seed", c.seed},
        {"versions",
         {{"otflow", version()},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__}}},
        {"artifacts", artifacts},
        {"reports", reports},
        {"wall_times", "timings.json"},
        {"exit_code", result.exit_code},
    };
    result.manifest = out / "manifest.json";
    write_file_atomic(result.manifest, dump_json(manifest));
    write_file_atomic(out / "timings.json", dump_json(timings));
    return result;
}

}  // namespace otflow
