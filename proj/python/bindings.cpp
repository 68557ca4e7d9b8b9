#include "otflow/calculus.hpp"
#include "otflow/diagnostics.hpp"
#include "otflow/error.hpp"
#include "otflow/flows.hpp"
#include "otflow/hopflax.hpp"
#include "otflow/pipeline.hpp"
#include "otflow/presets.hpp"
#include "otflow/transport.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace otflow;

namespace {

// reports cross the boundary as JSON text; the package turns them into dicts
std::string report_text(const DiagnosticsReport& r) { return dump_json(r.to_json()); }

Eigen::MatrixXd stack(const std::vector<std::vector<double>>& rows) {
    Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t k = 0; k < rows.size(); ++k)
        for (std::size_t i = 0; i < rows[k].size(); ++i) m(k, i) = rows[k][i];
    return m;
}

py::dict trajectory_dict(const flows::Trajectory& t) {
    py::dict d;
    d["times"] = t.times;
    d["fields"] = stack(t.fields);
    d["kind"] = flows::to_string(t.kind);
    d["tau"] = t.tau;
    d["density"] = t.density;
    return d;
}

flows::Trajectory to_trajectory(const MetricMeasureSpace& s, const Eigen::MatrixXd& fields,
                                const std::vector<double>& times, double tau, const std::string& kind) {
    flows::Trajectory t;
    t.space_id = s.id();
    t.kind = flows::parse_flow_kind(kind);
    t.backend = t.kind == flows::FlowKind::jko_entropy ? "entropy" : "quadratic";
    t.tau = tau;
    t.times = times;
    t.density = true;
    for (Eigen::Index k = 0; k < fields.rows(); ++k) {
        std::vector<double> row(fields.cols());
        for (Eigen::Index i = 0; i < fields.cols(); ++i) row[i] = fields(k, i);
        t.fields.push_back(std::move(row));
    }
    return t;
}

calculus::EnergyBackend backend_of(const MetricMeasureSpace& s, const std::string& name, double h) {
    return calculus::make_backend(s, calculus::parse_backend(name), h);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Finite metric measure spaces, optimal transport and gradient flows";
    static py::exception<Error> base(m, "OtflowError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(base, (e.module() + ": " + e.what()).c_str());
        }
    });

    py::class_<MetricMeasureSpace>(m, "Space")
        .def_static("circle", &gen_circle_grid, py::arg("n"), py::arg("norm_exponent") = 2)
        .def_static("box", [](std::size_t side, const std::string& norm) { return gen_box_grid(side, parse_norm(norm)); },
                    py::arg("side"), py::arg("norm") = "euclidean")
        .def_static("path", &gen_path_grid, py::arg("n"))
        .def_static("from_matrix", &make_space, py::arg("dist"), py::arg("measure"))
        .def_static("load", &load_space)
        .def("save", [](const MetricMeasureSpace& s, const std::filesystem::path& p) { save_space(s, p); })
        .def_property_readonly("n", &MetricMeasureSpace::n)
        .def_property_readonly("mesh", &MetricMeasureSpace::mesh_or_min_dist)
        .def_property_readonly("diameter", &MetricMeasureSpace::diameter)
        .def_property_readonly("id", &MetricMeasureSpace::id)
        .def_property_readonly("dist", &MetricMeasureSpace::dist_matrix)
        .def_property_readonly("measure", &MetricMeasureSpace::measure)
        .def("geodesic_hint", &MetricMeasureSpace::geodesic_hint)
        .def("__repr__", [](const MetricMeasureSpace& s) { return "<Space n=" + std::to_string(s.n()) + ">"; });

    m.def("preset_field", [](const std::string& kind, const PresetParams& p, const MetricMeasureSpace& s) {
        return preset_field(kind, p, s).values();
    }, py::arg("kind"), py::arg("params"), py::arg("space"));
    m.def("preset_density", [](const std::string& kind, const PresetParams& p, const MetricMeasureSpace& s) {
        return preset_density(kind, p, s).values();
    }, py::arg("kind"), py::arg("params"), py::arg("space"));

    m.def("hopf_lax", [](const MetricMeasureSpace& s, const std::vector<double>& f, double t) {
        auto r = hopflax::hopf_lax(s, ScalarField(s, f), t);
        return py::make_tuple(r.q.values(), r.d_plus, r.d_minus);
    }, py::arg("space"), py::arg("f"), py::arg("t"));
    m.def("hj_residuals", [](const MetricMeasureSpace& s, const std::vector<double>& f, double t, double dt, double C) {
        return report_text(hopflax::hj_residuals(s, ScalarField(s, f), t, dt, C));
    }, py::arg("space"), py::arg("f"), py::arg("t"), py::arg("dt") = 0.0, py::arg("C") = 2.0);

    m.def("w2", [](const MetricMeasureSpace& s, const std::vector<double>& mu, const std::vector<double>& nu,
                   double eps) {
        DensityField a(s, mu), b(s, nu);
        auto plan = eps > 0.0 ? transport::w2_entropic(s, a, b, eps) : transport::w2_exact(s, a, b);
        return py::make_tuple(plan.cost, plan.gamma);
    }, py::arg("space"), py::arg("mu"), py::arg("nu"), py::arg("entropic_eps") = 0.0,
       "Squared W2 and the plan (masses); eps > 0 selects Sinkhorn.");
    m.def("kantorovich_potential", [](const MetricMeasureSpace& s, const std::vector<double>& mu,
                                      const std::vector<double>& nu) {
        auto p = transport::kantorovich_potential(s, DensityField(s, mu), DensityField(s, nu));
        return py::make_tuple(p.psi.values(), p.psi_c.values(), p.gap);
    });
    m.def("c_transform", [](const MetricMeasureSpace& s, const std::vector<double>& psi) {
        return transport::c_transform_values(s, psi);
    });
    m.def("geodesic_plan", [](const MetricMeasureSpace& s, const std::vector<double>& mu0,
                              const std::vector<double>& mu1, std::size_t M) {
        auto plan = transport::geodesic_plan(s, DensityField(s, mu0), DensityField(s, mu1), M);
        std::vector<double> w;
        std::vector<std::vector<std::size_t>> paths;
        for (const auto& c : plan.curves) w.push_back(c.weight), paths.push_back(c.path);
        return py::make_tuple(plan.times, w, paths);
    }, py::arg("space"), py::arg("mu0"), py::arg("mu1"), py::arg("slices"));
    m.def("entropy", [](const MetricMeasureSpace& s, const std::vector<double>& f) { return transport::entropy(s, f); });

    m.def("slope", [](const MetricMeasureSpace& s, const std::vector<double>& f, double h, const std::string& v) {
        return calculus::slope(s, ScalarField(s, f), h, calculus::parse_variant(v)).values;
    }, py::arg("space"), py::arg("f"), py::arg("h") = 0.0, py::arg("variant") = "two_sided");
    m.def("cheeger_energy", [](const MetricMeasureSpace& s, const std::vector<double>& f, const std::string& b, double h) {
        return calculus::cheeger_energy(s, f, backend_of(s, b, h));
    }, py::arg("space"), py::arg("f"), py::arg("backend") = "slope", py::arg("h") = 0.0);
    m.def("laplacian", [](const MetricMeasureSpace& s, const std::vector<double>& f, const std::string& b, double tau) {
        return calculus::laplacian(s, ScalarField(s, f), backend_of(s, b, 0.0), tau).values();
    }, py::arg("space"), py::arg("f"), py::arg("backend") = "quadratic", py::arg("tau") = 1e-4);
    m.def("prox", [](const MetricMeasureSpace& s, const std::vector<double>& f, double tau, const std::string& b) {
        return calculus::prox(s, f, backend_of(s, b, 0.0), tau).g;
    }, py::arg("space"), py::arg("f"), py::arg("tau"), py::arg("backend") = "slope");
    m.def("fisher_information", [](const MetricMeasureSpace& s, const std::vector<double>& f, const std::string& b) {
        return calculus::fisher_information(s, f, backend_of(s, b, 0.0));
    }, py::arg("space"), py::arg("f"), py::arg("backend") = "slope");

    m.def("heat_flow", [](const MetricMeasureSpace& s, const std::vector<double>& f0, const std::string& b, double tau,
                          std::size_t steps) {
        ScalarField f(s, f0);
        auto backend = backend_of(s, b, 0.0);
        flows::Trajectory t;
        {
            py::gil_scoped_release nogil;
            t = flows::heat_flow(s, f, backend, tau, steps);
        }
        return trajectory_dict(t);
    }, py::arg("space"), py::arg("f0"), py::arg("backend"), py::arg("tau"), py::arg("steps"));
    m.def("jko_flow", [](const MetricMeasureSpace& s, const std::vector<double>& mu0, double tau, std::size_t steps) {
        DensityField mu(s, mu0);
        flows::Trajectory t;
        {
            py::gil_scoped_release nogil;
            t = flows::jko_flow(s, mu, tau, steps);
        }
        return trajectory_dict(t);
    }, py::arg("space"), py::arg("mu0"), py::arg("tau"), py::arg("steps"));

    m.def("ede_residual", [](const MetricMeasureSpace& s, const Eigen::MatrixXd& fields, const std::vector<double>& times,
                             double tau, const std::string& kind, double C) {
        return report_text(diagnostics::ede_residual(s, to_trajectory(s, fields, times, tau, kind), C));
    }, py::arg("space"), py::arg("fields"), py::arg("times"), py::arg("tau"), py::arg("kind") = "jko_entropy",
       py::arg("C") = 2.0);
    m.def("kuwada_check", [](const MetricMeasureSpace& s, const Eigen::MatrixXd& fields, const std::vector<double>& times,
                             double tau, const std::string& kind, double C) {
        return report_text(diagnostics::kuwada_check(s, to_trajectory(s, fields, times, tau, kind), C));
    }, py::arg("space"), py::arg("fields"), py::arg("times"), py::arg("tau"), py::arg("kind") = "l2_heat",
       py::arg("C") = 2.0);
    m.def("brenier_check", [](const MetricMeasureSpace& s, const std::vector<double>& mu0, const std::vector<double>& mu1,
                              double C) {
        return report_text(diagnostics::brenier_check(s, DensityField(s, mu0), DensityField(s, mu1), C));
    }, py::arg("space"), py::arg("mu0"), py::arg("mu1"), py::arg("C") = 2.0);
    m.def("quadraticity_check", [](const MetricMeasureSpace& s, const std::vector<std::vector<double>>& probes, double C) {
        std::vector<ScalarField> p;
        for (const auto& v : probes) p.emplace_back(s, v);
        return report_text(diagnostics::quadraticity_check(s, p, C));
    }, py::arg("space"), py::arg("probes"), py::arg("C") = 2.0);
    m.def("displacement_convexity_check", [](const MetricMeasureSpace& s, const std::vector<double>& mu0,
                                             const std::vector<double>& mu1, double K, std::size_t M,
                                             std::uint64_t seed, double C) {
        return report_text(diagnostics::displacement_convexity_check(s, DensityField(s, mu0), DensityField(s, mu1), K,
                                                                     M, seed, C));
    }, py::arg("space"), py::arg("mu0"), py::arg("mu1"), py::arg("K") = 0.0, py::arg("slices") = 8,
       py::arg("seed") = 1, py::arg("C") = 2.0);
    m.def("ede_nonuniqueness_demo", [](std::size_t side) {
        return report_text(diagnostics::ede_nonuniqueness_demo(side));
    }, py::arg("side") = 21);

    m.def("run_pipeline", [](const std::filesystem::path& config) {
        RunResult r;
        {
            py::gil_scoped_release nogil;
            r = run_pipeline(load_run_config(config));
        }
        return py::make_tuple(r.exit_code, r.manifest, r.passes);
    }, py::arg("config"));
    m.attr("__version__") = version();
}
