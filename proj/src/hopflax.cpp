#include "otflow/hopflax.hpp"

#include "otflow/calculus.hpp"
#include "otflow/error.hpp"
#include "otflow/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace otflow::hopflax {

HopfLaxResult hopf_lax(const MetricMeasureSpace& space, const ScalarField& f, double t) {
    if (!(t > 0.0)) throw NonPositiveTime(t);
    require_same_space(space, f.space_id(), f.size(), "hopflax");
    const std::size_t n = space.n();
    const auto& d = space.dist_matrix();
    std::vector<double> q(n), dp(n), dm(n);
    const double inv2t = 1.0 / (2.0 * t);
    parallel_for(n, [&](std::size_t x) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < n; ++y) best = std::min(best, f[y] + d(x, y) * d(x, y) * inv2t);
        const double band = 1e-12 * (1.0 + std::abs(best));
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            if (f[y] + d(x, y) * d(x, y) * inv2t <= best + band) {
                lo = std::min(lo, d(x, y));
                hi = std::max(hi, d(x, y));
            }
        }
        q[x] = best;
        dp[x] = hi;
        dm[x] = lo;
    });
    return {ScalarField(space.id(), std::move(q)), std::move(dp), std::move(dm), t};
}

DiagnosticsReport check_dpm_monotone(const MetricMeasureSpace& space, const ScalarField& f,
                                     const std::vector<double>& times) {
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] > 0.0)) throw NonPositiveTime(times[k]);
        if (k && !(times[k] > times[k - 1]))
            throw InvalidArgument("hopflax", "times must be strictly increasing");
    }
    std::vector<HopfLaxResult> res;
    for (double t : times) res.push_back(hopf_lax(space, f, t));
    double worst = 0.0;
    for (std::size_t a = 0; a < res.size(); ++a)
        for (std::size_t b = a + 1; b < res.size(); ++b)
            for (std::size_t x = 0; x < space.n(); ++x)
                worst = std::max(worst, res[a].d_plus[x] - res[b].d_minus[x]);
    DiagnosticsReport r;
    r.name = "dpm_monotone";
    r.add("max_violation", worst, 1e-12 * space.diameter());
    r.context["times"] = times;
    r.context["n"] = space.n();
    return r;
}

double lipschitz_constant(const MetricMeasureSpace& space, const ScalarField& f) {
    double lip = 0.0;
    for (std::size_t x = 0; x < space.n(); ++x)
        for (std::size_t y = x + 1; y < space.n(); ++y)
            lip = std::max(lip, std::abs(f[x] - f[y]) / space.dist(x, y));
    return lip;
}

HJPointwise hj_pointwise(const MetricMeasureSpace& space, const ScalarField& f, double t, double dt) {
    if (!(t > 0.0)) throw NonPositiveTime(t);
    if (dt <= 0.0) dt = t / 100.0;
    if (!(t - dt > 0.0)) throw NonPositiveTime(t - dt);
    auto mid = hopf_lax(space, f, t);
    auto fwd = hopf_lax(space, f, t + dt);
    auto bwd = hopf_lax(space, f, t - dt);
    const std::size_t n = space.n();
    HJPointwise out;
    out.slope_q = calculus::slope(space, mid.q).values;
    out.dt_q.resize(n);
    out.r_sub.resize(n);
    out.r_dini.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
        double dtq = (fwd.q[x] - bwd.q[x]) / (2.0 * dt);
        double h = dtq + 0.5 * out.slope_q[x] * out.slope_q[x];
        double dmid = 0.5 * (mid.d_plus[x] + mid.d_minus[x]);
        out.dt_q[x] = dtq;
        out.r_sub[x] = std::max(0.0, h);
        out.r_dini[x] = std::abs(dtq + dmid * dmid / (2.0 * t * t));
        if (space.has_geodesic_hint()) out.r_sup.push_back(std::abs(h));
    }
    return out;
}

DiagnosticsReport hj_residuals(const MetricMeasureSpace& space, const ScalarField& f, double t, double dt,
                               double C) {
    if (dt <= 0.0) dt = t / 100.0;
    auto pw = hj_pointwise(space, f, t, dt);
    const double h = space.mesh_or_min_dist();
    const double lip = lipschitz_constant(space, f);
    const double tol = C * lip * h / t;
    auto maxof = [](const std::vector<double>& v) {
        return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
    };
    DiagnosticsReport r;
    r.name = "hj";
    r.add("subsolution", maxof(pw.r_sub), tol);
    if (!pw.r_sup.empty()) r.add("supersolution", maxof(pw.r_sup), tol);
    r.add("time_derivative", maxof(pw.r_dini), tol);
    r.context["t"] = t;
    r.context["dt"] = dt;
    r.context["h"] = h;
    r.context["C"] = C;
    r.context["lip"] = lip;
    r.context["geodesic"] = space.has_geodesic_hint();
    return r;
}

}  // namespace otflow::hopflax
