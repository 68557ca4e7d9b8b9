#include "otflow/calculus.hpp"

#include "otflow/error.hpp"
#include "otflow/util.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace otflow::calculus {

namespace {

double default_radius(const MetricMeasureSpace& space, double h) {
    return h > 0.0 ? h : space.mesh_or_min_dist();
}


}  // namespace

Neighborhood Neighborhood::build(const MetricMeasureSpace& space, double h) {
    Neighborhood nb;
    nb.radius = h;
    const std::size_t n = space.n();
    const double cut = h * (1.0 + 1e-9);
    nb.offsets.assign(n + 1, 0);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) {
            double d = space.dist(x, y);
            if (y != x && d <= cut) {
                nb.nbr.push_back(y);
                nb.dist.push_back(d);
            }
        }
        nb.offsets[x + 1] = nb.nbr.size();
    }
    return nb;
}

std::vector<double> slope_values(const Neighborhood& nb, const std::vector<double>& f, SlopeVariant variant) {
    const std::size_t n = nb.n();
    std::vector<double> out(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        double best = 0.0;
        for (std::size_t e = nb.offsets[x]; e < nb.offsets[x + 1]; ++e) {
            double diff = f[nb.nbr[e]] - f[x];
            double v = variant == SlopeVariant::two_sided  ? std::abs(diff)
                       : variant == SlopeVariant::ascending ? std::max(diff, 0.0)
                                                            : std::max(-diff, 0.0);
            best = std::max(best, v / nb.dist[e]);
        }
        out[x] = best;
    }
    return out;
}

SlopeField slope(const MetricMeasureSpace& space, const ScalarField& f, double h, SlopeVariant variant) {
    require_same_space(space, f.space_id(), f.size(), "calculus");
    h = default_radius(space, h);
    auto nb = Neighborhood::build(space, h);
    return {slope_values(nb, f.values(), variant), h, variant};
}

SlopeVariant parse_variant(const std::string& s) {
    if (s == "two_sided") return SlopeVariant::two_sided;
    if (s == "descending") return SlopeVariant::descending;
    if (s == "ascending") return SlopeVariant::ascending;
    throw InvalidArgument("calculus", "unknown slope variant '" + s + "'");
}

EnergyBackend EnergyBackend::slope(const MetricMeasureSpace& space, double h) {
    EnergyBackend b;
    b.kind = Kind::slope;
    b.space_id = space.id();
    b.nb = Neighborhood::build(space, default_radius(space, h));
    return b;
}

EnergyBackend EnergyBackend::quadratic_with(const MetricMeasureSpace& space, double h,
                                            const std::function<double(std::size_t, std::size_t)>& w) {
    EnergyBackend b;
    b.kind = Kind::quadratic;
    b.space_id = space.id();
    b.nb = Neighborhood::build(space, default_radius(space, h));
    for (std::size_t x = 0; x < b.nb.n(); ++x)
        for (std::size_t e = b.nb.offsets[x]; e < b.nb.offsets[x + 1]; ++e) {
            double v = w(x, b.nb.nbr[e]);
            if (!(v >= 0.0) || v != w(b.nb.nbr[e], x))
                throw InvalidArgument("calculus", "quadratic weights must be symmetric and nonnegative");
            b.weights.push_back(v);
        }
    return b;
}

EnergyBackend EnergyBackend::quadratic(const MetricMeasureSpace& space, double h) {
    const double r = default_radius(space, h);
    const auto& m = space.measure();
    return quadratic_with(space, r, [&](std::size_t i, std::size_t j) { return (m[i] + m[j]) / (4.0 * r * r); });
}

EnergyBackend::Kind parse_backend(const std::string& s) {
    if (s == "slope") return EnergyBackend::Kind::slope;
    if (s == "quadratic") return EnergyBackend::Kind::quadratic;
    throw InvalidArgument("calculus", "unknown backend '" + s + "'");
}

EnergyBackend make_backend(const MetricMeasureSpace& space, EnergyBackend::Kind kind, double h) {
    return kind == EnergyBackend::Kind::slope ? EnergyBackend::slope(space, h) : EnergyBackend::quadratic(space, h);
}

std::vector<double> gradient_norm(const MetricMeasureSpace& space, const std::vector<double>& f,
                                  const EnergyBackend& b) {
    if (b.kind == EnergyBackend::Kind::slope) return slope_values(b.nb, f);
    std::vector<double> out(space.n(), 0.0);
    for (std::size_t x = 0; x < space.n(); ++x) {
        double s = 0.0;
        for (std::size_t e = b.nb.offsets[x]; e < b.nb.offsets[x + 1]; ++e) {
            double diff = f[x] - f[b.nb.nbr[e]];
            s += b.weights[e] * diff * diff;
        }
        out[x] = std::sqrt(s / space.mass(x));
    }
    return out;
}

double cheeger_energy(const MetricMeasureSpace& space, const std::vector<double>& f, const EnergyBackend& b) {
    if (f.size() != space.n() || b.space_id != space.id())
        throw DimensionMismatch("calculus", "field/backend do not match the space");
    if (b.kind == EnergyBackend::Kind::slope) {
        auto s = slope_values(b.nb, f);
        double e = 0.0;
        for (std::size_t x = 0; x < s.size(); ++x) e += s[x] * s[x] * space.mass(x);
        return 0.5 * e;
    }
    double e = 0.0;
    for (std::size_t x = 0; x < space.n(); ++x)
        for (std::size_t k = b.nb.offsets[x]; k < b.nb.offsets[x + 1]; ++k) {
            double diff = f[x] - f[b.nb.nbr[k]];
            e += b.weights[k] * diff * diff;
        }
    return 0.5 * e;
}

double cheeger_energy(const MetricMeasureSpace& space, const ScalarField& f, const EnergyBackend& b) {
    require_same_space(space, f.space_id(), f.size(), "calculus");
    return cheeger_energy(space, f.values(), b);
}

double parallelogram_defect(const MetricMeasureSpace& space, const ScalarField& f, const ScalarField& g,
                            const EnergyBackend& b) {
    std::vector<double> sum(f.size()), diff(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        sum[i] = f[i] + g[i];
        diff[i] = f[i] - g[i];
    }
    return std::abs(cheeger_energy(space, sum, b) + cheeger_energy(space, diff, b) -
                    2.0 * cheeger_energy(space, f, b) - 2.0 * cheeger_energy(space, g, b));
}

double fisher_information(const MetricMeasureSpace& space, const std::vector<double>& f, const EnergyBackend& b) {
    auto gn = gradient_norm(space, f, b);
    double total = 0.0;
    for (std::size_t x = 0; x < f.size(); ++x) {
        if (gn[x] == 0.0) continue;
        if (f[x] <= 0.0) return std::numeric_limits<double>::infinity();
        total += space.mass(x) * gn[x] * gn[x] / f[x];
    }
    return total;
}

// ---------------------------------------------------------------------------
// chain rule

ScalarMap ScalarMap::identity() {
    return {"identity", [](double z) { return z; }, [](double) { return 1.0; }, 0.0};
}
ScalarMap ScalarMap::negate() {
    return {"negate", [](double z) { return -z; }, [](double) { return -1.0; }, 0.0};
}
ScalarMap ScalarMap::square(double) {
    return {"square", [](double z) { return z * z; }, [](double z) { return 2.0 * z; }, 2.0};
}
ScalarMap ScalarMap::truncate(double M) {
    ScalarMap s{"truncate", [M](double z) { return std::min(z, M); },
                [M](double z) { return z < M ? 1.0 : 0.0; }, 0.0};
    s.truncation = true;
    s.level = M;
    return s;
}

DiagnosticsReport chain_rule_check(const MetricMeasureSpace& space, const ScalarField& f, const ScalarMap& phi,
                                   const EnergyBackend& b, double C) {
    require_same_space(space, f.space_id(), f.size(), "calculus");
    const std::size_t n = space.n();
    std::vector<double> pf(n);
    for (std::size_t i = 0; i < n; ++i) pf[i] = phi.phi(f[i]);
    auto g_pf = gradient_norm(space, pf, b);
    auto g_f = gradient_norm(space, f.values(), b);
    const double h = b.radius();
    double lip_f = 0.0;
    for (double v : g_f) lip_f = std::max(lip_f, v);

    DiagnosticsReport r;
    r.name = "chain_rule";
    if (phi.truncation) {
        double l1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (f[i] == phi.level) continue;
            double expect = f[i] < phi.level ? g_f[i] : 0.0;
            l1 += std::abs(g_pf[i] - expect) * space.mass(i);
        }
        r.add("truncation_l1", l1, C * h * lip_f);
    } else {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            worst = std::max(worst, std::abs(g_pf[i] - std::abs(phi.dphi(f[i])) * g_f[i]));
        r.add("max_residual", worst, C * h * phi.lip_dphi * lip_f * lip_f);
    }
    r.context["phi"] = phi.name;
    r.context["backend"] = b.name();
    r.context["h"] = h;
    r.context["C"] = C;
    return r;
}

// ---------------------------------------------------------------------------
// proximal step

namespace {

// prox of (a/2)||v||_1^2 at w, written into out
void prox_l1_squared(const double* w, std::size_t len, double a, double* out, std::vector<double>& scratch) {
    scratch.assign(len, 0.0);
    for (std::size_t i = 0; i < len; ++i) scratch[i] = std::abs(w[i]);
    std::sort(scratch.begin(), scratch.end(), std::greater<>());
    double cum = 0.0, S = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
        cum += scratch[k];
        double Sk = cum / (1.0 + double(k + 1) * a);
        if (scratch[k] - a * Sk > 0.0) S = Sk;
        else break;
    }
    for (std::size_t i = 0; i < len; ++i) {
        double mag = std::max(std::abs(w[i]) - a * S, 0.0);
        out[i] = w[i] >= 0.0 ? mag : -mag;
    }
}

struct SlopeOperator {
    const Neighborhood& nb;
    const std::vector<double>& m;

    // (K g)_e = (g_y - g_x) / d over directed edges e = (x, y)
    void apply(const std::vector<double>& g, std::vector<double>& out) const {
        out.resize(nb.nbr.size());
        for (std::size_t x = 0; x < nb.n(); ++x)
            for (std::size_t e = nb.offsets[x]; e < nb.offsets[x + 1]; ++e)
                out[e] = (g[nb.nbr[e]] - g[x]) / nb.dist[e];
    }
    void apply_adjoint(const std::vector<double>& z, std::vector<double>& out) const {
        out.assign(nb.n(), 0.0);
        for (std::size_t x = 0; x < nb.n(); ++x)
            for (std::size_t e = nb.offsets[x]; e < nb.offsets[x + 1]; ++e) {
                double v = z[e] / nb.dist[e];
                out[nb.nbr[e]] += v;
                out[x] -= v;
            }
    }
};

double power_norm_sq(const SlopeOperator& K, const std::vector<double>& m) {
    const std::size_t n = m.size();
    std::vector<double> v(n), u, kv;
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + 3.7 * double(i));
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
        double nv = 0.0;
        for (double x : v) nv += x * x;
        nv = std::sqrt(nv);
        if (nv == 0.0) return 0.0;
        for (auto& x : v) x /= nv;
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = v[i] / std::sqrt(m[i]);
        K.apply(s, kv);
        K.apply_adjoint(kv, u);
        for (std::size_t i = 0; i < n; ++i) u[i] /= std::sqrt(m[i]);
        double next = 0.0;
        for (std::size_t i = 0; i < n; ++i) next += u[i] * v[i];
        v = u;
        if (it > 20 && std::abs(next - lambda) <= 1e-6 * next) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

ProxResult prox_slope(const MetricMeasureSpace& space, const std::vector<double>& f, const EnergyBackend& b,
                      double tau, const ProxOptions& opts, const std::vector<double>* warm, std::size_t step) {
    const auto& m = space.measure();
    const std::size_t n = space.n();
    const auto& nb = b.nb;
    SlopeOperator K{nb, m};
    const std::size_t ne = nb.nbr.size();
    ProxResult res;
    if (ne == 0) {
        res.g = f;
        return res;
    }
    const double L = tau * power_norm_sq(K, m) * 1.02;
    const double step_size = 1.0 / L;

    std::vector<double> z(ne, 0.0);
    if (warm && warm->size() == ne) z = *warm;
    std::vector<double> y = z, znew(ne), kt, kg, g(n), scratch;

    auto primal_from_dual = [&](const std::vector<double>& dual, std::vector<double>& out) {
        K.apply_adjoint(dual, kt);
        for (std::size_t i = 0; i < n; ++i) out[i] = f[i] - tau * kt[i] / m[i];
    };
    auto gap_of = [&](const std::vector<double>& dual, double& primal) {
        std::vector<double> gp(n);
        primal_from_dual(dual, gp);  // leaves K^T dual in kt
        auto s = slope_values(nb, gp);
        double P = 0.0, D = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            P += m[i] * (0.5 * s[i] * s[i] + (gp[i] - f[i]) * (gp[i] - f[i]) / (2.0 * tau));
            D += kt[i] * f[i] - 0.5 * tau * kt[i] * kt[i] / m[i];
        }
        for (std::size_t x = 0; x < n; ++x) {
            double l1 = 0.0;
            for (std::size_t e = nb.offsets[x]; e < nb.offsets[x + 1]; ++e) l1 += std::abs(dual[e]);
            D -= l1 * l1 / (2.0 * m[x]);
        }
        primal = P;
        return P - D;
    };

    double t = 1.0;
    double rel_gap = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    for (; it < opts.max_iter; ++it) {
        if (it % opts.check_every == 0) {
            double P;
            double gap = gap_of(z, P);
            rel_gap = std::max(gap, 0.0) / std::max(1.0, std::abs(P));
            if (rel_gap <= opts.tol) break;
        }
        primal_from_dual(y, g);
        K.apply(g, kg);
        // ascent on the concave dual: w = y + step * K g, then the prox of the l1^2 groups
        for (std::size_t e = 0; e < ne; ++e) kg[e] = y[e] + step_size * kg[e];
        for (std::size_t x = 0; x < n; ++x) {
            std::size_t lo = nb.offsets[x], len = nb.offsets[x + 1] - lo;
            if (len) prox_l1_squared(kg.data() + lo, len, step_size / m[x], znew.data() + lo, scratch);
        }
        double restart = 0.0;
        for (std::size_t e = 0; e < ne; ++e) restart += (y[e] - znew[e]) * (znew[e] - z[e]);
        if (restart > 0.0) t = 1.0;
        double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        double beta = (t - 1.0) / tn;
        for (std::size_t e = 0; e < ne; ++e) {
            y[e] = znew[e] + beta * (znew[e] - z[e]);
            z[e] = znew[e];
        }
        t = tn;
    }
    if (!(rel_gap <= opts.tol)) throw ProxNoConvergence(step, rel_gap);
    res.g.resize(n);
    primal_from_dual(z, res.g);
    res.iterations = it;
    res.residual = rel_gap;
    res.dual = std::move(z);
    return res;
}

}  // namespace

Eigen::SparseMatrix<double> implicit_euler_matrix(const MetricMeasureSpace& space, const EnergyBackend& b,
                                                  double tau) {
    const std::size_t n = space.n();
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t x = 0; x < n; ++x) {
        double diag = space.mass(x);
        for (std::size_t e = b.nb.offsets[x]; e < b.nb.offsets[x + 1]; ++e) {
            double w = 2.0 * tau * b.weights[e];
            diag += w;
            trip.emplace_back(int(x), int(b.nb.nbr[e]), -w);
        }
        trip.emplace_back(int(x), int(x), diag);
    }
    Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

ProxResult prox(const MetricMeasureSpace& space, const std::vector<double>& f, const EnergyBackend& b, double tau,
                const ProxOptions& opts, const std::vector<double>* warm, std::size_t step) {
    if (!(tau > 0.0)) throw InvalidArgument("calculus", "tau must be positive");
    if (f.size() != space.n() || b.space_id != space.id())
        throw DimensionMismatch("calculus", "field/backend do not match the space");
    if (b.kind == EnergyBackend::Kind::slope) return prox_slope(space, f, b, tau, opts, warm, step);

    const std::size_t n = space.n();
    auto A = implicit_euler_matrix(space, b, tau);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success) throw ProxNoConvergence(step, std::numeric_limits<double>::infinity());
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = space.mass(i) * f[i];
    Eigen::VectorXd g = solver.solve(rhs);
    // one step of iterative refinement keeps the residual at round-off level
    Eigen::VectorXd r = rhs - A * g;
    g += solver.solve(r);
    r = rhs - A * g;
    ProxResult res;
    res.g.assign(g.data(), g.data() + n);
    res.residual = r.cwiseAbs().maxCoeff() / std::max(1e-300, rhs.cwiseAbs().maxCoeff());
    res.iterations = 1;
    if (!(res.residual <= std::max(opts.tol, 1e-12))) throw ProxNoConvergence(step, res.residual);
    return res;
}

std::vector<double> quadratic_laplacian(const MetricMeasureSpace& space, const std::vector<double>& f,
                                        const EnergyBackend& b) {
    std::vector<double> out(space.n(), 0.0);
    for (std::size_t x = 0; x < space.n(); ++x) {
        double s = 0.0;
        for (std::size_t e = b.nb.offsets[x]; e < b.nb.offsets[x + 1]; ++e) s += b.weights[e] * (f[x] - f[b.nb.nbr[e]]);
        out[x] = -2.0 * s / space.mass(x);
    }
    return out;
}

ScalarField laplacian(const MetricMeasureSpace& space, const ScalarField& f, const EnergyBackend& b, double tau,
                      const ProxOptions& opts) {
    require_same_space(space, f.space_id(), f.size(), "calculus");
    if (b.kind == EnergyBackend::Kind::quadratic) return ScalarField(space.id(), quadratic_laplacian(space, f.values(), b));
    auto p = prox(space, f.values(), b, tau, opts);
    std::vector<double> out(space.n());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (p.g[i] - f[i]) / tau;
    return ScalarField(space.id(), std::move(out));
}

DiagnosticsReport integration_by_parts_check(const MetricMeasureSpace& space, const ScalarField& f,
                                             const ScalarField& g, const EnergyBackend& b, double tau,
                                             const ScalarMap& phi, double C) {
    require_same_space(space, g.space_id(), g.size(), "calculus");
    const double h = b.radius();
    if (tau <= 0.0) tau = h * h;
    auto lap = laplacian(space, f, b, tau);
    auto gf = gradient_norm(space, f.values(), b);
    auto gg = gradient_norm(space, g.values(), b);
    double lhs = 0.0, rhs = 0.0, ident = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < space.n(); ++i) {
        double m = space.mass(i);
        lhs += g[i] * lap[i] * m;
        rhs += gg[i] * gf[i] * m;
        ident += (phi.phi(f[i]) * lap[i] + gf[i] * gf[i] * phi.dphi(f[i])) * m;
        scale += gf[i] * gf[i] * std::abs(phi.dphi(f[i])) * m;
    }
    lhs = std::abs(lhs);
    const bool quad = b.kind == EnergyBackend::Kind::quadratic;
    DiagnosticsReport r;
    r.name = "integration_by_parts";
    r.add("delta1_violation", std::max(0.0, lhs - rhs), quad ? 1e-9 * std::max(1.0, rhs) : C * h * std::max(1.0, rhs));
    const bool exact2 = quad && phi.lip_dphi == 0.0 && !phi.truncation;
    r.add("delta2_residual", std::abs(ident), exact2 ? 1e-9 * std::max(1.0, scale) : C * h * std::max(1.0, scale));
    r.context["lhs"] = lhs;
    r.context["rhs"] = rhs;
    r.context["backend"] = b.name();
    r.context["tau"] = tau;
    r.context["h"] = h;
    r.context["phi"] = phi.name;
    return r;
}

}  // namespace otflow::calculus
