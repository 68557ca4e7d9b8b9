#include "otflow/transport.hpp"

#include "otflow/error.hpp"
#include "otflow/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace otflow::transport {

namespace {

Eigen::MatrixXd half_sq_cost(const MetricMeasureSpace& space) {
    return 0.5 * space.dist_matrix().array().square().matrix();
}

void check_pair(const MetricMeasureSpace& space, const DensityField& mu, const DensityField& nu) {
    require_same_space(space, mu.space_id(), mu.size(), "transport");
    require_same_space(space, nu.space_id(), nu.size(), "transport");
}

double plan_cost(const MetricMeasureSpace& space, const Eigen::MatrixXd& gamma) {
    return (space.dist_matrix().array().square() * gamma.array()).sum();
}

}  // namespace

std::vector<std::tuple<std::size_t, std::size_t, double>> TransportPlan::support() const {
    std::vector<std::tuple<std::size_t, std::size_t, double>> out;
    for (Eigen::Index i = 0; i < gamma.rows(); ++i)
        for (Eigen::Index j = 0; j < gamma.cols(); ++j)
            if (gamma(i, j) > 0.0) out.emplace_back(std::size_t(i), std::size_t(j), gamma(i, j));
    return out;
}

std::vector<double> CurvePlan::slice_masses(std::size_t k, std::size_t n) const {
    std::vector<double> out(n, 0.0);
    for (const auto& c : curves) out[c.path[k]] += c.weight;
    return out;
}

double CurvePlan::action(const MetricMeasureSpace& space) const {
    double total = 0.0;
    for (const auto& c : curves) {
        double a = 0.0;
        for (std::size_t k = 0; k + 1 < c.path.size(); ++k) {
            double d = space.dist(c.path[k], c.path[k + 1]);
            a += d * d / (times[k + 1] - times[k]);
        }
        total += c.weight * a;
    }
    return total;
}

std::vector<double> c_transform_values(const MetricMeasureSpace& space, const std::vector<double>& psi) {
    const std::size_t n = space.n();
    const auto& d = space.dist_matrix();
    std::vector<double> out(n);
    parallel_for(n, [&](std::size_t y) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < n; ++x) best = std::min(best, 0.5 * d(x, y) * d(x, y) - psi[x]);
        out[y] = best;
    });
    return out;
}

ScalarField c_transform(const MetricMeasureSpace& space, const ScalarField& psi) {
    require_same_space(space, psi.space_id(), psi.size(), "transport");
    return ScalarField(space.id(), c_transform_values(space, psi.values()));
}

ExactTransport solve_exact(const MetricMeasureSpace& space, const DensityField& mu, const DensityField& nu) {
    check_pair(space, mu, nu);
    const std::size_t n = space.n();
    auto a = mu.masses(space), b = nu.masses(space);
    auto cost = half_sq_cost(space);
    auto sol = network_simplex(cost, a, b);
    // the identity coupling has a degenerate dual; the constant potential is the natural one
    if (a == b) std::fill(sol.u.begin(), sol.u.end(), 0.0);

    ExactTransport out;
    out.pivots = sol.pivots;
    auto& plan = out.plan;
    plan.space_id = space.id();
    plan.gamma = std::move(sol.gamma);
    plan.mu = mu;
    plan.nu = nu;
    plan.cost = plan_cost(space, plan.gamma);
    plan.is_optimal = true;

    // psi = (phi)^c with phi = u^c computed from the tree potentials on supp(mu)
    const auto& d = space.dist_matrix();
    std::vector<double> phi(n);
    for (std::size_t y = 0; y < n; ++y) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < n; ++x)
            if (sol.row_used[x]) best = std::min(best, 0.5 * d(x, y) * d(x, y) - sol.u[x]);
        phi[y] = best;
    }
    auto psi = c_transform_values(space, phi);
    auto psi_c = c_transform_values(space, psi);
    double dual = 0.0;
    for (std::size_t i = 0; i < n; ++i) dual += psi[i] * a[i] + psi_c[i] * b[i];
    out.potentials.psi = ScalarField(space.id(), std::move(psi));
    out.potentials.psi_c = ScalarField(space.id(), std::move(psi_c));
    out.potentials.gap = 0.5 * plan.cost - dual;
    if (!(std::abs(out.potentials.gap) <= 1e-6 * std::max(1.0, plan.cost)))
        throw SolverFailure("transport", "duality gap " + format_double(out.potentials.gap) + " too large");
    return out;
}

TransportPlan w2_exact(const MetricMeasureSpace& space, const DensityField& mu, const DensityField& nu) {
    return solve_exact(space, mu, nu).plan;
}

PotentialPair kantorovich_potential(const MetricMeasureSpace& space, const DensityField& mu,
                                    const DensityField& nu) {
    return solve_exact(space, mu, nu).potentials;
}

double default_epsilon(const MetricMeasureSpace& space) {
    std::vector<double> d2;
    for (std::size_t i = 0; i < space.n(); ++i)
        for (std::size_t j = i + 1; j < space.n(); ++j) d2.push_back(space.dist(i, j) * space.dist(i, j));
    if (d2.empty()) return 1e-2;
    auto mid = d2.begin() + std::ptrdiff_t(d2.size() / 2);
    std::nth_element(d2.begin(), mid, d2.end());
    return 1e-2 * *mid;
}

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
    double mx = v.maxCoeff();
    return mx + std::log((v.array() - mx).exp().sum());
}

// Newton ascent on the concave semi-dual g -> sum b g + sum a f(g); sets f from g on exit.
// Returns the L1 column marginal error.
double semidual_newton(const Eigen::MatrixXd& cost, const std::vector<double>& la, const std::vector<double>& lb,
                       const std::vector<double>& a, const std::vector<std::size_t>& R, double eps, double tol,
                       std::vector<double>& f, std::vector<double>& g, std::size_t& used, std::size_t max_iter) {
    const Eigen::Index ns = cost.rows(), nt = cost.cols();
    Eigen::VectorXd b(nt), gv(nt);
    for (Eigen::Index j = 0; j < nt; ++j) b[j] = std::exp(lb[std::size_t(j)]), gv[j] = g[std::size_t(j)];
    Eigen::MatrixXd P(ns, nt);
    Eigen::VectorXd fv(ns), col(nt);
    auto evaluate = [&](const Eigen::VectorXd& x) {
        double F = b.dot(x);
        for (Eigen::Index i = 0; i < ns; ++i) {
            Eigen::VectorXd z(nt);
            for (Eigen::Index j = 0; j < nt; ++j) z[j] = lb[std::size_t(j)] + (x[j] - cost(i, j)) / eps;
            double l = log_sum_exp(z);
            fv[i] = -eps * l;
            P.row(i) = (z.array() - l).exp().transpose();
            F += a[R[std::size_t(i)]] * fv[i];
        }
        col.setZero();
        for (Eigen::Index i = 0; i < ns; ++i) col += a[R[std::size_t(i)]] * P.row(i).transpose();
        return F;
    };
    double F = evaluate(gv), err = (col - b).cwiseAbs().sum();
    for (int k = 0; k < 100 && err > tol && used < max_iter; ++k, ++used) {
        Eigen::VectorXd grad = b - col;
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nt, nt);
        for (Eigen::Index i = 0; i < ns; ++i) {
            double w = a[R[std::size_t(i)]];
            Eigen::VectorXd p = P.row(i).transpose();
            H.diagonal() += w * p;
            H.noalias() -= w * p * p.transpose();
        }
        H /= eps;
        // constants are the null direction; a tiny ridge keeps the factorisation definite
        H.diagonal().array() += 1e-14 * H.diagonal().maxCoeff() + 1e-300;
        Eigen::VectorXd step = H.ldlt().solve(grad);
        step.array() -= step.mean();
        double t = 1.0, slope = grad.dot(step);
        Eigen::VectorXd trial;
        double Ft = F;
        for (int ls = 0; ls < 50; ++ls, t *= 0.5) {
            trial = gv + t * step;
            Ft = evaluate(trial);
            if (Ft >= F + 1e-4 * t * slope) break;
        }
        if (!(Ft >= F)) break;
        gv = trial;
        F = Ft;
        err = (col - b).cwiseAbs().sum();
    }
    evaluate(gv);
    for (Eigen::Index j = 0; j < nt; ++j) g[std::size_t(j)] = gv[j];
    for (Eigen::Index i = 0; i < ns; ++i) f[std::size_t(i)] = fv[i];
    return (col - b).cwiseAbs().sum();
}

}  // namespace

TransportPlan w2_entropic(const MetricMeasureSpace& space, const DensityField& mu, const DensityField& nu,
                          double eps, std::size_t max_iter, double tol) {
    if (!(eps > 0.0)) throw InvalidArgument("transport", "epsilon must be positive");
    check_pair(space, mu, nu);
    const std::size_t n = space.n();
    auto a = mu.masses(space), b = nu.masses(space);
    std::vector<std::size_t> R, C;
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] > 0.0) R.push_back(i);
        if (b[i] > 0.0) C.push_back(i);
    }
    const std::size_t ns = R.size(), nt = C.size();
    Eigen::MatrixXd cost(ns, nt);
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < nt; ++j) cost(i, j) = space.dist(R[i], C[j]) * space.dist(R[i], C[j]);
    std::vector<double> la(ns), lb(nt), f(ns, 0.0), g(nt, 0.0), tmp;
    for (std::size_t i = 0; i < ns; ++i) la[i] = std::log(a[R[i]]);
    for (std::size_t j = 0; j < nt; ++j) lb[j] = std::log(b[C[j]]);

    auto lse = [](std::vector<double>& v) {
        double mx = *std::max_element(v.begin(), v.end());
        double s = 0.0;
        for (double x : v) s += std::exp(x - mx);
        return mx + std::log(s);
    };
    auto marginal_error = [&](double e) {
        double total = 0.0;
        for (std::size_t i = 0; i < ns; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < nt; ++j) row += std::exp(la[i] + lb[j] + (f[i] + g[j] - cost(i, j)) / e);
            total += std::abs(row - a[R[i]]);
        }
        return total;
    };
    // runs alternating updates at smoothing e until the row error drops below goal
    auto sweeps = [&](double e, double goal, std::size_t budget, std::size_t& used) {
        double err = std::numeric_limits<double>::infinity();
        for (std::size_t it = 0; it < budget; ++it, ++used) {
            for (std::size_t i = 0; i < ns; ++i) {
                tmp.resize(nt);
                for (std::size_t j = 0; j < nt; ++j) tmp[j] = lb[j] + (g[j] - cost(i, j)) / e;
                f[i] = -e * lse(tmp);
            }
            for (std::size_t j = 0; j < nt; ++j) {
                tmp.resize(ns);
                for (std::size_t i = 0; i < ns; ++i) tmp[i] = la[i] + (f[i] - cost(i, j)) / e;
                g[j] = -e * lse(tmp);
            }
            if (it % 10 == 9 || it + 1 == budget) {
                err = marginal_error(e);
                if (err <= goal) break;
            }
        }
        return err;
    };
    // epsilon scaling: halve the smoothing from the largest cost, warm starting the potentials
    std::size_t used = 0;
    for (double e = cost.maxCoeff() / 2; e > 2 * eps && used < max_iter; e /= 2)
        sweeps(e, 1e-3, std::min<std::size_t>(1000, max_iter - used), used);
    double err = sweeps(eps, tol, std::min<std::size_t>(2000, max_iter > used ? max_iter - used : 1), used);
    if (!(err <= tol) && nt <= 2048) err = semidual_newton(cost, la, lb, a, R, eps, tol, f, g, used, max_iter);
    if (!(err <= tol) && used < max_iter) err = sweeps(eps, tol, max_iter - used, used);
    if (!(err <= tol)) throw NoConvergence(max_iter, err);
    TransportPlan plan;
    plan.space_id = space.id();
    plan.gamma = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < nt; ++j)
            plan.gamma(Eigen::Index(R[i]), Eigen::Index(C[j])) = std::exp(la[i] + lb[j] + (f[i] + g[j] - cost(i, j)) / eps);
    plan.mu = mu;
    plan.nu = nu;
    plan.cost = plan_cost(space, plan.gamma);
    plan.is_optimal = false;
    return plan;
}

std::pair<TransportPlan, DensityField> push_forward_plan(const MetricMeasureSpace& space,
                                                         const TransportPlan& gamma, const DensityField& mu) {
    require_same_space(space, mu.space_id(), mu.size(), "transport");
    if (gamma.space_id != space.id()) throw DimensionMismatch("transport", "plan does not belong to this space");
    const std::size_t n = space.n();
    Eigen::VectorXd row = gamma.gamma.rowwise().sum();
    Eigen::MatrixXd g_mu = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t i = 0; i < n; ++i) {
        double mass = mu[i] * space.mass(i);
        if (mass <= 0.0) continue;
        if (!(row[Eigen::Index(i)] > 0.0)) throw AbsoluteContinuityViolation(i);
        g_mu.row(Eigen::Index(i)) = gamma.gamma.row(Eigen::Index(i)) * (mass / row[Eigen::Index(i)]);
    }
    Eigen::VectorXd col = g_mu.colwise().sum().transpose();
    std::vector<double> eta(n);
    for (std::size_t j = 0; j < n; ++j) eta[j] = col[Eigen::Index(j)] / space.mass(j);
    auto pushed = DensityField::normalized(space, std::move(eta));
    TransportPlan out;
    out.space_id = space.id();
    out.gamma = std::move(g_mu);
    out.mu = mu;
    out.nu = pushed;
    out.cost = plan_cost(space, out.gamma);
    out.is_optimal = false;
    return {out, pushed};
}

CurvePlan geodesic_plan(const MetricMeasureSpace& space, const DensityField& mu0, const DensityField& mu1,
                        std::size_t M) {
    if (!space.has_geodesic_hint()) throw NoGeodesicStructure();
    if (M < 1) throw InvalidArgument("transport", "geodesic plan needs M >= 1");
    auto plan = w2_exact(space, mu0, mu1);
    CurvePlan out;
    out.space_id = space.id();
    for (std::size_t k = 0; k <= M; ++k) out.times.push_back(double(k) / double(M));
    for (const auto& [x, y, w] : plan.support()) {
        Curve c;
        c.weight = w;
        auto hint = space.geodesic_hint(x, y);
        std::vector<double> arc(hint.size(), 0.0);
        for (std::size_t p = 1; p < hint.size(); ++p) arc[p] = arc[p - 1] + space.dist(hint[p - 1], hint[p]);
        const double total = arc.back();
        for (std::size_t k = 0; k <= M; ++k) {
            if (k == 0) { c.path.push_back(x); continue; }
            if (k == M) { c.path.push_back(y); continue; }
            const double target = out.times[k] * total;
            std::size_t best = hint.front();
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t p = 0; p < hint.size(); ++p) {
                double dev = std::abs(arc[p] - target);
                if (dev < bd - 1e-12 * total || (std::abs(dev - bd) <= 1e-12 * total && hint[p] < best)) {
                    bd = std::min(bd, dev);
                    best = hint[p];
                }
            }
            c.path.push_back(best);
        }
        out.curves.push_back(std::move(c));
    }
    return out;
}

CurvePlan superpose(const MetricMeasureSpace& space, const std::vector<double>& times,
                    const std::vector<DensityField>& slices) {
    if (slices.empty() || slices.size() != times.size())
        throw DimensionMismatch("transport", "times and slices must have equal nonzero length");
    for (const auto& s : slices) require_same_space(space, s.space_id(), s.size(), "transport");
    const std::size_t n = space.n();
    CurvePlan out;
    out.space_id = space.id();
    out.times = times;
    for (std::size_t i = 0; i < n; ++i) {
        double w = slices[0][i] * space.mass(i);
        if (w > 0.0) out.curves.push_back({w, {i}});
    }
    for (std::size_t k = 0; k + 1 < slices.size(); ++k) {
        auto plan = w2_exact(space, slices[k], slices[k + 1]);
        std::vector<std::vector<std::size_t>> at(n);
        for (std::size_t c = 0; c < out.curves.size(); ++c) at[out.curves[c].path.back()].push_back(c);
        std::vector<Curve> next;
        for (std::size_t i = 0; i < n; ++i) {
            if (at[i].empty()) continue;
            // split the curves sitting at i along row i of the plan, in index order
            std::vector<std::pair<std::size_t, double>> targets;
            double row_total = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (plan.gamma(Eigen::Index(i), Eigen::Index(j)) > 0.0) {
                    targets.emplace_back(j, plan.gamma(Eigen::Index(i), Eigen::Index(j)));
                    row_total += targets.back().second;
                }
            // north-west corner split of the curves at i against the row, both as
            // consecutive intervals of [0, W)
            double W = 0.0;
            for (auto c : at[i]) W += out.curves[c].weight;
            if (targets.empty()) throw SolverFailure("transport", "plan row empty where slice has mass");
            std::vector<double> cb{0.0}, tb{0.0};
            for (auto c : at[i]) cb.push_back(cb.back() + out.curves[c].weight);
            for (auto& t : targets) tb.push_back(tb.back() + t.second * W / row_total);
            cb.back() = W;
            tb.back() = W;
            std::size_t p = 0, q = 0;
            while (p < at[i].size() && q < targets.size()) {
                double w = std::min(cb[p + 1], tb[q + 1]) - std::max(cb[p], tb[q]);
                if (w > 0.0) {
                    Curve c = out.curves[at[i][p]];
                    c.weight = w;
                    c.path.push_back(targets[q].first);
                    next.push_back(std::move(c));
                }
                if (cb[p + 1] <= tb[q + 1]) ++p;
                else ++q;
            }
        }
        out.curves = std::move(next);
    }
    return out;
}

double relative_entropy(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] <= 0.0) continue;
        if (b[i] <= 0.0) return std::numeric_limits<double>::infinity();
        s += a[i] * std::log(a[i] / b[i]);
    }
    return s;
}

double entropy(const MetricMeasureSpace& space, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] > 0.0) s += space.mass(i) * f[i] * std::log(f[i]);
    return s;
}

double entropy(const MetricMeasureSpace& space, const DensityField& f) { return entropy(space, f.values()); }

void save_plan(const TransportPlan& plan, const std::filesystem::path& path) {
    std::string out = "# i j mass\n";
    for (const auto& [i, j, w] : plan.support())
        out += std::to_string(i) + " " + std::to_string(j) + " " + format_double(w) + "\n";
    write_file_atomic(path, out);
}

void save_curve_plan(const CurvePlan& plan, const std::filesystem::path& path) {
    std::string out = "times";
    for (double t : plan.times) out += " " + format_double(t);
    out += "\n";
    for (const auto& c : plan.curves) {
        out += format_double(c.weight) + " \"";
        for (std::size_t k = 0; k < c.path.size(); ++k) out += (k ? " " : "") + std::to_string(c.path[k]);
        out += "\"\n";
    }
    write_file_atomic(path, out);
}

CurvePlan load_curve_plan(const MetricMeasureSpace& space, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "file", "cannot open " + path.string());
    CurvePlan plan;
    plan.space_id = space.id();
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("times", 0) == 0) {
            std::istringstream ss(line.substr(5));
            for (std::string tok; ss >> tok;) {
                double t;
                if (!parse_double(tok, t)) throw ParseError(no, "times", "bad time '" + tok + "'");
                plan.times.push_back(t);
            }
            continue;
        }
        auto q1 = line.find('"'), q2 = line.rfind('"');
        if (q1 == std::string::npos || q2 == q1) throw ParseError(no, "curve", "expected weight \"i0 ... iM\"");
        Curve c;
        std::string w = line.substr(0, q1);
        w.erase(w.find_last_not_of(" \t") + 1);
        if (!parse_double(w, c.weight)) throw ParseError(no, "weight", "bad weight '" + w + "'");
        std::istringstream ss(line.substr(q1 + 1, q2 - q1 - 1));
        for (std::size_t p; ss >> p;) {
            if (p >= space.n()) throw ParseError(no, "curve", "point index out of range");
            c.path.push_back(p);
        }
        if (c.path.size() != plan.times.size()) throw ParseError(no, "curve", "path length does not match times");
        plan.curves.push_back(std::move(c));
    }
    return plan;
}

}  // namespace otflow::transport
