#include "otflow/flows.hpp"

#include "otflow/error.hpp"
#include "otflow/report.hpp"
#include "otflow/transport.hpp"
#include "otflow/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace otflow::flows {

std::string to_string(FlowKind kind) { return kind == FlowKind::l2_heat ? "l2_heat" : "jko_entropy"; }

FlowKind parse_flow_kind(const std::string& s) {
    if (s == "l2_heat") return FlowKind::l2_heat;
    if (s == "jko_entropy") return FlowKind::jko_entropy;
    throw InvalidArgument("flows", "unknown flow kind '" + s + "'");
}

DensityField Trajectory::density_at(const MetricMeasureSpace& space, std::size_t k) const {
    auto v = fields.at(k);
    for (auto& x : v) {
        if (x < 0.0 && x > -1e-12) x = 0.0;
    }
    return DensityField::normalized(space, std::move(v));
}

std::vector<DensityField> Trajectory::densities(const MetricMeasureSpace& space) const {
    std::vector<DensityField> out;
    for (std::size_t k = 0; k < fields.size(); ++k) out.push_back(density_at(space, k));
    return out;
}

namespace {

bool looks_like_density(const MetricMeasureSpace& space, const std::vector<double>& f) {
    double total = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] < 0.0) return false;
        total += f[i] * space.mass(i);
    }
    return std::abs(total - 1.0) <= 1e-10;
}

double l2_sq(const MetricMeasureSpace& space, const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += space.mass(i) * (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

}  // namespace

Trajectory heat_flow(const MetricMeasureSpace& space, const ScalarField& f0, const calculus::EnergyBackend& backend,
                     double tau, std::size_t M, const SliceSink& sink, const calculus::ProxOptions& opts) {
    if (!(tau > 0.0)) throw InvalidArgument("flows", "tau must be positive");
    require_same_space(space, f0.space_id(), f0.size(), "flows");
    if (backend.space_id != space.id()) throw DimensionMismatch("flows", "backend does not match the space");
    Trajectory traj;
    traj.space_id = space.id();
    traj.kind = FlowKind::l2_heat;
    traj.backend = backend.name();
    traj.tau = tau;
    traj.density = looks_like_density(space, f0.values());
    traj.times.push_back(0.0);
    traj.fields.push_back(f0.values());
    if (sink) sink(traj, 0);
    std::vector<double> dual;
    double energy = calculus::cheeger_energy(space, f0.values(), backend);
    for (std::size_t k = 0; k < M; ++k) {
        const auto& f = traj.fields.back();
        auto res = calculus::prox(space, f, backend, tau, opts, dual.empty() ? nullptr : &dual, k);
        double next_energy = calculus::cheeger_energy(space, res.g, backend);
        StepMeta meta;
        meta.inner_iterations = res.iterations;
        meta.inner_residual = res.residual;
        meta.objective_decrease = energy - next_energy - l2_sq(space, res.g, f) / (2.0 * tau);
        energy = next_energy;
        dual = std::move(res.dual);
        traj.times.push_back(double(k + 1) * tau);
        traj.fields.push_back(std::move(res.g));
        traj.step_meta.push_back(meta);
        if (sink) sink(traj, k + 1);
    }
    return traj;
}

// ---------------------------------------------------------------------------
// JKO step

namespace {

struct DualState {
    // per column j: smoothed max s_j, softmax over rows p(:, j), b_j = m_j exp(s_j - 1)
    Eigen::MatrixXd P;
    Eigen::VectorXd s, b;
    double value = 0.0;  // F(phi)
};

void evaluate(const Eigen::MatrixXd& C, const Eigen::VectorXd& a, const Eigen::VectorXd& m,
              const Eigen::VectorXd& phi, double eps, DualState& st, bool with_softmax) {
    const Eigen::Index r = C.rows(), n = C.cols();
    st.s.resize(n);
    st.b.resize(n);
    if (with_softmax) st.P.resize(r, n);
    double penalty = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < r; ++i) mx = std::max(mx, phi[i] - C(i, j));
        double sum = 0.0;
        for (Eigen::Index i = 0; i < r; ++i) {
            double e = std::exp((phi[i] - C(i, j) - mx) / eps);
            if (with_softmax) st.P(i, j) = e;
            sum += e;
        }
        st.s[j] = mx + eps * std::log(sum);
        st.b[j] = m[j] * std::exp(st.s[j] - 1.0);
        penalty += st.b[j];
        if (with_softmax) st.P.col(j) /= sum;
    }
    st.value = a.dot(phi) - penalty;
}


// max of: sum gamma |C + log(b/m) + 1 - phi| (stationarity), the largest violation of
// C + log(b/m) + 1 - phi >= 0 (dual feasibility), and the L1 row error
double kkt_residual(const Eigen::MatrixXd& C, const Eigen::VectorXd& a, const Eigen::VectorXd& m,
                    const Eigen::VectorXd& phi, const Eigen::MatrixXd& gamma, const Eigen::VectorXd& b) {
    double stationarity = 0.0, feasibility = 0.0;
    for (Eigen::Index j = 0; j < C.cols(); ++j) {
        double lb = b[j] > 0.0 ? std::log(b[j] / m[j]) + 1.0 : -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < C.rows(); ++i) {
            double v = C(i, j) + lb - phi[i];
            feasibility = std::max(feasibility, -v);
            if (gamma(i, j) > 0.0) stationarity += gamma(i, j) * std::abs(v);
        }
    }
    double row_err = (gamma.rowwise().sum() - a).lpNorm<1>();
    return std::max({stationarity, feasibility, row_err});
}

// Exact solve of the optimality system on the active set {s_j - phi_i + C_ij <= 30 eps}:
// phi_i - C_ij = s_j on a spanning forest of it (smallest gaps first), one additive
// constant per component fixed by mass balance, flows by leaf peeling.
bool polish(const Eigen::MatrixXd& C, const Eigen::VectorXd& a, const Eigen::VectorXd& m, Eigen::VectorXd& phi,
            const Eigen::VectorXd& s, double eps, Eigen::MatrixXd& gamma, Eigen::VectorXd& b) {
    const Eigen::Index r = C.rows(), n = C.cols();
    const std::size_t N = std::size_t(r + n);
    struct Edge {
        double gap;
        Eigen::Index i, j;
    };
    std::vector<Edge> edges;
    const double band = std::max(30.0 * eps, 1e-12);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < r; ++i) {
            double g = s[j] - (phi[i] - C(i, j));
            if (g <= band) edges.push_back({g, i, j});
        }
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        return x.gap != y.gap ? x.gap < y.gap : (x.j != y.j ? x.j < y.j : x.i < y.i);
    });
    std::vector<std::size_t> parent(N);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<std::vector<std::pair<std::size_t, Eigen::Index>>> adj(N);  // (neighbour, edge index)
    std::vector<Edge> tree;
    for (const auto& e : edges) {
        std::size_t u = std::size_t(e.i), v = std::size_t(r + e.j);
        if (find(u) == find(v)) continue;
        parent[find(u)] = find(v);
        adj[u].push_back({v, Eigen::Index(tree.size())});
        adj[v].push_back({u, Eigen::Index(tree.size())});
        tree.push_back(e);
    }
    // potentials per component from a root row, then the mass-balance shift
    std::vector<double> pot(N, 0.0);
    std::vector<int> comp(N, -1);
    std::vector<std::vector<std::size_t>> members;
    for (std::size_t root = 0; root < N; ++root) {
        if (comp[root] >= 0) continue;
        int c = int(members.size());
        members.emplace_back();
        std::vector<std::size_t> stack{root};
        comp[root] = c;
        pot[root] = root < std::size_t(r) ? phi[Eigen::Index(root)] : s[Eigen::Index(root - r)];
        while (!stack.empty()) {
            std::size_t u = stack.back();
            stack.pop_back();
            members[c].push_back(u);
            for (auto [v, ei] : adj[u]) {
                if (comp[v] >= 0) continue;
                comp[v] = c;
                const auto& e = tree[std::size_t(ei)];
                // phi_i - s_j = C_ij
                pot[v] = v < std::size_t(r) ? pot[u] + C(e.i, e.j) : pot[u] - C(e.i, e.j);
                stack.push_back(v);
            }
        }
    }
    for (const auto& mem : members) {
        double supply = 0.0, demand = 0.0;
        for (std::size_t u : mem) {
            if (u < std::size_t(r)) supply += a[Eigen::Index(u)];
            else demand += m[Eigen::Index(u - r)] * std::exp(pot[u] - 1.0);
        }
        if (!(supply > 0.0) || !(demand > 0.0)) return false;
        const double shift = std::log(supply / demand);
        for (std::size_t u : mem) pot[u] += shift;
    }
    phi.resize(r);
    b.resize(n);
    for (Eigen::Index i = 0; i < r; ++i) phi[i] = pot[std::size_t(i)];
    for (Eigen::Index j = 0; j < n; ++j) b[j] = m[j] * std::exp(pot[std::size_t(r + j)] - 1.0);
    // leaf peeling: net[u] is what u still has to ship (rows) or receive (columns)
    std::vector<double> net(N);
    for (Eigen::Index i = 0; i < r; ++i) net[std::size_t(i)] = a[i];
    for (Eigen::Index j = 0; j < n; ++j) net[std::size_t(r + j)] = -b[j];
    std::vector<std::size_t> degree(N);
    for (std::size_t u = 0; u < N; ++u) degree[u] = adj[u].size();
    std::vector<char> done_edge(tree.size(), 0);
    std::vector<std::size_t> leaves;
    for (std::size_t u = 0; u < N; ++u)
        if (degree[u] == 1) leaves.push_back(u);
    gamma = Eigen::MatrixXd::Zero(r, n);
    const double total = a.sum();
    while (!leaves.empty()) {
        std::size_t u = leaves.back();
        leaves.pop_back();
        if (degree[u] != 1) continue;
        for (auto [v, ei] : adj[u]) {
            if (done_edge[std::size_t(ei)]) continue;
            done_edge[std::size_t(ei)] = 1;
            const auto& e = tree[std::size_t(ei)];
            double flow = u < std::size_t(r) ? net[u] : -net[u];
            if (flow < -1e-13 * total) return false;
            flow = std::max(flow, 0.0);
            gamma(e.i, e.j) = flow;
            net[std::size_t(e.i)] -= flow;
            net[std::size_t(r + e.j)] += flow;
            degree[u] = 0;
            if (--degree[v] == 1) leaves.push_back(v);
            break;
        }
    }
    return true;
}
}  // namespace

JKOStepResult jko_step(const MetricMeasureSpace& space, const std::vector<double>& a_full, double tau,
                       const JKOOptions& opts, const std::vector<double>* warm_phi, std::size_t step) {
    if (!(tau > 0.0)) throw InvalidArgument("flows", "tau must be positive");
    const std::size_t n = space.n();
    JKOStepResult res;
    for (std::size_t i = 0; i < n; ++i)
        if (a_full[i] > 0.0) res.rows.push_back(i);
    const Eigen::Index r = Eigen::Index(res.rows.size());
    Eigen::MatrixXd C(r, static_cast<Eigen::Index>(n));
    Eigen::VectorXd a(r), m(static_cast<Eigen::Index>(n)), phi(r);
    for (Eigen::Index i = 0; i < r; ++i) {
        a[i] = a_full[res.rows[std::size_t(i)]];
        for (std::size_t j = 0; j < n; ++j) {
            double d = space.dist(res.rows[std::size_t(i)], j);
            C(i, Eigen::Index(j)) = d * d / (2.0 * tau);
        }
    }
    for (std::size_t j = 0; j < n; ++j) m[Eigen::Index(j)] = space.mass(j);
    // warm start, else the potential of the identity coupling: phi_i = log(a_i/m_i) + 1
    for (Eigen::Index i = 0; i < r; ++i) {
        std::size_t p = res.rows[std::size_t(i)];
        phi[i] = (warm_phi && warm_phi->size() == n) ? (*warm_phi)[p] : std::log(a[i] / space.mass(p)) + 1.0;
    }

    DualState st, trial;
    std::size_t iters = 0;
    Eigen::VectorXd grad(r), dir(r);
    Eigen::MatrixXd H(r, r);
    double eps = opts.eps_start;
    for (;;) {
        const bool last = eps <= opts.eps_final * (1.0 + 1e-9);
        const double gtol = last ? opts.grad_tol : 1e-10;
        evaluate(C, a, m, phi, eps, st, true);
        bool converged = false;
        for (std::size_t k = 0; k < opts.max_newton; ++k) {
            grad = a - st.P * st.b;
            if (grad.lpNorm<1>() <= gtol) {
                converged = true;
                break;
            }
            // Hessian of -F: sum_j b_j [p p^T + (diag p - p p^T) / eps]
            Eigen::MatrixXd PB = st.P * st.b.asDiagonal();
            H.noalias() = (1.0 - 1.0 / eps) * (PB * st.P.transpose());
            for (Eigen::Index i = 0; i < r; ++i) {
                double diag = 0.0;
                for (Eigen::Index j = 0; j < Eigen::Index(n); ++j) {
                    double p = st.P(i, j);
                    double q = 1.0 - p;
                    if (p > 0.5) {  // sum of the other entries, avoiding cancellation in 1 - p
                        q = 0.0;
                        for (Eigen::Index k = 0; k < r; ++k)
                            if (k != i) q += st.P(k, j);
                    }
                    diag += st.b[j] * (p * p + p * q / eps);
                }
                H(i, i) = diag;
            }
            H.diagonal().array() += 1e-14 * H.diagonal().maxCoeff() + 1e-300;
            dir = H.ldlt().solve(grad);
            if (!dir.allFinite()) dir = grad;
            const double slope = grad.dot(dir);
            double alpha = 1.0;
            bool accepted = false;
            const double gnorm = grad.lpNorm<1>();
            const double flat = 1e-14 * (1.0 + std::abs(st.value));
            for (int ls = 0; ls < 80; ++ls) {
                evaluate(C, a, m, phi + alpha * dir, eps, trial, true);
                if (trial.value >= st.value + 1e-4 * alpha * slope) {
                    accepted = true;
                    break;
                }
                // near the optimum F changes below roundoff; fall back on the gradient
                if (trial.value >= st.value - flat && (a - trial.P * trial.b).lpNorm<1>() < gnorm) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            ++iters;
            if (!accepted) break;
            phi += alpha * dir;
            std::swap(st, trial);
        }
        // a stalled stage ends the continuation; the polish below takes over
        if (last || !converged) break;
        eps = std::max(eps * opts.eps_factor, opts.eps_final);
    }

    // primal coupling with rows rescaled to the exact first marginal
    Eigen::MatrixXd gamma = st.P * st.b.asDiagonal();
    for (Eigen::Index i = 0; i < r; ++i) {
        double row = gamma.row(i).sum();
        if (row > 0.0) gamma.row(i) *= a[i] / row;
    }
    Eigen::VectorXd b = gamma.colwise().sum().transpose();
    double kkt = kkt_residual(C, a, m, phi, gamma, b);

    Eigen::VectorXd phi2 = phi, b2;
    Eigen::MatrixXd gamma2;
    if (kkt > 0.0 && polish(C, a, m, phi2, st.s, eps, gamma2, b2)) {
        double kkt2 = kkt_residual(C, a, m, phi2, gamma2, b2);
        if (kkt2 < kkt) {
            kkt = kkt2;
            phi = phi2;
            gamma = std::move(gamma2);
            b = std::move(b2);
        }
    }
    res.kkt_residual = kkt;
    if (!std::isfinite(res.kkt_residual) || res.kkt_residual > opts.kkt_tol)
        throw InnerSolverFailure(step, res.kkt_residual);
    double cost = 0.0;
    for (Eigen::Index j = 0; j < Eigen::Index(n); ++j)
        for (Eigen::Index i = 0; i < r; ++i) cost += gamma(i, j) * 2.0 * tau * C(i, j);
    res.masses.assign(b.data(), b.data() + n);
    res.gamma = std::move(gamma);
    res.phi.assign(n, 0.0);
    for (Eigen::Index i = 0; i < r; ++i) res.phi[res.rows[std::size_t(i)]] = phi[i];
    res.newton_iterations = iters;
    res.transport_cost = cost;
    return res;
}

Trajectory jko_flow(const MetricMeasureSpace& space, const DensityField& mu0, double tau, std::size_t M,
                    const JKOOptions& opts, const SliceSink& sink) {
    require_same_space(space, mu0.space_id(), mu0.size(), "flows");
    Trajectory traj;
    traj.space_id = space.id();
    traj.kind = FlowKind::jko_entropy;
    traj.backend = "entropy";
    traj.tau = tau;
    traj.density = true;
    traj.times.push_back(0.0);
    traj.fields.push_back(mu0.values());
    if (sink) sink(traj, 0);
    std::vector<double> phi;
    double ent = transport::entropy(space, mu0);
    for (std::size_t k = 0; k < M; ++k) {
        std::vector<double> a(space.n());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = traj.fields.back()[i] * space.mass(i);
        auto st = jko_step(space, a, tau, opts, phi.empty() ? nullptr : &phi, k);
        std::vector<double> f(space.n());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = st.masses[i] / space.mass(i);
        auto next = DensityField::normalized(space, std::move(f));
        double next_ent = transport::entropy(space, next);
        StepMeta meta;
        meta.inner_iterations = st.newton_iterations;
        meta.inner_residual = st.kkt_residual;
        meta.objective_decrease = ent - next_ent - st.transport_cost / (2.0 * tau);
        ent = next_ent;
        phi = std::move(st.phi);
        traj.times.push_back(double(k + 1) * tau);
        traj.fields.push_back(next.values());
        traj.step_meta.push_back(meta);
        if (sink) sink(traj, k + 1);
    }
    return traj;
}

// ---------------------------------------------------------------------------
// along-trajectory quantities

std::vector<double> w2_speed(const MetricMeasureSpace& space, const Trajectory& traj) {
    auto dens = traj.densities(space);
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < dens.size(); ++k) {
        double cost = transport::w2_exact(space, dens[k], dens[k + 1]).cost;
        out.push_back(std::sqrt(std::max(cost, 0.0)) / (traj.times[k + 1] - traj.times[k]));
    }
    return out;
}

std::vector<double> metric_speed(const MetricMeasureSpace& space, const Trajectory& traj) {
    if (traj.fields.size() < 2) throw InvalidArgument("flows", "metric speed needs at least one step");
    if (traj.density) return w2_speed(space, traj);
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < traj.fields.size(); ++k)
        out.push_back(std::sqrt(l2_sq(space, traj.fields[k], traj.fields[k + 1])) / (traj.times[k + 1] - traj.times[k]));
    return out;
}

std::vector<double> entropy_along(const MetricMeasureSpace& space, const Trajectory& traj) {
    std::vector<double> out;
    for (const auto& f : traj.fields) {
        double s = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (f[i] > 0.0) s += space.mass(i) * f[i] * std::log(f[i]);
        out.push_back(s);
    }
    return out;
}

std::vector<double> fisher_along(const MetricMeasureSpace& space, const Trajectory& traj) {
    auto b = calculus::EnergyBackend::slope(space);
    std::vector<double> out;
    for (const auto& f : traj.fields) out.push_back(calculus::fisher_information(space, f, b));
    return out;
}

std::vector<double> fisher_identity_residual(const MetricMeasureSpace& space, const Trajectory& traj) {
    auto b = calculus::EnergyBackend::slope(space);
    std::vector<double> out;
    for (const auto& f : traj.fields) {
        std::vector<double> root(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) root[i] = std::sqrt(std::max(f[i], 0.0));
        out.push_back(std::abs(calculus::fisher_information(space, f, b) - 8.0 * calculus::cheeger_energy(space, root, b)));
    }
    return out;
}

double l1_gap(const MetricMeasureSpace& space, const Trajectory& a, const Trajectory& b) {
    if (a.fields.size() != b.fields.size()) throw DimensionMismatch("flows", "trajectories have different lengths");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.fields.size(); ++k) {
        if (std::abs(a.times[k] - b.times[k]) > 1e-12 * std::max(1.0, a.times[k]))
            throw DimensionMismatch("flows", "trajectories have different times");
        double s = 0.0;
        for (std::size_t i = 0; i < space.n(); ++i) s += space.mass(i) * std::abs(a.fields[k][i] - b.fields[k][i]);
        worst = std::max(worst, s);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// persistence

namespace {

nlohmann::json meta_json(const Trajectory& traj) {
    nlohmann::json j;
    char id[32];
    std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(traj.space_id));
    j["space_id"] = id;
    j["flow_kind"] = to_string(traj.kind);
    j["backend"] = traj.backend;
    j["tau"] = traj.tau;
    j["density"] = traj.density;
    j["n"] = traj.fields.empty() ? 0 : traj.fields[0].size();
    j["times"] = traj.times;
    j["slices"] = traj.fields.size();
    auto steps = nlohmann::json::array();
    for (const auto& s : traj.step_meta)
        steps.push_back({{"inner_iterations", s.inner_iterations},
                         {"inner_residual", json_number(s.inner_residual)},
                         {"objective_decrease", json_number(s.objective_decrease)}});
    j["step_meta"] = steps;
    return j;
}

std::string slice_name(std::size_t k) { return "slice_" + std::to_string(k) + ".csv"; }

}  // namespace

void write_trajectory(const Trajectory& traj, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < traj.fields.size(); ++k) save_field_values(traj.fields[k], dir / slice_name(k));
    write_file_atomic(dir / "meta.json", dump_json(meta_json(traj)));
}

SliceSink trajectory_writer(const std::filesystem::path& dir) {
    return [dir](const Trajectory& traj, std::size_t k) {
        std::filesystem::create_directories(dir);
        save_field_values(traj.fields[k], dir / slice_name(k));
        write_file_atomic(dir / "meta.json", dump_json(meta_json(traj)));
    };
}

Trajectory read_trajectory(const MetricMeasureSpace& space, const std::filesystem::path& dir) {
    auto j = nlohmann::json::parse(read_file(dir / "meta.json"));
    Trajectory traj;
    traj.space_id = space.id();
    traj.kind = parse_flow_kind(j.at("flow_kind").get<std::string>());
    traj.backend = j.at("backend").get<std::string>();
    traj.tau = j.at("tau").get<double>();
    traj.density = j.at("density").get<bool>();
    traj.times = j.at("times").get<std::vector<double>>();
    const std::size_t slices = j.at("slices").get<std::size_t>();
    if (j.at("n").get<std::size_t>() != space.n()) throw DimensionMismatch("flows", "trajectory size does not match space");
    for (std::size_t k = 0; k < slices; ++k) {
        auto v = load_field_values(dir / slice_name(k));
        if (v.size() != space.n()) throw DimensionMismatch("flows", "slice " + std::to_string(k) + " has wrong size");
        traj.fields.push_back(std::move(v));
    }
    for (const auto& s : j.at("step_meta"))
        traj.step_meta.push_back({s.at("inner_iterations").get<std::size_t>(), json_to_double(s.at("inner_residual")),
                                  json_to_double(s.at("objective_decrease"))});
    if (traj.times.size() != traj.fields.size()) throw DimensionMismatch("flows", "times and slices differ in length");
    return traj;
}

}  // namespace otflow::flows
