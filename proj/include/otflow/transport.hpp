#pragma once

#include "otflow/mmspace.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <tuple>
#include <utility>
#include <vector>

namespace otflow::transport {

/// Coupling of mu m and nu m; gamma holds masses, cost = sum d^2 gamma.
struct TransportPlan {
    SpaceId space_id = 0;
    Eigen::MatrixXd gamma;
    DensityField mu;
    DensityField nu;
    double cost = 0.0;
    bool is_optimal = false;

    /// Nonzero entries (i, j, mass) in row-major order.
    std::vector<std::tuple<std::size_t, std::size_t, double>> support() const;
};

struct PotentialPair {
    ScalarField psi;
    ScalarField psi_c;
    double gap = 0.0;  // (1/2) W2^2 - (sum psi mu m + sum psi_c nu m)
};

struct Curve {
    double weight = 0.0;
    std::vector<std::size_t> path;  // one point per slice
};

/// Measure on discrete curves; slice k of every curve lives at times[k].
struct CurvePlan {
    SpaceId space_id = 0;
    std::vector<double> times;
    std::vector<Curve> curves;

    std::size_t slices() const { return times.size(); }
    /// Masses of the k-th slice marginal.
    std::vector<double> slice_masses(std::size_t k, std::size_t n) const;
    /// sum_curves w sum_k d(p_k, p_k+1)^2 / (t_k+1 - t_k).
    double action(const MetricMeasureSpace& space) const;
};

/// Result of the exact solver: optimal plan plus c-concave potentials.
struct ExactTransport {
    TransportPlan plan;
    PotentialPair potentials;
    std::size_t pivots = 0;
};

/// Exact W2 by a network simplex on the bipartite graph supp(mu) x supp(nu)
/// with cost d^2/2. Deterministic: the pivoting order depends only on input.
ExactTransport solve_exact(const MetricMeasureSpace& space, const DensityField& mu, const DensityField& nu);
TransportPlan w2_exact(const MetricMeasureSpace& space, const DensityField& mu, const DensityField& nu);
PotentialPair kantorovich_potential(const MetricMeasureSpace& space, const DensityField& mu, const DensityField& nu);

/// Low-level exact solver on mass vectors (a and b must have equal total).
/// Returns gamma over the full index range and the dual variables of the final
/// tree on the supports (other entries are left at 0).
struct SimplexSolution {
    Eigen::MatrixXd gamma;
    std::vector<double> u, v;
    std::vector<char> row_used, col_used;
    std::size_t pivots = 0;
};
SimplexSolution network_simplex(const Eigen::MatrixXd& cost, const std::vector<double>& a,
                                const std::vector<double>& b);

/// 1e-2 times the median of d^2 over distinct pairs.
double default_epsilon(const MetricMeasureSpace& space);

/// Log-domain Sinkhorn for the cost d^2 with reference a (x) b. Throws NoConvergence.
TransportPlan w2_entropic(const MetricMeasureSpace& space, const DensityField& mu, const DensityField& nu,
                          double epsilon, std::size_t max_iter = 100000, double tol = 1e-9);

/// psi^c(y) = min_x d(x,y)^2/2 - psi(x).
ScalarField c_transform(const MetricMeasureSpace& space, const ScalarField& psi);
std::vector<double> c_transform_values(const MetricMeasureSpace& space, const std::vector<double>& psi);

/// gamma_mu = (dmu / dpi^1 gamma) gamma and the density of its second marginal w.r.t. m.
/// Throws AbsoluteContinuityViolation.
std::pair<TransportPlan, DensityField> push_forward_plan(const MetricMeasureSpace& space,
                                                         const TransportPlan& gamma, const DensityField& mu);

/// Optimal plan lifted to curves following the geodesic hint, M + 1 slices at t = k/M.
/// Intermediate positions snap to the hint point nearest (in arc length along the
/// hint) to t d(x,y), ties to the lower index. Throws NoGeodesicStructure.
CurvePlan geodesic_plan(const MetricMeasureSpace& space, const DensityField& mu0, const DensityField& mu1,
                        std::size_t M);

/// Glues optimal plans between consecutive slices into one curve plan.
CurvePlan superpose(const MetricMeasureSpace& space, const std::vector<double>& times,
                    const std::vector<DensityField>& slices);

/// Ent(mu|nu) on mass vectors: sum a log(a/b), 0 log 0 = 0, +inf if a > 0 = b.
double relative_entropy(const std::vector<double>& a, const std::vector<double>& b);
/// Ent(f m | m) = sum m f log f.
double entropy(const MetricMeasureSpace& space, const std::vector<double>& f);
double entropy(const MetricMeasureSpace& space, const DensityField& f);

void save_plan(const TransportPlan& plan, const std::filesystem::path& path);
void save_curve_plan(const CurvePlan& plan, const std::filesystem::path& path);
CurvePlan load_curve_plan(const MetricMeasureSpace& space, const std::filesystem::path& path);

}  // namespace otflow::transport
