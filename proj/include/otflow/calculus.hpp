#pragma once

#include "otflow/mmspace.hpp"
#include "otflow/report.hpp"

#include <Eigen/Sparse>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace otflow::calculus {

enum class SlopeVariant { two_sided, descending, ascending };

struct SlopeField {
    std::vector<double> values;
    double radius = 0.0;
    SlopeVariant variant = SlopeVariant::two_sided;
};

/// Directed neighbour pairs (x, y) with 0 < d(x,y) <= h (1 + 1e-9), grouped by x.
struct Neighborhood {
    double radius = 0.0;
    std::vector<std::size_t> offsets;  // size n + 1
    std::vector<std::size_t> nbr;
    std::vector<double> dist;

    static Neighborhood build(const MetricMeasureSpace& space, double h);
    std::size_t n() const { return offsets.size() - 1; }
};

/// Discrete slope: max over neighbours of |f(y)-f(x)|, (f(x)-f(y))^+ or (f(y)-f(x))^+
/// divided by d(x,y). h <= 0 selects the space's mesh.
SlopeField slope(const MetricMeasureSpace& space, const ScalarField& f, double h = 0.0,
                 SlopeVariant variant = SlopeVariant::two_sided);
std::vector<double> slope_values(const Neighborhood& nb, const std::vector<double>& f,
                                 SlopeVariant variant = SlopeVariant::two_sided);

SlopeVariant parse_variant(const std::string& s);

/// Cheeger energy backend: max-quotient slope, or a quadratic graph form.
struct EnergyBackend {
    enum class Kind { slope, quadratic };
    Kind kind = Kind::slope;
    SpaceId space_id = 0;
    Neighborhood nb;
    /// Quadratic kind: symmetric weights w_ij on neighbour pairs, one per entry of nb.nbr.
    std::vector<double> weights;

    /// Two-sided slope at radius h (default mesh).
    static EnergyBackend slope(const MetricMeasureSpace& space, double h = 0.0);
    /// w_ij = (m_i + m_j) / (4 h^2) on pairs with d <= h: the standard second
    /// difference on circle grids and a consistent Dirichlet form on box grids.
    static EnergyBackend quadratic(const MetricMeasureSpace& space, double h = 0.0);
    /// Arbitrary symmetric weights on the neighbourhood of radius h.
    static EnergyBackend quadratic_with(const MetricMeasureSpace& space, double h,
                                        const std::function<double(std::size_t, std::size_t)>& w);

    double radius() const { return nb.radius; }
    std::string name() const { return kind == Kind::slope ? "slope" : "quadratic"; }
};

EnergyBackend::Kind parse_backend(const std::string& s);
EnergyBackend make_backend(const MetricMeasureSpace& space, EnergyBackend::Kind kind, double h = 0.0);

/// Pointwise gradient norm of the backend: the slope, or sqrt of the carre du champ
/// Gamma(f)_i = (1/m_i) sum_j w_ij (f_i - f_j)^2.
std::vector<double> gradient_norm(const MetricMeasureSpace& space, const std::vector<double>& f,
                                  const EnergyBackend& backend);

/// 1/2 sum m_i slope_i^2, or 1/2 sum_{i,j} w_ij (f_i - f_j)^2.
double cheeger_energy(const MetricMeasureSpace& space, const ScalarField& f, const EnergyBackend& backend);
double cheeger_energy(const MetricMeasureSpace& space, const std::vector<double>& f,
                      const EnergyBackend& backend);

/// |C(f+g) + C(f-g) - 2 C(f) - 2 C(g)|.
double parallelogram_defect(const MetricMeasureSpace& space, const ScalarField& f, const ScalarField& g,
                            const EnergyBackend& backend);

/// sum_i m_i |Df|_i^2 / f_i with 0/0 = 0 and +inf where f_i = 0 < |Df|_i.
double fisher_information(const MetricMeasureSpace& space, const std::vector<double>& f,
                          const EnergyBackend& backend);

/// A scalar map with its derivative; lip_dphi bounds |phi''| (0 for affine maps).
struct ScalarMap {
    std::string name;
    std::function<double(double)> phi;
    std::function<double(double)> dphi;
    double lip_dphi = 0.0;
    /// Set for truncations min(z, M): the check then uses the piecewise formula.
    bool truncation = false;
    double level = 0.0;

    static ScalarMap identity();
    static ScalarMap negate();
    static ScalarMap square(double range_bound);
    static ScalarMap truncate(double M);
};

/// |D phi(f)| against |phi'(f)| |Df|. Smooth maps: max residual with tolerance
/// C h Lip(phi') Lip(f)^2. Truncations: L1(m) residual off the level set {f = M},
/// tolerance C h Lip(f).
DiagnosticsReport chain_rule_check(const MetricMeasureSpace& space, const ScalarField& f,
                                   const ScalarMap& phi, const EnergyBackend& backend, double C = 2.0);

struct ProxOptions {
    double tol = 1e-10;
    std::size_t max_iter = 100000;
    std::size_t check_every = 20;
};

struct ProxResult {
    std::vector<double> g;
    std::size_t iterations = 0;
    double residual = 0.0;  // relative duality gap (slope) or relative linear residual (quadratic)
    std::vector<double> dual;  // slope backend dual variables, usable as a warm start
};

/// argmin_g C(g) + |g - f|^2_{L2(m)} / (2 tau). Slope backend: accelerated
/// projected gradient on the dual with adaptive restart; quadratic backend:
/// sparse Cholesky of (M + 2 tau L). Throws ProxNoConvergence.
ProxResult prox(const MetricMeasureSpace& space, const std::vector<double>& f, const EnergyBackend& backend,
                double tau, const ProxOptions& opts = {}, const std::vector<double>* warm_dual = nullptr,
                std::size_t step = 0);

/// Quadratic backend: Delta f_k = -(2/m_k) sum_j w_kj (f_k - f_j), exact and independent
/// of tau. Slope backend: (prox_tau(f) - f) / tau.
ScalarField laplacian(const MetricMeasureSpace& space, const ScalarField& f, const EnergyBackend& backend,
                      double tau, const ProxOptions& opts = {});
std::vector<double> quadratic_laplacian(const MetricMeasureSpace& space, const std::vector<double>& f,
                                        const EnergyBackend& backend);

/// Sparse SPD matrix M + 2 tau L of the quadratic backend (M = diag(m)).
Eigen::SparseMatrix<double> implicit_euler_matrix(const MetricMeasureSpace& space,
                                                  const EnergyBackend& backend, double tau);

/// Integration by parts: |int g Lap f| <= int |Dg||Df| and the phi-weighted identity
/// int phi(f) Lap f + int |Df|^2 phi'(f) = 0. Tolerances: 1e-9 (quadratic) or C h (slope).
DiagnosticsReport integration_by_parts_check(const MetricMeasureSpace& space, const ScalarField& f,
                                             const ScalarField& g, const EnergyBackend& backend,
                                             double tau = 0.0, const ScalarMap& phi = ScalarMap::identity(),
                                             double C = 2.0);

}  // namespace otflow::calculus
