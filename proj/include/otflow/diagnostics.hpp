#pragma once

#include "otflow/flows.hpp"
#include "otflow/mmspace.hpp"
#include "otflow/report.hpp"
#include "otflow/rng.hpp"
#include "otflow/transport.hpp"

#include <cstdint>
#include <vector>

namespace otflow::diagnostics {

/// Default tolerance constant: residuals are compared against C (tau + h).
inline constexpr double kDefaultC = 2.0;

/// Energy dissipation equality for Ent along a density trajectory, with W2 speeds
/// and Fisher information as squared slope (trapezoidal in time). Also reports the
/// always-valid inequality Ent(mu_0) <= Ent(mu_T) + 1/2 int speed^2 + 1/2 int Fisher.
DiagnosticsReport ede_residual(const MetricMeasureSpace& space, const flows::Trajectory& traj,
                               double C = kDefaultC, double inequality_slack = 1e-6);

/// Integrated EVI_K over consecutive slices, per unit time, max over probes.
DiagnosticsReport evi_residual(const MetricMeasureSpace& space, const flows::Trajectory& traj,
                               const std::vector<DensityField>& probes, double K, double C = kDefaultC);

/// Per step (W2 speed^2 - Fisher)^+ with Fisher averaged over the step's end slices.
/// Throws NotBoundedBelow when a slice dips below 1e-8.
DiagnosticsReport kuwada_check(const MetricMeasureSpace& space, const flows::Trajectory& traj, double C = kDefaultC);

/// Transport distance against the ascending slope of the Kantorovich potential, and
/// W2^2 against int slope(psi)^2 f0 dm.
DiagnosticsReport brenier_check(const MetricMeasureSpace& space, const DensityField& mu0, const DensityField& mu1,
                                double C = kDefaultC);

/// Parallelogram defect of the slope energy over probe pairs and the additivity defect
/// of a 5-step slope heat flow on the first pair. Verdict in context["verdict"].
DiagnosticsReport quadraticity_check(const MetricMeasureSpace& space, const std::vector<ScalarField>& probes,
                                     double C = kDefaultC, double finsler_floor = 0.5);

/// sup-norm additivity defect flow(f+g) - flow(f) - flow(g) over `steps` implicit steps.
double flow_additivity_defect(const MetricMeasureSpace& space, const ScalarField& f, const ScalarField& g,
                              const calculus::EnergyBackend& backend, double tau, std::size_t steps = 5);

/// K-convexity of Ent along the geodesic plan, plus three random reweightings of it.
DiagnosticsReport displacement_convexity_check(const MetricMeasureSpace& space, const DensityField& mu0,
                                               const DensityField& mu1, double K, std::size_t M,
                                               std::uint64_t seed = 1, double C = kDefaultC);

/// Horizontal vs vertical derivative: first-slice quotient of f along the plan against
/// 1/2 (slope(g)^2 - slope(g + eps f)^2) / eps at the curve starts.
DiagnosticsReport horizontal_vertical_check(const MetricMeasureSpace& space, const ScalarField& f,
                                            const ScalarField& g, const transport::CurvePlan& plan, double eps,
                                            double C = kDefaultC);

/// d/dt 1/2 W2^2(f_t m, sigma) by central differences against int phi_t Lap f_t dm.
DiagnosticsReport dw2_heatflow_check(const MetricMeasureSpace& space, const flows::Trajectory& traj,
                                     const DensityField& sigma, double C = kDefaultC);

/// E(x, y) = x on an L-infinity grid: two curves of the admissible family satisfy EDE,
/// a curve with |y'| = 2 does not.
DiagnosticsReport ede_nonuniqueness_demo(std::size_t side = 21);

/// EDE residual of a discrete curve in the space itself for the energy E, with the
/// descending slope of E at the mesh radius.
double curve_ede_residual(const MetricMeasureSpace& space, const std::vector<double>& energy,
                          const std::vector<std::size_t>& path, const std::vector<double>& times);

/// max over the pool of [Ent(mu) - Ent(nu)]^+ / W2(mu, nu): a lower bound on the slope of Ent.
double entropy_slope_lower_bound(const MetricMeasureSpace& space, const DensityField& mu,
                                 const std::vector<DensityField>& pool);

/// 64 seeded random densities plus one-step JKO outputs from mu at tau in {h^2, 10 h^2, 100 h^2}.
std::vector<DensityField> probe_pool(const MetricMeasureSpace& space, const DensityField& mu, std::uint64_t seed);

/// Slope lower bound against sqrt(Fisher) + C h.
DiagnosticsReport fisher_slope_check(const MetricMeasureSpace& space, const DensityField& mu,
                                     const std::vector<DensityField>& pool, double C = kDefaultC);

/// max over lambda in {1/4, 1/2, 3/4} of F((1-l) f0 + l f1) - (1-l) F(f0) - l F(f1).
double fisher_convexity_violation(const MetricMeasureSpace& space, const std::vector<double>& f0,
                                  const std::vector<double>& f1, const calculus::EnergyBackend& backend);

/// Density with entries uniform in [floor, 1], normalized.
DensityField random_density(const MetricMeasureSpace& space, SplitMix64& rng, double floor = 0.0);

}  // namespace otflow::diagnostics
