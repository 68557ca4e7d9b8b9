#pragma once

#include "otflow/calculus.hpp"
#include "otflow/mmspace.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace otflow::flows {

enum class FlowKind { l2_heat, jko_entropy };
std::string to_string(FlowKind kind);
FlowKind parse_flow_kind(const std::string& s);

struct StepMeta {
    std::size_t inner_iterations = 0;
    double inner_residual = 0.0;
    double objective_decrease = 0.0;
};

/// Time-stamped slices. For density flows every slice integrates to 1.
struct Trajectory {
    SpaceId space_id = 0;
    FlowKind kind = FlowKind::l2_heat;
    std::string backend;  // energy backend of heat flows, "entropy" for JKO
    double tau = 0.0;
    bool density = false;
    std::vector<double> times;
    std::vector<std::vector<double>> fields;
    std::vector<StepMeta> step_meta;

    std::size_t steps() const { return fields.empty() ? 0 : fields.size() - 1; }
    DensityField density_at(const MetricMeasureSpace& space, std::size_t k) const;
    std::vector<DensityField> densities(const MetricMeasureSpace& space) const;
};

/// Called after slice k has been appended.
using SliceSink = std::function<void(const Trajectory&, std::size_t)>;

/// Implicit Euler for the Cheeger energy: f_k+1 = prox_{tau C}(f_k).
Trajectory heat_flow(const MetricMeasureSpace& space, const ScalarField& f0, const calculus::EnergyBackend& backend,
                     double tau, std::size_t M, const SliceSink& sink = {},
                     const calculus::ProxOptions& opts = {});

struct JKOOptions {
    double eps_start = 1.0;     // initial smoothing of the column max
    double eps_final = 1e-10;   // last continuation stage
    double eps_factor = 0.1;
    double grad_tol = 1e-13;    // l1 norm of the dual gradient at the last stage
    double kkt_tol = 1e-7;      // accepted KKT residual of the unsmoothed problem
    std::size_t max_newton = 200;
};

struct JKOStepResult {
    std::vector<double> masses;   // second marginal b
    Eigen::MatrixXd gamma;        // rows: points of supp(a) in index order
    std::vector<std::size_t> rows;
    std::vector<double> phi;      // dual potential on rows
    std::size_t newton_iterations = 0;
    double kkt_residual = 0.0;
    double transport_cost = 0.0;  // sum d^2 gamma
};

/// argmin over couplings gamma with first marginal a of sum d^2 gamma / (2 tau) + Ent(b | m),
/// b the second marginal. Dual Newton with a decreasing log-sum-exp smoothing.
JKOStepResult jko_step(const MetricMeasureSpace& space, const std::vector<double>& a, double tau,
                       const JKOOptions& opts = {}, const std::vector<double>* warm_phi = nullptr,
                       std::size_t step = 0);

/// Minimizing movement for Ent(.|m) in (P(X), W2). Throws InnerSolverFailure.
Trajectory jko_flow(const MetricMeasureSpace& space, const DensityField& mu0, double tau, std::size_t M,
                    const JKOOptions& opts = {}, const SliceSink& sink = {});

/// W2 quotient for density flows, L2(m) quotient for non-density heat flows.
std::vector<double> metric_speed(const MetricMeasureSpace& space, const Trajectory& traj);
/// W2(mu_k, mu_k+1) / dt_k for any density trajectory.
std::vector<double> w2_speed(const MetricMeasureSpace& space, const Trajectory& traj);
std::vector<double> entropy_along(const MetricMeasureSpace& space, const Trajectory& traj);
/// int slope(f)^2 / f dm with the slope backend at the mesh radius.
std::vector<double> fisher_along(const MetricMeasureSpace& space, const Trajectory& traj);
/// |Fisher - 8 C(sqrt f)| per slice (slope backend).
std::vector<double> fisher_identity_residual(const MetricMeasureSpace& space, const Trajectory& traj);

/// sup over slices of the L1(m) distance; trajectories must share times.
double l1_gap(const MetricMeasureSpace& space, const Trajectory& a, const Trajectory& b);

/// Writes meta.json and slice_k.csv files; the sink variant writes each slice as it appears.
void write_trajectory(const Trajectory& traj, const std::filesystem::path& dir);
SliceSink trajectory_writer(const std::filesystem::path& dir);
Trajectory read_trajectory(const MetricMeasureSpace& space, const std::filesystem::path& dir);

}  // namespace otflow::flows
