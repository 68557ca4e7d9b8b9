#pragma once

#include "otflow/mmspace.hpp"
#include "otflow/report.hpp"

#include <vector>

namespace otflow::hopflax {

/// Q_t f together with the extremal minimiser distances D+ and D-.
struct HopfLaxResult {
    ScalarField q;
    std::vector<double> d_plus;
    std::vector<double> d_minus;
    double t = 0.0;
};

/// q[x] = min_y f[y] + d(x,y)^2 / (2t). The argmin set is every y within
/// 1e-12 (1 + |q[x]|) of the minimum.
HopfLaxResult hopf_lax(const MetricMeasureSpace& space, const ScalarField& f, double t);

/// max_x max_{t<s} (D+(x,t) - D-(x,s))^+ ; passes iff <= 1e-12 diam.
DiagnosticsReport check_dpm_monotone(const MetricMeasureSpace& space, const ScalarField& f,
                                     const std::vector<double>& times);

/// Per-point quantities behind hj_residuals.
struct HJPointwise {
    std::vector<double> dt_q;     // central difference in time
    std::vector<double> slope_q;  // two-sided slope of Q_t f at the mesh radius
    std::vector<double> r_sub;    // (dt_q + slope^2/2)^+
    std::vector<double> r_sup;    // |dt_q + slope^2/2|, empty without a geodesic hint
    std::vector<double> r_dini;   // |dt_q + Dmid^2 / (2t^2)|
};

HJPointwise hj_pointwise(const MetricMeasureSpace& space, const ScalarField& f, double t, double dt);

/// Sub/supersolution residuals of the Hamilton-Jacobi equation at time t.
/// dt <= 0 selects t/100. Tolerances are C Lip(f) h / t (C = 2 by default).
DiagnosticsReport hj_residuals(const MetricMeasureSpace& space, const ScalarField& f, double t,
                               double dt = 0.0, double C = 2.0);

/// max_{x != y} |f(x) - f(y)| / d(x,y).
double lipschitz_constant(const MetricMeasureSpace& space, const ScalarField& f);

}  // namespace otflow::hopflax
