// Forward sensitivities of the filter mean and covariance along every
// active direction, obtained by exact differentiation of the discrete
// filter recursion. This makes the computed gradients the exact gradients
// of the computed objectives.
#pragma once

#include "spde/kalman.hpp"

namespace spde {

/// Sensitivities of (m, S) along each direction of the system's direction
/// list (parameter coordinates first, then movable sensor coordinates).
struct TangentState {
    std::vector<Vec> dm;
    std::vector<Mat> dS;

    static TangentState zero(int n, int ndirs);
    int size() const { return static_cast<int>(dm.size()); }
};

/// Predict-stage sensitivities of one step, consumed by the likelihood
/// gradient increments.
struct TangentProducts {
    std::vector<Vec> dm_pred;
    std::vector<Mat> dS_pred;
    std::vector<Mat> dInnovation_cov;
};

/// Propagates all sensitivities through the predict and update of the step
/// whose intermediates are `pr`. `fs_prev` is the filter state the step
/// started from. The observation is treated as exogenous (its realisation
/// does not depend on the differentiation variables).
TangentState tangent_step(const FilterState& fs_prev, const TangentState& ts,
                          const SystemMatrices& sys, const TransitionKernel& kernel,
                          const KbProducts& pr, TangentProducts* products = nullptr);

/// Gradient of Tr[M S] in the movable sensor coordinates: component c is
/// Tr[M dS_c]. Length equals the number of sensor directions.
Vec placement_gradient(const TangentState& ts, const SystemMatrices& sys);

} // namespace spde
