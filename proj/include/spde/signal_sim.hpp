// Exact one-step discretisation of the truncated spectral SDE and the
// noisy-observation model, plus piecewise-constant true-parameter schedules.
#pragma once

#include <vector>

#include "spde/rng.hpp"
#include "spde/spectral_model.hpp"

namespace spde {

struct SignalState {
    double t = 0.0;
    Vec alpha;
};

struct ObservationRecord {
    double t = 0.0;
    Vec z; ///< rate observation, z ~ C alpha + bias + N(0, R/dt)
};

/// Exact transition of the linear SDE over one step: alpha' = Phi alpha + xi,
/// xi ~ N(0, W). Derivative stacks follow the directions of the system the
/// kernel was built from (sensor directions are identically zero).
struct TransitionKernel {
    double dt = 0.0;
    Mat Phi;
    Mat W;
    Mat noise_factor; ///< L with L L' = W
    std::vector<Mat> dPhi;
    std::vector<Mat> dW;
};

/// Builds the transition kernel for the drift/noise blocks of `sys`.
/// With B = I everything is in blockwise closed form; a general B uses
/// adaptive Gauss-Legendre quadrature of the covariance integrand.
/// Derivative stacks are filled when with_derivatives is set.
/// Throws when dt <= 0.
TransitionKernel make_kernel(const SystemMatrices& sys, double dt, bool with_derivatives = false);

/// alpha <- Phi alpha + L xi with xi standard normal; advances time by dt.
SignalState step_signal(const SignalState& state, const TransitionKernel& kernel, Rng& rng);

/// Rate observation z = C alpha + bias + eta, eta ~ N(0, R/dt).
ObservationRecord observe(const SignalState& state, const SystemMatrices& sys, double dt,
                          Rng& rng);

/// Piecewise-constant true-parameter path with right-continuous lookup.
struct ParameterSchedule {
    struct Knot {
        double t = 0.0;
        ModelParams params;
    };
    std::vector<Knot> knots;

    static ParameterSchedule constant(const ModelParams& p) { return {{{0.0, p}}}; }
    bool is_static() const { return knots.size() == 1; }
    /// Throws unless knot times are strictly increasing starting at 0.
    void validate() const;
    /// Additionally requires every knot time to lie on the step grid so no
    /// simulation step straddles a change-point.
    void validate_on_grid(double dt) const;
};

const ModelParams& schedule_at(const ParameterSchedule& sched, double t);

} // namespace spde
