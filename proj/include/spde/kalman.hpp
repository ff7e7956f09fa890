// Continuous-discrete Kalman-Bucy filter for the truncated system, the
// steady-state (algebraic Riccati) covariance, and dense Lyapunov solvers.
#pragma once

#include "spde/signal_sim.hpp"
#include "spde/spectral_model.hpp"

namespace spde {

struct FilterState {
    double t = 0.0;
    Vec m;
    Mat S;
};

/// Intermediates of one filter step, consumed by the tangent recursion and
/// the likelihood/objective increments.
struct KbProducts {
    Vec m_pred;
    Mat S_pred;
    Vec innovation;       ///< z - C m_pred - bias
    Mat innovation_cov;   ///< C S_pred C' + R/dt
    Eigen::LDLT<Mat> innovation_ldlt;
    Mat gain;             ///< K = S_pred C' (C S_pred C' + R/dt)^{-1}
    Mat closed_loop;      ///< I - K C
};

/// Predict with the exact transition kernel, then update with the rate
/// observation z (noise covariance R/dt) in Joseph form. The covariance is
/// symmetrised after the update. Throws when the innovation covariance is
/// not (numerically) positive definite.
FilterState kb_step(const FilterState& fs, const SystemMatrices& sys,
                    const TransitionKernel& kernel, const ObservationRecord& z,
                    KbProducts* products = nullptr);

/// Solves F K + K F' + W = 0 for symmetric K. F must be stable (the error
/// message names the offending eigenvalue otherwise). Dimensions up to 64
/// use the direct symmetric-Kronecker linear solve; larger problems use
/// Bartels-Stewart on the real Schur form.
Mat solve_lyapunov(const Mat& F, const Mat& W);

struct SteadyState {
    Mat Sinf;
    double residual = 0.0; ///< Frobenius norm of the Riccati residual
    int dre_iterations = 0;
    int newton_iterations = 0;
};

struct AreOptions {
    double dre_dt = 1e-3;        ///< step of the covariance fixed-point iteration
    double dre_tol = 1e-12;      ///< successive-iterate tolerance
    int dre_max_iter = 200000;
    int newton_max_iter = 50;
    double residual_tol = 1e-9;  ///< relative residual acceptance
    bool skip_dre = false;       ///< start Newton from `init` directly
    Mat init;                    ///< optional warm start (PSD)
};

/// Steady-state filter covariance: iterates the discrete covariance
/// recursion to a fixed point, then applies Newton (Lyapunov) refinement
/// until the continuous-time Riccati residual
///   A S + S A' + B Q B' - S C' R^{-1} C S
/// is below residual_tol * (1 + |S|). Throws on non-convergence.
SteadyState solve_are(const SystemMatrices& sys, const AreOptions& opts = {});

/// Riccati residual Frobenius norm of a candidate steady state.
double are_residual(const SystemMatrices& sys, const Mat& S);

/// Tr[M Sinf(theta, o)], the asymptotic placement objective.
double asymptotic_objective(const ModelParams& p, const SensorArray& sensors,
                            const WaveNumberSet& ks, const MSpec& mspec,
                            const AreOptions& opts = {});

} // namespace spde
