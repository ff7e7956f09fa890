// Log-likelihood increments, the recursive likelihood-gradient increment,
// the running placement objective, and the drift-functional growth
// diagnostics.
#pragma once

#include "spde/tangent.hpp"

namespace spde {

/// Girsanov-form log-likelihood increment of one rate observation:
///   <R^{-1} y_hat, z> dt - 0.5 |R^{-1/2} y_hat|^2 dt,  y_hat = C m_pred + bias.
/// Summing over steps approximates the continuous-time log-likelihood up to
/// an additive constant independent of the drift parameters.
double loglik_increment(const KbProducts& pr, const SystemMatrices& sys, double dt);

/// Discrete Gaussian predictive log-likelihood of one rate observation
/// (up to the 2 pi constant):
///   -0.5 log det(Sigma_nu) - 0.5 nu' Sigma_nu^{-1} nu.
/// Unlike the Girsanov form this identifies the measurement variances.
double predictive_loglik_increment(const KbProducts& pr);

/// Likelihood-gradient increment over the active parameter coordinates.
/// Non-variance coordinates carry the Girsanov gradient
///   [C dm_pred + dC m_pred + dbias]' R^{-1} nu dt;
/// noise-variance (tau2) coordinates carry the exact derivative of the
/// predictive log-likelihood increment, which uses the full innovation
/// covariance. Length equals the number of Theta directions.
Vec rml_gradient_increment(const KbProducts& pr, const TangentProducts& tpr,
                           const SystemMatrices& sys, double dt);

/// Tr[M S] dt, the running placement-objective increment.
double placement_objective_increment(const Mat& S, const Mat& M, double dt);

/// The six drift functionals of the joint (state, filter, tangent) process,
/// evaluated at given latent coefficients and filter quantities. Each
/// satisfies a polynomial growth bound in the joint state; the tests fit
/// those bounds on simulated trajectories.
struct GrowthDiagnostics {
    Vec varphi;  ///< C m
    double zeta_fn = 0.0; ///< (C m)' (C u - 0.5 C m)
    Mat eta;     ///< column j: C dm_j, over Theta directions
    Vec psi;     ///< component j: (C dm_j)' R^{-1} C (u - m)
    double iota = 0.0; ///< Tr[M S]
    Vec phi;     ///< component c: Tr[M dS_c], over sensor directions
};

GrowthDiagnostics growth_diagnostics(const Vec& u_coeffs, const FilterState& fs,
                                     const TangentState& ts, const SystemMatrices& sys);

} // namespace spde
