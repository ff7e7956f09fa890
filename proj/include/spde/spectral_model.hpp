// Truncated real-Fourier representation of the stochastic advection-diffusion
// equation on the unit torus: operator eigenvalues, noise spectrum,
// disc-average observation rows, and assembly of the full state-space
// matrices with their analytic derivatives.
#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "spde/types.hpp"

namespace spde {

/// One differentiation direction: a model-parameter coordinate or one scalar
/// coordinate (x or y) of a movable sensor.
struct Direction {
    enum class Kind { Theta, SensorCoord };
    Kind kind = Kind::Theta;
    ParamCoord theta{};   ///< valid when kind == Theta
    int sensor_index = -1; ///< valid when kind == SensorCoord
    int axis = 0;          ///< 0 = x, 1 = y

    static Direction param(ParamCoord c) { return {Kind::Theta, c, -1, 0}; }
    static Direction sensor(int index, int axis) {
        return {Kind::SensorCoord, {}, index, axis};
    }
    std::string name() const;
};

/// Builds the standard direction list: the given parameter coordinates
/// followed by (x, y) for each movable sensor in array order.
std::vector<Direction> make_directions(const std::vector<ParamCoord>& active_params,
                                       const SensorArray& sensors);

/// Eigenvalue of the advection-diffusion operator on the plane wave with
/// integer wavenumber k (angular wavenumber 2*pi*k):
///   lambda = -( i (2 pi k)' mu + (2 pi k)' Sigma (2 pi k) + zeta ).
std::complex<double> operator_eigenvalue(const WaveNumber& k, const ModelParams& p);

/// Whittle-type noise amplitude eta_k = sqrt(sigma2)/(2 pi) *
/// ((2 pi k)'(2 pi k) + 1/rho0^2)^{-1}; the mode noise variance is eta_k^2.
double noise_spectrum(const WaveNumber& k, const ModelParams& p);

/// Complex disc-average coefficients: entry j is
///   exp(i (2 pi k_j) . o) * g(2 pi |k_j| r),  g(x) = 2 J1(x)/x, g(0) = 1,
/// the exact average of the plane wave over the disc of radius r centred at
/// o. The constant-mode entry is identically 1 and is not stored.
/// Throws when r is outside (0, 0.5).
std::vector<std::complex<double>> disc_average_coeffs(const Vec2& o, double r,
                                                      const WaveNumberSet& ks);

/// Real basis evaluation row at a point: [1, cos(2 pi k.x), sin(2 pi k.x), ...].
Vec basis_row(const WaveNumberSet& ks, const Vec2& x);

/// Field values sum_i coeffs_i * phi_i(x) at each point.
Vec evaluate_field(const Vec& coeffs, const std::vector<Vec2>& points, const WaveNumberSet& ks);

/// Weighting-operator specification for the placement objective.
struct MSpec {
    enum class Kind { Identity, TargetPoints, Explicit };
    Kind kind = Kind::Identity;
    std::vector<Vec2> targets;
    Mat explicit_m;

    static MSpec identity() { return {}; }
    static MSpec target_points(std::vector<Vec2> pts) {
        return {Kind::TargetPoints, std::move(pts), {}};
    }
    static MSpec explicit_matrix(Mat m) { return {Kind::Explicit, {}, std::move(m)}; }
};

/// 1x1 or 2x2 diagonal block of the drift matrix. A pair block represents
/// the rotation-scaling [[rho, omega], [-omega, rho]] acting on the
/// (cos, sin) coefficients; eigenvalues are rho +- i omega.
struct ABlock {
    int offset = 0;
    int size = 1;
    double rho = 0.0;
    double omega = 0.0;
};

/// Assembled state-space matrices with analytic derivative stacks along the
/// active directions. Q and R are diagonal and stored as vectors. The mode
/// noise variance eta_k^2 of a wavenumber pair is split equally between its
/// cos and sin components; the constant mode keeps eta_0^2 in full.
struct SystemMatrices {
    int n = 0;
    int ny = 0;
    WaveNumberSet ks;
    double sensor_radius = 0.0;

    Mat A;
    std::vector<ABlock> blocks;
    bool b_identity = true;
    Mat B;     ///< identity not stored; valid when !b_identity
    Vec qdiag; ///< diagonal of Q (length n)
    Mat C;     ///< ny x n
    Vec bias;  ///< length ny
    Vec rdiag; ///< diagonal of R (length ny, positive)
    Mat M;     ///< n x n symmetric PSD

    std::vector<Direction> dirs;
    // Derivative stacks, one entry per direction. Slots that are identically
    // zero for a direction are stored as zero matrices/vectors.
    std::vector<Mat> dA;
    std::vector<Vec> dQdiag;
    std::vector<Mat> dC;
    std::vector<Vec> dRdiag;
    std::vector<Vec> dBias;
    /// Per direction, per block: (d rho, d omega).
    std::vector<std::vector<std::pair<double, double>>> dBlocks;

    Mat bqb() const; ///< B Q B' as a dense matrix
    int dir_count() const { return static_cast<int>(dirs.size()); }

    int noise_class_of(int sensor) const;
    int bias_class_of(int sensor) const;
    std::vector<int> noise_class_; ///< per-sensor noise class (fixed at assembly)
    std::vector<int> bias_class_;  ///< per-sensor bias class (fixed at assembly)
};

using ScalarField = std::function<double(double, double)>;

/// Assembles (A, B, Q, C, bias, R, M) and all derivative stacks for the
/// given parameters, sensors and truncation. A spatial weighting field b
/// makes B the Galerkin matrix of multiplication by b (128x128 grid rule);
/// otherwise B is the identity. Throws on invalid inputs, on a non-finite
/// b over the quadrature grid, and on an explicit M that is not symmetric
/// PSD within tolerance 1e-10.
SystemMatrices assemble_system(const ModelParams& p, const SensorArray& sensors,
                               const WaveNumberSet& ks, const std::optional<ScalarField>& b_field,
                               const MSpec& mspec, const std::vector<Direction>& dirs = {});

/// Rebuilds only the position-dependent pieces (C and the sensor-coordinate
/// entries of dC) after sensors moved; everything else is left untouched.
void refresh_observation_rows(SystemMatrices& sys, const SensorArray& sensors);

/// Rebuilds only the parameter-dependent pieces (A, Q, R, bias and their
/// derivative stacks) after theta changed; C is left untouched.
void refresh_parameter_blocks(SystemMatrices& sys, const ModelParams& p);

} // namespace spde
