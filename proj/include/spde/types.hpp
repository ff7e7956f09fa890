// Core value types: model parameters, parameter box, wavenumber sets,
// sensor arrays.
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace spde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Scalar parameters of the advection-diffusion model plus per-class
/// sensor noise variances and biases.
struct ModelParams {
    double rho0 = 0.5;        ///< spatial range of the signal noise (> 0)
    double sigma2 = 0.2;      ///< marginal variance parameter (> 0)
    double zeta = 0.5;        ///< damping rate (> 0)
    double rho1 = 0.1;        ///< diffusion range (> 0)
    double gamma_aniso = 1.0; ///< anisotropic amplitude (> 0)
    double alpha = 0.0;       ///< anisotropic direction, in [0, pi/2]
    Vec2 mu = Vec2::Zero();   ///< drift velocity
    std::vector<double> tau2 = {0.01}; ///< per-noise-class sensor variances
    std::vector<double> beta = {0.0};  ///< per-bias-class sensor biases

    int noise_classes() const { return static_cast<int>(tau2.size()); }
    int bias_classes() const { return static_cast<int>(beta.size()); }

    /// Diffusion matrix Sigma = rho1^2 * (M^T M)^{-1} with
    /// M = [[cos a, sin a], [-g sin a, g cos a]].
    Mat2 diffusion() const;

    /// Throws std::invalid_argument when a positivity or range constraint
    /// is violated.
    void validate() const;
};

/// Identifies one scalar coordinate of ModelParams. Class-indexed
/// coordinates (tau2, beta) carry the class index in `cls`.
enum class ParamId { Rho0, Sigma2, Zeta, Rho1, Gamma, Alpha, MuX, MuY, Tau2, Beta };

struct ParamCoord {
    ParamId id = ParamId::Rho0;
    int cls = 0;
    friend bool operator==(const ParamCoord&, const ParamCoord&) = default;
};

double param_get(const ModelParams& p, ParamCoord c);
void param_set(ModelParams& p, ParamCoord c, double value);
std::string param_name(ParamCoord c);
/// Parses names like "rho0", "mu_x", "tau2_1"; throws on unknown names.
ParamCoord param_coord_from_name(const std::string& name);
/// All coordinates of `p` in canonical order (scalars, then tau2 classes,
/// then beta classes).
std::vector<ParamCoord> all_param_coords(const ModelParams& p);

/// Coordinatewise box constraint for the parameter vector.
struct ParameterSpace {
    ModelParams lower;
    ModelParams upper;

    bool contains(ParamCoord c, double value) const;
    void validate(const ModelParams& shape) const;
    /// A wide default box compatible with the ModelParams invariants.
    static ParameterSpace wide(const ModelParams& shape);
};

struct WaveNumber {
    int kx = 0;
    int ky = 0;
    friend bool operator==(const WaveNumber&, const WaveNumber&) = default;
    int sq_norm() const { return kx * kx + ky * ky; }
};

/// Deterministically ordered truncation of the upper half-plane wavenumber
/// lattice. Each listed wavenumber contributes a cos/sin pair of real basis
/// functions; the optional constant mode contributes one.
///
/// Real basis layout: [1 (if constant)], then for each wavenumber k in
/// order: cos(2 pi k.x), sin(2 pi k.x).
struct WaveNumberSet {
    bool include_constant = true;
    std::vector<WaveNumber> ks;

    int n() const { return (include_constant ? 1 : 0) + 2 * static_cast<int>(ks.size()); }
    /// Column index of the cos (offset 0) / sin (offset 1) function of ks[i].
    int pair_col(int i) const { return (include_constant ? 1 : 0) + 2 * i; }
};

/// Half-plane membership: kx + ky > 0, or kx + ky == 0 with kx > 0.
bool in_upper_half_plane(const WaveNumber& k);

/// Builds the truncation with n = target_n real basis functions, taking
/// wavenumbers in increasing |k|^2 with lexicographic (kx, ky) tie-break.
/// Throws when target_n has the wrong parity or is otherwise unreachable;
/// the message lists the nearest achievable sizes.
WaveNumberSet build_truncation(int target_n, bool include_constant);

/// Builds the truncation containing every half-plane wavenumber with
/// |k|^2 <= max_sq_norm.
WaveNumberSet build_truncation_by_norm(int max_sq_norm, bool include_constant);

struct Sensor {
    Vec2 pos = Vec2::Zero(); ///< stored wrapped into [0,1)^2
    int noise_class = 0;
    int bias_class = 0;
    bool movable = false;
};

/// Disc-averaging sensors on the unit torus with a shared radius.
struct SensorArray {
    std::vector<Sensor> sensors;
    double radius = 0.05; ///< in (0, 0.5)

    int size() const { return static_cast<int>(sensors.size()); }
    int movable_count() const;
    /// Indices of movable sensors in array order; each contributes the
    /// scalar coordinates (x, y) in that order.
    std::vector<int> movable_indices() const;
    void validate(const ModelParams& p) const;
};

/// Wraps a scalar coordinate onto [0, 1).
double wrap_unit(double x);
/// Wraps a point onto the unit torus.
Vec2 wrap_torus(const Vec2& x);
/// Shortest displacement from a to b on the torus (componentwise in
/// [-0.5, 0.5)).
Vec2 torus_delta(const Vec2& a, const Vec2& b);
/// Torus distance between two points.
double torus_distance(const Vec2& a, const Vec2& b);

} // namespace spde
