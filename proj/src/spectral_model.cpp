#include "spde/spectral_model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace spde {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

Vec2 angular(const WaveNumber& k) { return {kTwoPi * k.kx, kTwoPi * k.ky}; }

/// g(x) = 2 J1(x)/x, the disc-average attenuation factor; g(0) = 1.
double disc_factor(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 8.0;
    return 2.0 * std::cyl_bessel_j(1, x) / x;
}

Mat2 diffusion_derivative(const ModelParams& p, ParamId id) {
    const double c = std::cos(p.alpha), s = std::sin(p.alpha);
    const double g = p.gamma_aniso, r2 = p.rho1 * p.rho1;
    Mat2 d = Mat2::Zero();
    switch (id) {
        case ParamId::Rho1:
            d = (2.0 / p.rho1) * p.diffusion();
            break;
        case ParamId::Gamma:
            d(0, 0) = -2.0 * r2 * s * s / (g * g * g);
            d(1, 1) = -2.0 * r2 * c * c / (g * g * g);
            d(0, 1) = d(1, 0) = 2.0 * r2 * c * s / (g * g * g);
            break;
        case ParamId::Alpha:
            d(0, 0) = 2.0 * r2 * c * s * (1.0 / (g * g) - 1.0);
            d(1, 1) = -d(0, 0);
            d(0, 1) = d(1, 0) = r2 * (c * c - s * s) * (1.0 - 1.0 / (g * g));
            break;
        default:
            break;
    }
    return d;
}

} // namespace

std::string Direction::name() const {
    if (kind == Kind::Theta) return param_name(theta);
    return "o" + std::to_string(sensor_index) + (axis == 0 ? "_x" : "_y");
}

std::vector<Direction> make_directions(const std::vector<ParamCoord>& active_params,
                                       const SensorArray& sensors) {
    std::vector<Direction> dirs;
    for (ParamCoord c : active_params) dirs.push_back(Direction::param(c));
    for (int i : sensors.movable_indices()) {
        dirs.push_back(Direction::sensor(i, 0));
        dirs.push_back(Direction::sensor(i, 1));
    }
    return dirs;
}

std::complex<double> operator_eigenvalue(const WaveNumber& k, const ModelParams& p) {
    const Vec2 kp = angular(k);
    const double quad = kp.dot(p.diffusion() * kp);
    return {-(quad + p.zeta), -kp.dot(p.mu)};
}

double noise_spectrum(const WaveNumber& k, const ModelParams& p) {
    const Vec2 kp = angular(k);
    const double s = kp.squaredNorm() + 1.0 / (p.rho0 * p.rho0);
    return std::sqrt(p.sigma2) / (kTwoPi * s);
}

std::vector<std::complex<double>> disc_average_coeffs(const Vec2& o, double r,
                                                      const WaveNumberSet& ks) {
    if (!(r > 0.0 && r < 0.5))
        throw std::invalid_argument("disc_average_coeffs: radius must lie in (0, 0.5)");
    std::vector<std::complex<double>> out;
    out.reserve(ks.ks.size());
    for (const auto& k : ks.ks) {
        const Vec2 kp = angular(k);
        const double g = disc_factor(kTwoPi * std::sqrt(double(k.sq_norm())) * r);
        out.push_back(g * std::exp(std::complex<double>(0.0, kp.dot(o))));
    }
    return out;
}

Vec basis_row(const WaveNumberSet& ks, const Vec2& x) {
    Vec row(ks.n());
    int j = 0;
    if (ks.include_constant) row[j++] = 1.0;
    for (const auto& k : ks.ks) {
        const double phase = angular(k).dot(x);
        row[j++] = std::cos(phase);
        row[j++] = std::sin(phase);
    }
    return row;
}

Vec evaluate_field(const Vec& coeffs, const std::vector<Vec2>& points, const WaveNumberSet& ks) {
    if (coeffs.size() != ks.n())
        throw std::invalid_argument("evaluate_field: coefficient length mismatch");
    Vec vals(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        vals[static_cast<Eigen::Index>(i)] = basis_row(ks, points[i]).dot(coeffs);
    return vals;
}

Mat SystemMatrices::bqb() const {
    if (b_identity) return qdiag.asDiagonal();
    return B * qdiag.asDiagonal() * B.transpose();
}

namespace {

bool depends_on_A(ParamId id) {
    return id == ParamId::Zeta || id == ParamId::Rho1 || id == ParamId::Gamma ||
           id == ParamId::Alpha || id == ParamId::MuX || id == ParamId::MuY;
}

void fill_parameter_blocks(SystemMatrices& sys, const ModelParams& p) {
    const WaveNumberSet& ks = sys.ks;
    const int n = sys.n;

    sys.blocks.clear();
    sys.A.setZero(n, n);
    int off = 0;
    if (ks.include_constant) {
        sys.blocks.push_back({0, 1, -p.zeta, 0.0});
        sys.A(0, 0) = -p.zeta;
        off = 1;
    }
    for (const auto& k : ks.ks) {
        const auto lam = operator_eigenvalue(k, p);
        sys.blocks.push_back({off, 2, lam.real(), lam.imag()});
        sys.A(off, off) = lam.real();
        sys.A(off, off + 1) = lam.imag();
        sys.A(off + 1, off) = -lam.imag();
        sys.A(off + 1, off + 1) = lam.real();
        off += 2;
    }

    sys.qdiag.resize(n);
    off = 0;
    if (ks.include_constant) sys.qdiag[off++] = std::pow(noise_spectrum({0, 0}, p), 2);
    for (const auto& k : ks.ks) {
        const double half = 0.5 * std::pow(noise_spectrum(k, p), 2);
        sys.qdiag[off++] = half;
        sys.qdiag[off++] = half;
    }

    sys.rdiag.resize(sys.ny);
    sys.bias.resize(sys.ny);
    for (int i = 0; i < sys.ny; ++i) {
        sys.rdiag[i] = p.tau2.at(sys.noise_class_of(i));
        sys.bias[i] = p.beta.at(sys.bias_class_of(i));
    }

    // Derivative stacks along the theta directions.
    const int nd = sys.dir_count();
    sys.dA.assign(nd, Mat::Zero(n, n));
    sys.dQdiag.assign(nd, Vec::Zero(n));
    sys.dRdiag.assign(nd, Vec::Zero(sys.ny));
    sys.dBias.assign(nd, Vec::Zero(sys.ny));
    sys.dBlocks.assign(nd, std::vector<std::pair<double, double>>(sys.blocks.size(), {0.0, 0.0}));

    for (int d = 0; d < nd; ++d) {
        const Direction& dir = sys.dirs[d];
        if (dir.kind != Direction::Kind::Theta) continue;
        const ParamId id = dir.theta.id;

        if (depends_on_A(id)) {
            const Mat2 dSig = diffusion_derivative(p, id);
            std::size_t b = 0;
            if (ks.include_constant) {
                if (id == ParamId::Zeta) {
                    sys.dBlocks[d][b] = {-1.0, 0.0};
                    sys.dA[d](0, 0) = -1.0;
                }
                ++b;
            }
            for (std::size_t i = 0; i < ks.ks.size(); ++i, ++b) {
                const Vec2 kp = angular(ks.ks[i]);
                double drho = 0.0, domega = 0.0;
                switch (id) {
                    case ParamId::Zeta: drho = -1.0; break;
                    case ParamId::Rho1:
                    case ParamId::Gamma:
                    case ParamId::Alpha: drho = -kp.dot(dSig * kp); break;
                    case ParamId::MuX: domega = -kp.x(); break;
                    case ParamId::MuY: domega = -kp.y(); break;
                    default: break;
                }
                sys.dBlocks[d][b] = {drho, domega};
                const int o2 = sys.blocks[b].offset;
                sys.dA[d](o2, o2) = drho;
                sys.dA[d](o2, o2 + 1) = domega;
                sys.dA[d](o2 + 1, o2) = -domega;
                sys.dA[d](o2 + 1, o2 + 1) = drho;
            }
        }

        if (id == ParamId::Sigma2 || id == ParamId::Rho0) {
            int j = 0;
            auto dq_mode = [&](const WaveNumber& k) {
                const double eta2 = std::pow(noise_spectrum(k, p), 2);
                if (id == ParamId::Sigma2) return p.sigma2 > 0.0 ? eta2 / p.sigma2 : 0.0;
                const double s =
                    angular(k).squaredNorm() + 1.0 / (p.rho0 * p.rho0);
                return 4.0 * eta2 / (s * std::pow(p.rho0, 3));
            };
            if (ks.include_constant) sys.dQdiag[d][j++] = dq_mode({0, 0});
            for (const auto& k : ks.ks) {
                const double half = 0.5 * dq_mode(k);
                sys.dQdiag[d][j++] = half;
                sys.dQdiag[d][j++] = half;
            }
            // sigma2 = 0 makes eta identically zero; the one-sided derivative
            // of eta^2 in sigma2 is then h^2 per mode.
            if (id == ParamId::Sigma2 && p.sigma2 == 0.0) {
                ModelParams unit = p;
                unit.sigma2 = 1.0;
                int jj = 0;
                if (ks.include_constant)
                    sys.dQdiag[d][jj++] = std::pow(noise_spectrum({0, 0}, unit), 2);
                for (const auto& k : ks.ks) {
                    const double half = 0.5 * std::pow(noise_spectrum(k, unit), 2);
                    sys.dQdiag[d][jj++] = half;
                    sys.dQdiag[d][jj++] = half;
                }
            }
        }

        if (id == ParamId::Tau2) {
            for (int i = 0; i < sys.ny; ++i)
                if (sys.noise_class_of(i) == dir.theta.cls) sys.dRdiag[d][i] = 1.0;
        }
        if (id == ParamId::Beta) {
            for (int i = 0; i < sys.ny; ++i)
                if (sys.bias_class_of(i) == dir.theta.cls) sys.dBias[d][i] = 1.0;
        }
    }
}

void fill_observation_rows(SystemMatrices& sys, const SensorArray& sensors) {
    const WaveNumberSet& ks = sys.ks;
    const int n = sys.n, ny = sys.ny;
    sys.C.setZero(ny, n);
    for (int i = 0; i < ny; ++i) {
        const Vec2 o = sensors.sensors[i].pos;
        int j = 0;
        if (ks.include_constant) sys.C(i, j++) = 1.0;
        for (const auto& k : ks.ks) {
            const Vec2 kp = angular(k);
            const double g =
                disc_factor(kTwoPi * std::sqrt(double(k.sq_norm())) * sensors.radius);
            const double phase = kp.dot(o);
            sys.C(i, j++) = g * std::cos(phase);
            sys.C(i, j++) = g * std::sin(phase);
        }
    }
    if (sys.dC.size() != static_cast<std::size_t>(sys.dir_count()))
        sys.dC.assign(sys.dir_count(), Mat::Zero(ny, n));
    for (int d = 0; d < sys.dir_count(); ++d) {
        const Direction& dir = sys.dirs[d];
        if (dir.kind != Direction::Kind::SensorCoord) continue;
        Mat& dc = sys.dC[d];
        dc.setZero(ny, n);
        const int i = dir.sensor_index;
        const Vec2 o = sensors.sensors[i].pos;
        int j = ks.include_constant ? 1 : 0;
        for (const auto& k : ks.ks) {
            const Vec2 kp = angular(k);
            const double g =
                disc_factor(kTwoPi * std::sqrt(double(k.sq_norm())) * sensors.radius);
            const double phase = kp.dot(o);
            const double kc = dir.axis == 0 ? kp.x() : kp.y();
            dc(i, j++) = -g * kc * std::sin(phase);
            dc(i, j++) = g * kc * std::cos(phase);
        }
    }
}

Mat weighting_matrix(const MSpec& mspec, const WaveNumberSet& ks) {
    const int n = ks.n();
    switch (mspec.kind) {
        case MSpec::Kind::Identity:
            return Mat::Identity(n, n);
        case MSpec::Kind::TargetPoints: {
            Mat m = Mat::Zero(n, n);
            for (const auto& p : mspec.targets) {
                const Vec row = basis_row(ks, p);
                m.noalias() += row * row.transpose();
            }
            return m;
        }
        case MSpec::Kind::Explicit: {
            if (mspec.explicit_m.rows() != n || mspec.explicit_m.cols() != n)
                throw std::invalid_argument("MSpec: explicit matrix has wrong size");
            Mat m = 0.5 * (mspec.explicit_m + mspec.explicit_m.transpose());
            Eigen::SelfAdjointEigenSolver<Mat> es(m);
            const double scale = 1.0 + m.norm();
            if (es.eigenvalues().minCoeff() < -1e-10 * scale)
                throw std::invalid_argument("MSpec: explicit matrix is not PSD");
            return m;
        }
    }
    throw std::logic_error("weighting_matrix: bad kind");
}

Mat galerkin_multiplication_matrix(const ScalarField& b, const WaveNumberSet& ks) {
    constexpr int kGrid = 128;
    const int n = ks.n();
    const int g2 = kGrid * kGrid;
    Mat E(g2, n);
    Vec bv(g2);
    int row = 0;
    for (int iy = 0; iy < kGrid; ++iy)
        for (int ix = 0; ix < kGrid; ++ix, ++row) {
            const Vec2 x(ix / double(kGrid), iy / double(kGrid));
            E.row(row) = basis_row(ks, x).transpose();
            bv[row] = b(x.x(), x.y());
            if (!std::isfinite(bv[row]))
                throw std::invalid_argument("assemble_system: b_field not finite on grid");
        }
    // <b phi_j, phi_k> / <phi_k, phi_k>; trig norms are exactly 1/2.
    Mat num = E.transpose() * bv.asDiagonal() * E / double(g2);
    int j = 0;
    if (ks.include_constant) ++j;
    for (; j < n; ++j) num.row(j) *= 2.0;
    return num;
}

} // namespace

int SystemMatrices::noise_class_of(int sensor) const { return noise_class_.at(sensor); }
int SystemMatrices::bias_class_of(int sensor) const { return bias_class_.at(sensor); }

SystemMatrices assemble_system(const ModelParams& p, const SensorArray& sensors,
                               const WaveNumberSet& ks, const std::optional<ScalarField>& b_field,
                               const MSpec& mspec, const std::vector<Direction>& dirs) {
    p.validate();
    sensors.validate(p);

    SystemMatrices sys;
    sys.ks = ks;
    sys.n = ks.n();
    sys.ny = sensors.size();
    sys.sensor_radius = sensors.radius;
    sys.dirs = dirs;
    for (const auto& s : sensors.sensors) {
        sys.noise_class_.push_back(s.noise_class);
        sys.bias_class_.push_back(s.bias_class);
    }

    fill_parameter_blocks(sys, p);
    fill_observation_rows(sys, sensors);

    if (b_field) {
        sys.b_identity = false;
        sys.B = galerkin_multiplication_matrix(*b_field, ks);
    }
    sys.M = weighting_matrix(mspec, ks);
    return sys;
}

void refresh_observation_rows(SystemMatrices& sys, const SensorArray& sensors) {
    fill_observation_rows(sys, sensors);
}

void refresh_parameter_blocks(SystemMatrices& sys, const ModelParams& p) {
    fill_parameter_blocks(sys, p);
}

} // namespace spde
