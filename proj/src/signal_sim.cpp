#include "spde/signal_sim.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace spde {

namespace {

// (exp(a dt) - 1)/a and its derivative in a, stable near a = 0.
double expm1_over(double a, double dt) {
    if (std::abs(a * dt) < 1e-6)
        return dt * (1.0 + a * dt / 2.0 + a * a * dt * dt / 6.0);
    return std::expm1(a * dt) / a;
}

double expm1_over_da(double a, double dt) {
    if (std::abs(a * dt) < 1e-5)
        return dt * dt * (0.5 + a * dt / 3.0 + a * a * dt * dt / 8.0);
    return (dt * std::exp(a * dt) - expm1_over(a, dt)) / a;
}

// exp(A s) for the block-diagonal drift, written into `out`.
void block_exponential(const std::vector<ABlock>& blocks, double s, Mat& out) {
    out.setZero();
    for (const auto& b : blocks) {
        const double e = std::exp(b.rho * s);
        if (b.size == 1) {
            out(b.offset, b.offset) = e;
        } else {
            const double c = std::cos(b.omega * s), sn = std::sin(b.omega * s);
            out(b.offset, b.offset) = e * c;
            out(b.offset, b.offset + 1) = e * sn;
            out(b.offset + 1, b.offset) = -e * sn;
            out(b.offset + 1, b.offset + 1) = e * c;
        }
    }
}

// d exp(A s) along one direction: s (drho I + domega J) exp(A s) blockwise.
void block_exponential_derivative(const std::vector<ABlock>& blocks,
                                  const std::vector<std::pair<double, double>>& db, double s,
                                  const Mat& expAs, Mat& out) {
    out.setZero();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        const auto [drho, domega] = db[i];
        if (drho == 0.0 && domega == 0.0) continue;
        if (b.size == 1) {
            out(b.offset, b.offset) = s * drho * expAs(b.offset, b.offset);
        } else {
            const int o = b.offset;
            // (drho I + domega J) with J = [[0,1],[-1,0]] applied to expAs.
            out(o, o) = s * (drho * expAs(o, o) + domega * expAs(o + 1, o));
            out(o, o + 1) = s * (drho * expAs(o, o + 1) + domega * expAs(o + 1, o + 1));
            out(o + 1, o) = s * (drho * expAs(o + 1, o) - domega * expAs(o, o));
            out(o + 1, o + 1) = s * (drho * expAs(o + 1, o + 1) - domega * expAs(o, o + 1));
        }
    }
}

Mat psd_factor(const Mat& w) {
    Eigen::SelfAdjointEigenSolver<Mat> es(w);
    Vec vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * vals.asDiagonal();
}

// 8-point Gauss-Legendre nodes/weights on [0, 1].
constexpr int kGaussN = 8;
constexpr double kGaussX[kGaussN] = {0.01985507175123188, 0.10166676129318664,
                                     0.2372337950418355,  0.40828267875217505,
                                     0.5917173212478249,  0.7627662049581645,
                                     0.8983332387068134,  0.9801449282487681};
constexpr double kGaussW[kGaussN] = {0.05061426814518813, 0.11119051722668723,
                                     0.15685332293894364, 0.18134189168918097,
                                     0.18134189168918097, 0.15685332293894364,
                                     0.11119051722668723, 0.05061426814518813};

// Covariance integral int_0^dt exp(As) G exp(As)' ds and its directional
// derivatives by composite Gauss-Legendre quadrature with panel doubling.
void quadrature_covariance(const SystemMatrices& sys, const Mat& G, const std::vector<Mat>& dG,
                           double dt, bool with_derivatives, Mat& W, std::vector<Mat>& dW) {
    const int n = sys.n;
    const int nd = with_derivatives ? sys.dir_count() : 0;
    Mat expAs(n, n), dexp(n, n);
    auto evaluate = [&](int panels, Mat& w_out, std::vector<Mat>& dw_out) {
        w_out.setZero(n, n);
        dw_out.assign(nd, Mat::Zero(n, n));
        const double h = dt / panels;
        for (int pnl = 0; pnl < panels; ++pnl) {
            for (int q = 0; q < kGaussN; ++q) {
                const double s = (pnl + kGaussX[q]) * h;
                const double wq = kGaussW[q] * h;
                block_exponential(sys.blocks, s, expAs);
                const Mat EG = expAs * G;
                w_out.noalias() += wq * EG * expAs.transpose();
                for (int d = 0; d < nd; ++d) {
                    block_exponential_derivative(sys.blocks, sys.dBlocks[d], s, expAs, dexp);
                    Mat term = dexp * G * expAs.transpose();
                    if (dG[d].size() > 0) term.noalias() += expAs * dG[d] * expAs.transpose();
                    dw_out[d].noalias() += wq * (term + term.transpose());
                }
            }
        }
        for (int d = 0; d < nd; ++d)
            dw_out[d] = 0.5 * (dw_out[d] + dw_out[d].transpose().eval());
    };

    Mat w_prev;
    std::vector<Mat> dw_prev;
    int panels = 1;
    evaluate(panels, W, dW);
    for (int iter = 0; iter < 6; ++iter) {
        w_prev = W;
        dw_prev = dW;
        panels *= 2;
        evaluate(panels, W, dW);
        if ((W - w_prev).norm() <= 1e-13 * (1.0 + W.norm())) break;
    }
}

} // namespace

TransitionKernel make_kernel(const SystemMatrices& sys, double dt, bool with_derivatives) {
    if (!(dt > 0.0)) throw std::invalid_argument("make_kernel: dt must be > 0");
    const int n = sys.n;
    const int nd = with_derivatives ? sys.dir_count() : 0;

    TransitionKernel k;
    k.dt = dt;
    k.Phi.setZero(n, n);
    block_exponential(sys.blocks, dt, k.Phi);

    if (nd > 0) {
        k.dPhi.assign(nd, Mat::Zero(n, n));
        for (int d = 0; d < nd; ++d)
            block_exponential_derivative(sys.blocks, sys.dBlocks[d], dt, k.Phi, k.dPhi[d]);
    }

    if (sys.b_identity) {
        k.W.setZero(n, n);
        k.noise_factor.setZero(n, n);
        if (nd > 0) k.dW.assign(nd, Mat::Zero(n, n));
        for (std::size_t bi = 0; bi < sys.blocks.size(); ++bi) {
            const auto& b = sys.blocks[bi];
            const double q = sys.qdiag[b.offset];
            const double phi1 = expm1_over(2.0 * b.rho, dt);
            for (int j = 0; j < b.size; ++j) {
                k.W(b.offset + j, b.offset + j) = q * phi1;
                k.noise_factor(b.offset + j, b.offset + j) = std::sqrt(std::max(0.0, q * phi1));
            }
            for (int d = 0; d < nd; ++d) {
                const double dq = sys.dQdiag[d][b.offset];
                const double drho = sys.dBlocks[d][bi].first;
                const double dv = dq * phi1 + q * 2.0 * drho * expm1_over_da(2.0 * b.rho, dt);
                for (int j = 0; j < b.size; ++j) k.dW[d](b.offset + j, b.offset + j) = dv;
            }
        }
        return k;
    }

    const Mat G = sys.bqb();
    std::vector<Mat> dG(nd);
    for (int d = 0; d < nd; ++d)
        if (!sys.dQdiag[d].isZero(0.0))
            dG[d] = sys.B * sys.dQdiag[d].asDiagonal() * sys.B.transpose();
    quadrature_covariance(sys, G, dG, dt, with_derivatives, k.W, k.dW);
    k.noise_factor = psd_factor(k.W);
    return k;
}

SignalState step_signal(const SignalState& state, const TransitionKernel& kernel, Rng& rng) {
    const int n = static_cast<int>(state.alpha.size());
    if (kernel.Phi.rows() != n) throw std::invalid_argument("step_signal: dimension mismatch");
    Vec xi(n);
    for (int i = 0; i < n; ++i) xi[i] = rng.next_normal();
    SignalState out;
    out.t = state.t + kernel.dt;
    out.alpha = kernel.Phi * state.alpha + kernel.noise_factor * xi;
    return out;
}

ObservationRecord observe(const SignalState& state, const SystemMatrices& sys, double dt,
                          Rng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("observe: dt must be > 0");
    ObservationRecord rec;
    rec.t = state.t;
    rec.z = sys.C * state.alpha + sys.bias;
    for (int i = 0; i < sys.ny; ++i)
        rec.z[i] += std::sqrt(sys.rdiag[i] / dt) * rng.next_normal();
    return rec;
}

void ParameterSchedule::validate() const {
    if (knots.empty()) throw std::invalid_argument("ParameterSchedule: no knots");
    if (knots.front().t != 0.0)
        throw std::invalid_argument("ParameterSchedule: first knot must be at t = 0");
    for (std::size_t i = 1; i < knots.size(); ++i)
        if (!(knots[i].t > knots[i - 1].t))
            throw std::invalid_argument("ParameterSchedule: knot times must increase");
    for (const auto& k : knots) k.params.validate();
}

void ParameterSchedule::validate_on_grid(double dt) const {
    validate();
    for (const auto& k : knots) {
        const double steps = k.t / dt;
        if (std::abs(steps - std::round(steps)) > 1e-9)
            throw std::invalid_argument("ParameterSchedule: knot at t=" + std::to_string(k.t) +
                                        " does not lie on the step grid");
    }
}

const ModelParams& schedule_at(const ParameterSchedule& sched, double t) {
    const ModelParams* current = &sched.knots.front().params;
    for (const auto& k : sched.knots) {
        if (k.t <= t + 1e-12) current = &k.params;
        else break;
    }
    return *current;
}

} // namespace spde
