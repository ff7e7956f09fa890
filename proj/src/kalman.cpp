#include "spde/kalman.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace spde {

namespace {

void require_stable(const Mat& F, const char* who) {
    Eigen::EigenSolver<Mat> es(F, /*computeEigenvectors=*/false);
    Eigen::Index worst;
    es.eigenvalues().real().maxCoeff(&worst);
    const std::complex<double> lam = es.eigenvalues()[worst];
    if (lam.real() >= 0.0) {
        std::ostringstream msg;
        msg << who << ": matrix is not stable, eigenvalue " << lam.real();
        if (lam.imag() != 0.0) msg << (lam.imag() > 0 ? "+" : "") << lam.imag() << "i";
        msg << " has non-negative real part";
        throw std::runtime_error(msg.str());
    }
}

// Direct solve of the symmetric Kronecker system for F K + K F' + W = 0.
Mat lyapunov_kron(const Mat& F, const Mat& W) {
    const int n = static_cast<int>(F.rows());
    const int m = n * (n + 1) / 2;
    auto idx = [n](int i, int j) { // i <= j
        return i * n - i * (i - 1) / 2 + (j - i);
    };
    Mat sys = Mat::Zero(m, m);
    Vec rhs(m);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const int row = idx(i, j);
            rhs[row] = -0.5 * (W(i, j) + W(j, i));
            for (int k = 0; k < n; ++k) {
                // (F K)_{ij} contributes F_ik K_kj, (K F')_{ij} contributes K_ik F_jk.
                const int a = std::min(k, j), b = std::max(k, j);
                sys(row, idx(a, b)) += F(i, k);
                const int c = std::min(i, k), d = std::max(i, k);
                sys(row, idx(c, d)) += F(j, k);
            }
        }
    Vec sol = sys.partialPivLu().solve(rhs);
    Mat K(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) K(i, j) = K(j, i) = sol[idx(i, j)];
    return K;
}

// Bartels-Stewart on the real Schur form, for large systems.
Mat lyapunov_schur(const Mat& F, const Mat& W) {
    const int n = static_cast<int>(F.rows());
    Eigen::RealSchur<Mat> schur(F);
    const Mat& T = schur.matrixT();
    const Mat& U = schur.matrixU();
    Mat rhs = -U.transpose() * W * U;

    // Diagonal block boundaries of the quasi-triangular T.
    std::vector<int> starts;
    for (int i = 0; i < n;) {
        starts.push_back(i);
        i += (i + 1 < n && std::abs(T(i + 1, i)) > 0.0) ? 2 : 1;
    }
    const int nb = static_cast<int>(starts.size());
    auto bsize = [&](int b) { return (b + 1 < nb ? starts[b + 1] : n) - starts[b]; };

    Mat Y = Mat::Zero(n, n);
    for (int j = nb - 1; j >= 0; --j) {
        const int js = starts[j], jn = bsize(j);
        for (int i = nb - 1; i >= 0; --i) {
            const int is = starts[i], in_ = bsize(i);
            Mat B = rhs.block(is, js, in_, jn);
            for (int k = i + 1; k < nb; ++k)
                B.noalias() -= T.block(is, starts[k], in_, bsize(k)) *
                               Y.block(starts[k], js, bsize(k), jn);
            for (int l = j + 1; l < nb; ++l)
                B.noalias() -= Y.block(is, starts[l], in_, bsize(l)) *
                               T.block(js, starts[l], jn, bsize(l)).transpose();
            // Solve T_ii X + X T_jj' = B, a system of size <= 4.
            const Mat Tii = T.block(is, is, in_, in_);
            const Mat Tjj = T.block(js, js, jn, jn);
            Mat small = Mat::Zero(in_ * jn, in_ * jn);
            Vec bvec(in_ * jn);
            for (int q = 0; q < jn; ++q)
                for (int p = 0; p < in_; ++p) {
                    const int r = q * in_ + p;
                    bvec[r] = B(p, q);
                    for (int pp = 0; pp < in_; ++pp) small(r, q * in_ + pp) += Tii(p, pp);
                    for (int qq = 0; qq < jn; ++qq) small(r, qq * in_ + p) += Tjj(q, qq);
                }
            Vec x = small.partialPivLu().solve(bvec);
            for (int q = 0; q < jn; ++q)
                for (int p = 0; p < in_; ++p) Y(is + p, js + q) = x[q * in_ + p];
        }
    }
    Mat K = U * Y * U.transpose();
    return 0.5 * (K + K.transpose());
}

} // namespace

FilterState kb_step(const FilterState& fs, const SystemMatrices& sys,
                    const TransitionKernel& kernel, const ObservationRecord& z,
                    KbProducts* products) {
    const int n = sys.n, ny = sys.ny;
    if (fs.m.size() != n || z.z.size() != ny)
        throw std::invalid_argument("kb_step: dimension mismatch");

    KbProducts local;
    KbProducts& pr = products ? *products : local;

    pr.m_pred.noalias() = kernel.Phi * fs.m;
    pr.S_pred.noalias() = kernel.Phi * fs.S * kernel.Phi.transpose();
    pr.S_pred += kernel.W;
    pr.S_pred = 0.5 * (pr.S_pred + pr.S_pred.transpose().eval());

    const Vec r_rate = sys.rdiag / kernel.dt;
    pr.innovation = z.z - sys.C * pr.m_pred - sys.bias;
    pr.innovation_cov.noalias() = sys.C * pr.S_pred * sys.C.transpose();
    pr.innovation_cov += Mat(r_rate.asDiagonal());
    pr.innovation_ldlt.compute(pr.innovation_cov);
    if (pr.innovation_ldlt.info() != Eigen::Success || !pr.innovation_ldlt.isPositive() ||
        pr.innovation_ldlt.vectorD().minCoeff() <= 0.0)
        throw std::runtime_error("kb_step: innovation covariance is not positive definite");

    pr.gain = pr.innovation_ldlt.solve(sys.C * pr.S_pred).transpose();
    pr.closed_loop = Mat::Identity(n, n) - pr.gain * sys.C;

    FilterState out;
    out.t = z.t;
    out.m = pr.m_pred + pr.gain * pr.innovation;
    out.S.noalias() = pr.closed_loop * pr.S_pred * pr.closed_loop.transpose();
    out.S.noalias() += pr.gain * r_rate.asDiagonal() * pr.gain.transpose();
    out.S = 0.5 * (out.S + out.S.transpose().eval());
    return out;
}

Mat solve_lyapunov(const Mat& F, const Mat& W) {
    if (F.rows() != F.cols() || W.rows() != W.cols() || F.rows() != W.rows())
        throw std::invalid_argument("solve_lyapunov: dimension mismatch");
    require_stable(F, "solve_lyapunov");
    Mat K = F.rows() <= 64 ? lyapunov_kron(F, W) : lyapunov_schur(F, W);
    return 0.5 * (K + K.transpose().eval());
}

double are_residual(const SystemMatrices& sys, const Mat& S) {
    const Mat sr = sys.C.transpose() * sys.rdiag.cwiseInverse().asDiagonal() * sys.C;
    const Mat res = sys.A * S + S * sys.A.transpose() + sys.bqb() - S * sr * S;
    return res.norm();
}

SteadyState solve_are(const SystemMatrices& sys, const AreOptions& opts) {
    const int n = sys.n;
    SteadyState out;
    Mat S = opts.init.size() > 0 ? opts.init : Mat::Zero(n, n);

    if (!opts.skip_dre) {
        const TransitionKernel kernel = make_kernel(sys, opts.dre_dt, false);
        const Vec r_rate = sys.rdiag / opts.dre_dt;
        Mat S_pred(n, n), gain, closed;
        const Mat eye = Mat::Identity(n, n);
        for (int it = 0; it < opts.dre_max_iter; ++it) {
            S_pred.noalias() = kernel.Phi * S * kernel.Phi.transpose();
            S_pred += kernel.W;
            Mat inn = sys.C * S_pred * sys.C.transpose();
            inn += Mat(r_rate.asDiagonal());
            gain = inn.ldlt().solve(sys.C * S_pred).transpose();
            closed = eye - gain * sys.C;
            Mat S_next = closed * S_pred * closed.transpose();
            S_next.noalias() += gain * r_rate.asDiagonal() * gain.transpose();
            S_next = 0.5 * (S_next + S_next.transpose().eval());
            const double delta = (S_next - S).norm();
            S = std::move(S_next);
            out.dre_iterations = it + 1;
            if (delta < opts.dre_tol * (1.0 + S.norm())) break;
        }
    }

    // Newton (Kleinman) refinement on the continuous-time equation.
    const Mat sr = sys.C.transpose() * sys.rdiag.cwiseInverse().asDiagonal() * sys.C;
    const Mat bqb = sys.bqb();
    out.residual = are_residual(sys, S);
    for (int it = 0; it < opts.newton_max_iter &&
                     out.residual >= opts.residual_tol * (1.0 + S.norm());
         ++it) {
        const Mat F = sys.A - S * sr;
        S = solve_lyapunov(F, bqb + S * sr * S);
        S = 0.5 * (S + S.transpose().eval());
        out.newton_iterations = it + 1;
        out.residual = are_residual(sys, S);
    }
    if (out.residual >= opts.residual_tol * (1.0 + S.norm())) {
        std::ostringstream msg;
        msg << "solve_are: no convergence, residual " << out.residual << " after "
            << out.dre_iterations << " fixed-point and " << out.newton_iterations
            << " Newton iterations";
        throw std::runtime_error(msg.str());
    }
    out.Sinf = std::move(S);
    return out;
}

double asymptotic_objective(const ModelParams& p, const SensorArray& sensors,
                            const WaveNumberSet& ks, const MSpec& mspec, const AreOptions& opts) {
    const SystemMatrices sys = assemble_system(p, sensors, ks, std::nullopt, mspec);
    const SteadyState ss = solve_are(sys, opts);
    return (sys.M * ss.Sinf).trace();
}

} // namespace spde
