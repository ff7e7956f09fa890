#include "spde/tangent.hpp"

#include <stdexcept>

namespace spde {

TangentState TangentState::zero(int n, int ndirs) {
    TangentState ts;
    ts.dm.assign(ndirs, Vec::Zero(n));
    ts.dS.assign(ndirs, Mat::Zero(n, n));
    return ts;
}

TangentState tangent_step(const FilterState& fs_prev, const TangentState& ts,
                          const SystemMatrices& sys, const TransitionKernel& kernel,
                          const KbProducts& pr, TangentProducts* products) {
    const int n = sys.n, ny = sys.ny;
    const int nd = sys.dir_count();
    if (ts.size() != nd) throw std::invalid_argument("tangent_step: direction count mismatch");
    if (static_cast<int>(kernel.dPhi.size()) != nd)
        throw std::invalid_argument("tangent_step: kernel built without derivative stacks");

    TangentState out = TangentState::zero(n, nd);
    if (products) {
        products->dm_pred.assign(nd, Vec::Zero(n));
        products->dS_pred.assign(nd, Mat::Zero(n, n));
        products->dInnovation_cov.assign(nd, Mat::Zero(ny, ny));
    }

    const Vec r_rate = sys.rdiag / kernel.dt;
    const Mat& K = pr.gain;
    const Mat& L = pr.closed_loop;
    const Mat S_pred_Ct = pr.S_pred * sys.C.transpose(); // n x ny
    const Mat LS_pred = L * pr.S_pred;                   // n x n
    const Mat CS_pred = sys.C * pr.S_pred;               // ny x n
    const Mat K_rr = K * r_rate.asDiagonal();            // n x ny
    const Mat S_phiT = fs_prev.S * kernel.Phi.transpose();

    for (int d = 0; d < nd; ++d) {
        const Mat& dC = sys.dC[d];
        const Vec& dR = sys.dRdiag[d];
        const bool has_dC = !dC.isZero(0.0);
        const bool has_dR = !dR.isZero(0.0);

        // Predict.
        Vec dm_pred = kernel.dPhi[d] * fs_prev.m + kernel.Phi * ts.dm[d];
        Mat dS_pred = kernel.dPhi[d] * S_phiT;
        dS_pred += dS_pred.transpose().eval();
        dS_pred.noalias() += kernel.Phi * ts.dS[d] * kernel.Phi.transpose();
        dS_pred += kernel.dW[d];
        dS_pred = 0.5 * (dS_pred + dS_pred.transpose().eval());

        // Update.
        Mat dSig = sys.C * dS_pred * sys.C.transpose();
        if (has_dC) {
            const Mat t = dC * S_pred_Ct;
            dSig += t + t.transpose();
        }
        if (has_dR) dSig += Mat((dR / kernel.dt).asDiagonal());

        Mat dK_lhs = dS_pred * sys.C.transpose(); // n x ny
        if (has_dC) dK_lhs.noalias() += pr.S_pred * dC.transpose();
        dK_lhs.noalias() -= K * dSig;
        const Mat dK = pr.innovation_ldlt.solve(dK_lhs.transpose()).transpose();

        Vec dnu = -(sys.C * dm_pred);
        if (has_dC) dnu.noalias() -= dC * pr.m_pred;
        if (!sys.dBias[d].isZero(0.0)) dnu -= sys.dBias[d];

        out.dm[d] = dm_pred + dK * pr.innovation + K * dnu;

        // Joseph-form covariance derivative. dL = -(dK C + K dC).
        Mat dS = dK * (CS_pred * L.transpose());
        if (has_dC) dS.noalias() += K * (dC * LS_pred.transpose());
        dS = -(dS + dS.transpose().eval());
        dS.noalias() += L * dS_pred * L.transpose();
        {
            const Mat t = dK * K_rr.transpose();
            dS += t + t.transpose();
        }
        if (has_dR) dS.noalias() += K * (dR / kernel.dt).asDiagonal() * K.transpose();
        out.dS[d] = 0.5 * (dS + dS.transpose().eval());

        if (products) {
            products->dm_pred[d] = std::move(dm_pred);
            products->dS_pred[d] = std::move(dS_pred);
            products->dInnovation_cov[d] = std::move(dSig);
        }
    }
    return out;
}

Vec placement_gradient(const TangentState& ts, const SystemMatrices& sys) {
    std::vector<double> grads;
    for (int d = 0; d < sys.dir_count(); ++d) {
        if (sys.dirs[d].kind != Direction::Kind::SensorCoord) continue;
        grads.push_back((sys.M * ts.dS[d]).trace());
    }
    return Eigen::Map<Vec>(grads.data(), static_cast<Eigen::Index>(grads.size()));
}

} // namespace spde
