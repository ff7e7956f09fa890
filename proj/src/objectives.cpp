#include "spde/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace spde {

double loglik_increment(const KbProducts& pr, const SystemMatrices& sys, double dt) {
    const Vec y_hat = pr.m_pred.transpose() * sys.C.transpose() + sys.bias.transpose();
    const Vec rinv_y = y_hat.cwiseQuotient(sys.rdiag);
    const Vec z = pr.innovation + y_hat;
    return rinv_y.dot(z) * dt - 0.5 * rinv_y.dot(y_hat) * dt;
}

double predictive_loglik_increment(const KbProducts& pr) {
    const double logdet = pr.innovation_ldlt.vectorD().array().log().sum();
    const double quad = pr.innovation.dot(pr.innovation_ldlt.solve(pr.innovation));
    return -0.5 * (logdet + quad);
}

Vec rml_gradient_increment(const KbProducts& pr, const TangentProducts& tpr,
                           const SystemMatrices& sys, double dt) {
    std::vector<double> grads;
    const Vec rinv_nu = pr.innovation.cwiseQuotient(sys.rdiag);
    for (int d = 0; d < sys.dir_count(); ++d) {
        const Direction& dir = sys.dirs[d];
        if (dir.kind != Direction::Kind::Theta) continue;
        Vec dy = sys.C * tpr.dm_pred[d];
        if (!sys.dC[d].isZero(0.0)) dy.noalias() += sys.dC[d] * pr.m_pred;
        if (!sys.dBias[d].isZero(0.0)) dy += sys.dBias[d];

        if (dir.theta.id == ParamId::Tau2) {
            // Exact derivative of the predictive log-likelihood increment.
            const Vec sol_nu = pr.innovation_ldlt.solve(pr.innovation);
            const Mat& dSig = tpr.dInnovation_cov[d];
            const double trace_term = pr.innovation_ldlt.solve(dSig).trace();
            grads.push_back(sol_nu.dot(dy) + 0.5 * sol_nu.dot(dSig * sol_nu) -
                            0.5 * trace_term);
        } else {
            grads.push_back(dy.dot(rinv_nu) * dt);
        }
    }
    return Eigen::Map<Vec>(grads.data(), static_cast<Eigen::Index>(grads.size()));
}

double placement_objective_increment(const Mat& S, const Mat& M, double dt) {
    return (M * S).trace() * dt;
}

GrowthDiagnostics growth_diagnostics(const Vec& u_coeffs, const FilterState& fs,
                                     const TangentState& ts, const SystemMatrices& sys) {
    GrowthDiagnostics g;
    const Vec cu = sys.C * u_coeffs;
    const Vec cm = sys.C * fs.m;
    g.varphi = cm;
    g.zeta_fn = cm.dot(cu - 0.5 * cm);
    const Vec rinv_err = (cu - cm).cwiseQuotient(sys.rdiag);

    int n_theta = 0;
    for (const auto& d : sys.dirs)
        if (d.kind == Direction::Kind::Theta) ++n_theta;
    g.eta.resize(sys.ny, n_theta);
    g.psi.resize(n_theta);
    int j = 0;
    for (int d = 0; d < sys.dir_count(); ++d) {
        if (sys.dirs[d].kind != Direction::Kind::Theta) continue;
        const Vec cdm = sys.C * ts.dm[d];
        g.eta.col(j) = cdm;
        g.psi[j] = cdm.dot(rinv_err);
        ++j;
    }
    g.iota = (sys.M * fs.S).trace();
    g.phi = placement_gradient(ts, sys);
    return g;
}

} // namespace spde
