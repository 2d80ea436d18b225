#pragma once

#include <vector>

#include "qpscat/assembly.hpp"

namespace qpscat {

/// Minimum-residual least-squares solve of Q X = RHS through a rank-revealing
/// complete orthogonal decomposition. Never fails on ill-conditioning: the
/// proxy systems are exponentially ill-conditioned by construction, and for
/// numerically rank-deficient Q (Wood anomalies zero a W row) the solution is
/// the minimum-norm residual minimizer over the detected numerical rank.
/// Base relative rank cutoff for the periodization least-squares solves.
inline double& qsolve_threshold() {
    static double t = 1e-14;
    return t;
}

/// Solutions larger than this trigger rank-cutoff escalation: small-norm
/// residual minimizers exist by construction (the far-field contribution is
/// bounded), so a huge X only means near-null directions leaked in.
inline constexpr double qsolve_norm_cap = 1e3;

inline Mat qsolve(const Mat& Q, const Mat& rhs) {
    if (Q.rows() < Q.cols())
        throw UsageError("qsolve: Q must have at least as many rows as columns");
    if (Q.rows() != rhs.rows()) throw UsageError("qsolve: dimension mismatch");
    const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    Mat X;
    for (double th = qsolve_threshold(); th <= 1.1e-10; th *= 10.0) {
        Eigen::CompleteOrthogonalDecomposition<Mat> cod;
        cod.setThreshold(th);
        cod.compute(Q);
        X = cod.solve(rhs);
        if (X.cwiseAbs().maxCoeff() <= qsolve_norm_cap * scale) break;
    }
    return X;
}

/// The block-tridiagonal density system left after eliminating proxy and
/// Bragg unknowns, plus the cached least-squares products needed to recover
/// them.
struct PeriodizedSystem {
    int I = 0, P = 0, K = 0;
    std::vector<Mat> Ap_diag, Ap_super, Ap_sub;
    std::vector<int> N;

    Mat X_first;              // (P + 2K+1) x 2N_0
    std::vector<Mat> X_above; // interior layers i = 1..I-1
    std::vector<Mat> X_self;
    Mat X_last;               // (P + 2K+1) x 2N_{I-1}
    std::vector<double> lsq_residual; // per layer, relative

    Vec f;
};

/// Alpha-pure part of the elimination: the interior-layer least-squares
/// products and every A' contribution that does not involve the corner
/// blocks. Reused across incidence angles that share the Bloch phase.
struct InteriorSchur {
    std::vector<Mat> Ap_diag, Ap_super, Ap_sub; // corner diagonals still partial
    std::vector<Mat> X_above, X_self;
    std::vector<double> lsq_residual; // interior layers
};

inline InteriorSchur schur_interior(const BlockSystem& sys) {
    if (sys.P <= 0)
        throw ConfigError("periodization needs P > 0 proxy points per layer");
    const int I = sys.I;
    InteriorSchur s;
    s.Ap_diag = sys.A_diag;
    s.Ap_super = sys.A_super;
    s.Ap_sub = sys.A_sub;
    s.X_above.resize(I);
    s.X_self.resize(I);
    s.lsq_residual.assign(I + 1, 0.0);
    // one stacked least-squares solve per interior layer, applied to the four
    // A' blocks its products touch
    for (int i = 1; i <= I - 1; ++i) {
        Mat rhs(sys.Q[i].rows(), sys.C_above[i].cols() + sys.C_self[i].cols());
        rhs << sys.C_above[i], sys.C_self[i];
        Mat X = qsolve(sys.Q[i], rhs);
        s.lsq_residual[i] = (sys.Q[i] * X - rhs).norm() / rhs.norm();
        s.X_above[i] = X.leftCols(sys.C_above[i].cols());
        s.X_self[i] = X.rightCols(sys.C_self[i].cols());

        s.Ap_diag[i] -= sys.B_self[i] * s.X_self[i];
        s.Ap_diag[i - 1] -= sys.B_below[i - 1] * s.X_above[i];
        s.Ap_super[i - 1] -= sys.B_below[i - 1] * s.X_self[i];
        s.Ap_sub[i - 1] -= sys.B_self[i] * s.X_above[i];
    }
    return s;
}

/// Corner eliminations (layers 1 and I+1 in paper numbering); these involve
/// the Rayleigh-Bloch columns and are recomputed per incidence angle.
inline PeriodizedSystem schur_corners(const InteriorSchur& interior, const BlockSystem& sys) {
    PeriodizedSystem ps;
    ps.I = sys.I;
    ps.P = sys.P;
    ps.K = sys.K;
    ps.N = sys.N;
    ps.Ap_diag = interior.Ap_diag;
    ps.Ap_super = interior.Ap_super;
    ps.Ap_sub = interior.Ap_sub;
    ps.X_above = interior.X_above;
    ps.X_self = interior.X_self;
    ps.lsq_residual = interior.lsq_residual;
    ps.f = sys.f;

    ps.X_first = qsolve(sys.Qp_first, sys.Cp_first);
    ps.lsq_residual.front() =
        (sys.Qp_first * ps.X_first - sys.Cp_first).norm() / sys.Cp_first.norm();
    ps.Ap_diag.front() -= sys.B_self.front() * ps.X_first.topRows(sys.P);

    ps.X_last = qsolve(sys.Qp_last, sys.Cp_last);
    ps.lsq_residual.back() = (sys.Qp_last * ps.X_last - sys.Cp_last).norm() / sys.Cp_last.norm();
    ps.Ap_diag.back() -= sys.B_below.back() * ps.X_last.topRows(sys.P);
    return ps;
}

/// Full elimination: I+1 independent least-squares Schur complements.
inline PeriodizedSystem schur_complement(const BlockSystem& sys) {
    return schur_corners(schur_interior(sys), sys);
}

} // namespace qpscat
