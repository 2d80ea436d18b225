#pragma once

#include <vector>

#include "qpscat/periodize.hpp"

namespace qpscat {

/// Solved state: density samples per interface, proxy strengths per layer,
/// Bragg amplitudes, and the accuracy certificates filled by postprocessing.
struct Solution {
    std::vector<Vec> eta; // per interface, tau samples then sigma samples
    std::vector<Vec> c;   // per layer, P proxy strengths
    Vec aU, aD;           // 2K+1 Bragg amplitudes each
    double flux_error = 0.0;
    double max_lsq_residual = 0.0;
};

/// Direct block-tridiagonal LU solve of the periodized density system.
/// Diagonal factors are LU decompositions reused for the two products per
/// sweep step; a numerically singular factor names the offending layer
/// (resonance / guided-mode parameters).
inline std::vector<Vec> block_lu_solve(const PeriodizedSystem& ps) {
    const int I = ps.I;
    std::vector<Eigen::PartialPivLU<Mat>> lus(I);
    std::vector<Vec> fb(I);
    for (int j = 0; j < I; ++j) fb[j] = Vec::Zero(2 * ps.N[j]);
    fb[0] = ps.f;

    Mat Atilde = ps.Ap_diag[0];
    for (int j = 0; j < I; ++j) {
        if (j > 0) {
            Atilde = ps.Ap_diag[j] - ps.Ap_sub[j - 1] * lus[j - 1].solve(ps.Ap_super[j - 1]);
            fb[j] -= ps.Ap_sub[j - 1] * lus[j - 1].solve(fb[j - 1]);
        }
        lus[j].compute(Atilde);
        if (!(lus[j].rcond() > 1e-15))
            throw SolverError("singular diagonal factor (resonant parameters?) at layer " +
                                  std::to_string(j + 1),
                              j + 1);
    }
    std::vector<Vec> eta(I);
    eta[I - 1] = lus[I - 1].solve(fb[I - 1]);
    for (int j = I - 2; j >= 0; --j) eta[j] = lus[j].solve(fb[j] - ps.Ap_super[j] * eta[j + 1]);
    return eta;
}

/// Recover proxy strengths and Bragg amplitudes from the cached
/// least-squares products.
inline void recover_aux(const PeriodizedSystem& ps, const std::vector<Vec>& eta, Solution& sol) {
    const int I = ps.I;
    sol.eta = eta;
    sol.c.resize(I + 1);

    const Vec x_first = -(ps.X_first * eta.front());
    sol.c[0] = x_first.head(ps.P);
    sol.aU = x_first.tail(2 * ps.K + 1);
    for (int i = 1; i <= I - 1; ++i)
        sol.c[i] = -(ps.X_above[i] * eta[i - 1] + ps.X_self[i] * eta[i]);
    const Vec x_last = -(ps.X_last * eta.back());
    sol.c[I] = x_last.head(ps.P);
    sol.aD = x_last.tail(2 * ps.K + 1);

    sol.max_lsq_residual = 0.0;
    for (double r : ps.lsq_residual) sol.max_lsq_residual = std::max(sol.max_lsq_residual, r);
}

/// Convenience: periodize, solve, recover.
inline Solution solve_periodized(const BlockSystem& sys) {
    const PeriodizedSystem ps = schur_complement(sys);
    Solution sol;
    recover_aux(ps, block_lu_solve(ps), sol);
    return sol;
}

} // namespace qpscat
