#pragma once

#include <vector>

#include "qpscat/errors.hpp"
#include "qpscat/types.hpp"

namespace qpscat {

/// Flat multilayer description for the scattering-matrix reference solver.
struct PlanarStack {
    std::vector<double> heights;     // y_1 > y_2 > ... > y_I
    std::vector<double> wavenumbers; // k_1 .. k_{I+1}
};

struct PlanarResult {
    cd r, t;          // order-0 amplitudes referenced to y_U (r) and y_D (t)
    bool degenerate = false;
};

/// Order-0 reflection/transmission of a flat stack by stable scattering-matrix
/// composition: the reflection ratio is propagated bottom-up with decaying
/// interlayer phases only, so deeply evanescent stacks cannot overflow.
/// Amplitudes use the same phase conventions as the grating solver's
/// Rayleigh-Bloch expansions:  u_ref = r e^{i beta_1 (y - y_U)},
/// u_trans = t e^{i beta_{I+1} (y_D - y)}  for a unit incident plane wave.
inline PlanarResult planar_solve(const PlanarStack& stack, double omega, double theta,
                                 double y_U, double y_D) {
    (void)omega; // wavenumbers are supplied directly
    const int I = int(stack.heights.size());
    if (I < 1 || int(stack.wavenumbers.size()) != I + 1)
        throw UsageError("planar_solve: need I heights and I+1 wavenumbers");
    for (int m = 0; m + 1 < I; ++m)
        if (!(stack.heights[m] > stack.heights[m + 1]))
            throw GeometryError("planar_solve: heights must be strictly decreasing");

    const double kap = stack.wavenumbers.front() * std::cos(theta);
    std::vector<cd> beta(I + 1);
    PlanarResult out;
    for (int j = 0; j <= I; ++j) {
        const double t = stack.wavenumbers[j] * stack.wavenumbers[j] - kap * kap;
        beta[j] = t >= 0.0 ? cd(std::sqrt(t), 0.0) : cd(0.0, std::sqrt(-t));
        if (std::abs(beta[j]) < 1e-14 * stack.wavenumbers[j]) {
            out.degenerate = true;
            return out;
        }
    }

    // bottom-up reflection recursion: rho = (up/down amplitude ratio) at each
    // interface height; T accumulates the down-going transmission factor
    cd rho = 0.0;
    std::vector<cd> rho_at(I); // ratio just below nothing: stored per interface
    for (int m = I - 1; m >= 0; --m) {
        const cd bm = beta[m], bb = beta[m + 1];
        if (m < I - 1) {
            const double dy = stack.heights[m] - stack.heights[m + 1]; // > 0
            rho *= std::exp(2.0 * iu * beta[m + 1] * dy);              // decaying
        }
        const cd den = bm * (1.0 + rho) + bb * (1.0 - rho);
        rho_at[m] = (bm * (1.0 + rho) - bb * (1.0 - rho)) / den;
        rho = rho_at[m];
    }

    // forward pass for the transmission amplitude (all factors decaying)
    cd Adown = std::exp(-iu * beta[0] * stack.heights[0]); // incident at y_1
    cd rho_below = 0.0;
    for (int m = 0; m < I; ++m) {
        // reflection ratio of the stack strictly below interface m, at y_m
        cd r_next = 0.0;
        if (m + 1 < I) {
            r_next = rho_at[m + 1] * std::exp(2.0 * iu * beta[m + 1] *
                                              (stack.heights[m] - stack.heights[m + 1]));
        }
        rho_below = r_next;
        const cd den = beta[m] * (1.0 + rho_below) + beta[m + 1] * (1.0 - rho_below);
        const cd t_loc = 2.0 * beta[m] / den;
        Adown *= t_loc;
        if (m + 1 < I)
            Adown *= std::exp(iu * beta[m + 1] * (stack.heights[m] - stack.heights[m + 1]));
    }

    // reflected wave: b_1 e^{i beta_1 y} with b_1 = rho_at[0] e^{-2 i beta_1 y_1}
    out.r = rho_at[0] * std::exp(iu * beta[0] * (y_U - 2.0 * stack.heights[0]));
    // transmitted wave: Adown e^{-i beta_{I+1}(y - y_I)} => reference to y_D
    out.t = Adown * std::exp(-iu * beta[I] * (y_D - stack.heights[I - 1]));
    return out;
}

} // namespace qpscat
