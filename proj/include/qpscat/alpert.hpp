#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace qpscat {

/// 16th-order hybrid Gauss-trapezoidal correction for kernels of the form
/// phi(s) log|s - t| + psi(s) on an equispaced grid.
///
/// The h-scaled rule replaces the trapezoid sum within `a` grid spacings of
/// the singularity by 15 auxiliary nodes on each side:
///
///   int_0^inf f ~= h * sum_k w_k f(x_k h) + h * sum_{i>=a} f(i h)
///
/// Nodes and weights satisfy the Hurwitz-zeta moment conditions
///   sum w_k x_k^p = -zeta(-p, a),  sum w_k x_k^p ln x_k = zeta'(-p, a)
/// for p = 0..14, solved to 100+ digits and frozen here.
struct AlpertLog16 {
    static constexpr int a = 10;       // excluded half-bandwidth (grid spacings)
    static constexpr int n_aux = 15;   // auxiliary nodes per side

    static constexpr std::array<double, 15> nodes = {
        8.37152983201411327e-04,
        1.23938272554263698e-02,
        6.00929078573946777e-02,
        1.80599124960192793e-01,
        4.14283259902803088e-01,
        7.96474773111242984e-01,
        1.34899388246705881e+00,
        2.07347166026439503e+00,
        2.94790493903149380e+00,
        3.92812925224861175e+00,
        4.95720308656311169e+00,
        5.98636011397749422e+00,
        6.99795770479151928e+00,
        7.99988875752462240e+00,
        8.99999875430611960e+00,
    };

    static constexpr std::array<double, 15> weights = {
        3.19091908662623441e-03,
        2.42362138042633802e-02,
        7.74013552165308793e-02,
        1.70488942028636909e-01,
        3.02912347851130861e-01,
        4.65222083491461665e-01,
        6.40148963709676837e-01,
        8.05121294618106115e-01,
        9.36241194569864654e-01,
        1.01435977536907517e+00,
        1.03516772105365681e+00,
        1.02030862498461037e+00,
        1.00479839744151398e+00,
        1.00039501735230927e+00,
        1.00000714942253686e+00,
    };
};

/// Order of the local Lagrange interpolation carrying density values from
/// the regular grid to the auxiliary nodes.
inline constexpr int alpert_interp_order = 16;

/// Minimum node count for a periodic rule so the correction stencil
/// (band + interpolation reach) never wraps a full period.
inline constexpr int alpert_min_nodes =
    2 * (AlpertLog16::a + alpert_interp_order / 2) + 2;

/// Lagrange weights for interpolation to abscissa xi (in grid-index units,
/// relative to the target node) from regular nodes at integer offsets
/// t0, t0+1, ..., t0+order-1.
inline std::array<double, alpert_interp_order> lagrange_weights(double xi, int t0) {
    std::array<double, alpert_interp_order> w{};
    for (int r = 0; r < alpert_interp_order; ++r) {
        double num = 1.0, den = 1.0;
        const int tr = t0 + r;
        for (int q = 0; q < alpert_interp_order; ++q) {
            if (q == r) continue;
            const int tq = t0 + q;
            num *= xi - tq;
            den *= double(tr - tq);
        }
        w[r] = num / den;
    }
    return w;
}

/// Centered stencil start for an auxiliary node at offset xi.
inline int alpert_stencil_start(double xi) {
    return int(std::floor(xi)) - alpert_interp_order / 2 + 1;
}

} // namespace qpscat
