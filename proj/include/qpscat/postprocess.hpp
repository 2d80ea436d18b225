#pragma once

#include <optional>
#include <vector>

#include "qpscat/tridiag.hpp"

namespace qpscat {

// ---------------------------------------------------------------------------
// Point classification and field evaluation
// ---------------------------------------------------------------------------

enum class Region { AboveU, Layer, BelowD };

struct FieldSample {
    Vec2 point;
    Region region = Region::Layer;
    int layer = 0; // valid when region == Layer (0-based, top layer = 0)
    cd u_scattered{0.0, 0.0};
    cd u_total{0.0, 0.0};
};

/// Classify a point against the interfaces; throws GeometryError when the
/// point lies on an interface (to evaluation accuracy).
inline std::pair<Region, int> classify_point(const LayerStack& stack, const StackGeometry& geom,
                                             Vec2 p) {
    if (p.y >= geom.frame.y_U) return {Region::AboveU, 0};
    if (p.y <= geom.frame.y_D) return {Region::BelowD, int(geom.interfaces.size())};
    const int I = int(geom.interfaces.size());
    for (int j = 0; j < I; ++j) {
        const double yj = detail::spec_y_of_x(stack.interfaces[j], stack.d, p.x);
        if (std::abs(p.y - yj) < 1e-12 * stack.d)
            throw GeometryError("field point lies on interface " + std::to_string(j + 1));
        if (p.y > yj) return {Region::Layer, j};
    }
    return {Region::Layer, I};
}

namespace detail {

/// Scattered field of the layer representation at points already inside the
/// central cell; no quasi-periodic remapping.
inline void eval_layer_representation(const ScatteringProblem& p, const Solution& sol, int layer,
                                      const std::vector<Vec2>& pts, cd* out) {
    const int I = p.n_interfaces();
    TargetSet t;
    t.points = pts;
    t.normals.assign(pts.size(), Vec2{0.0, 1.0});
    Eigen::Map<Vec> u(out, pts.size());
    u.setZero();
    const double kk = p.k[layer];
    for (int which = 0; which < 2; ++which) {
        const int j = layer - 1 + which; // interface above (j = layer-1), below (j = layer)
        if (j < 0 || j >= I) continue;
        const auto& quad = p.geom->interfaces[j].quad;
        const int n = quad.total();
        Mat D = neighbor_sum_block(KernelKind::D, kk, t, quad, p.alpha).entries;
        Mat S = neighbor_sum_block(KernelKind::S, kk, t, quad, p.alpha).entries;
        u += D * sol.eta[j].head(n) + S * sol.eta[j].tail(n);
    }
    u += proxy_block(p.geom->proxies[layer], kk, t, false) * sol.c[layer];
}

inline cd rb_sum(const ScatteringProblem& p, const Solution& sol, Vec2 pt, bool upper) {
    cd u = 0.0;
    for (int n = -p.K; n <= p.K; ++n) {
        const cd a = upper ? sol.aU(n + p.K) : sol.aD(n + p.K);
        const cd kv = upper ? p.kU(n) : p.kD(n);
        const double yref = upper ? p.geom->frame.y_U : p.geom->frame.y_D;
        const double dy = upper ? pt.y - yref : yref - pt.y;
        u += a * std::exp(iu * p.kappa(n) * pt.x) * std::exp(iu * kv * dy);
    }
    return u;
}

} // namespace detail

/// Scattered and total field anywhere in the plane. Points within a few node
/// spacings of an interface are evaluated with degraded accuracy (plain
/// Nystrom sums; no close-evaluation correction).
inline std::vector<FieldSample> evaluate_field(const Solution& sol, const ScatteringProblem& p,
                                               const std::vector<Vec2>& points) {
    const double d = p.d();
    std::vector<FieldSample> out(points.size());
    // group by (cell shift, layer) for batched kernel evaluation
    std::vector<int> cell(points.size());
    std::vector<std::pair<Region, int>> cls(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int m = int(std::floor((points[i].x + 0.5 * d) / d));
        cell[i] = m;
        const Vec2 q{points[i].x - m * d, points[i].y};
        cls[i] = classify_point(*p.stack, *p.geom, q);
        out[i].point = points[i];
        out[i].region = cls[i].first;
        out[i].layer = cls[i].second;
    }
    const int I = p.n_interfaces();
    for (int layer = 0; layer <= I; ++layer) {
        std::vector<Vec2> pts;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (cls[i].first == Region::Layer && cls[i].second == layer) {
                pts.push_back({points[i].x - cell[i] * d, points[i].y});
                idx.push_back(i);
            }
        if (pts.empty()) continue;
        std::vector<cd> u(pts.size());
        detail::eval_layer_representation(p, sol, layer, pts, u.data());
        for (std::size_t t = 0; t < idx.size(); ++t)
            out[idx[t]].u_scattered = std::pow(p.alpha, cell[idx[t]]) * u[t];
    }
    const Vec2 kvec{p.k.front() * std::cos(p.theta), p.k.front() * std::sin(p.theta)};
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& s = out[i];
        if (s.region != Region::Layer)
            s.u_scattered = detail::rb_sum(p, sol, s.point, s.region == Region::AboveU);
        s.u_total = s.u_scattered;
        if (s.region == Region::AboveU || (s.region == Region::Layer && s.layer == 0))
            s.u_total += std::exp(iu * (kvec.x * s.point.x + kvec.y * s.point.y));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Flux and spectra
// ---------------------------------------------------------------------------

/// Orders with vertical wavenumber this far above zero (relative to the layer
/// wavenumber) count as propagating; exact-Wood grazing orders carry no power
/// and are excluded robustly against rounding of kappa_n = +-k.
inline constexpr double propagating_tol = 1e-5;

inline double flux_error(const Solution& sol, const ScatteringProblem& p) {
    const double kref = std::max(p.k.front(), p.k.back());
    double F = 0.0;
    for (int n = -p.K; n <= p.K; ++n) {
        const cd ku = p.kU(n), kd = p.kD(n);
        if (ku.imag() == 0.0 && ku.real() > propagating_tol * kref)
            F += ku.real() * std::norm(sol.aU(n + p.K));
        if (kd.imag() == 0.0 && kd.real() > propagating_tol * kref)
            F += kd.real() * std::norm(sol.aD(n + p.K));
    }
    return (F - p.incident_flux()) / p.incident_flux();
}

struct OrderAmplitude {
    int n = 0;
    double kappa = 0.0;
    cd k_vert;
    cd a;
    bool propagating = false;
};

struct SpectrumRow {
    double theta = 0.0;
    double R = 0.0, T = 0.0;
    double flux_error = 0.0;
    int alpha_group = -1;
    std::vector<OrderAmplitude> up, down;
};

inline SpectrumRow reflection_transmission(const Solution& sol, const ScatteringProblem& p) {
    SpectrumRow row;
    row.theta = p.theta;
    const double kref = std::max(p.k.front(), p.k.back());
    const double Finc = p.incident_flux();
    for (int n = -p.K; n <= p.K; ++n) {
        OrderAmplitude u{n, p.kappa(n), p.kU(n), sol.aU(n + p.K), false};
        u.propagating = u.k_vert.imag() == 0.0 && u.k_vert.real() > propagating_tol * kref;
        if (u.propagating) row.R += u.k_vert.real() * std::norm(u.a) / Finc;
        OrderAmplitude dn{n, p.kappa(n), p.kD(n), sol.aD(n + p.K), false};
        dn.propagating = dn.k_vert.imag() == 0.0 && dn.k_vert.real() > propagating_tol * kref;
        if (dn.propagating) row.T += dn.k_vert.real() * std::norm(dn.a) / Finc;
        row.up.push_back(u);
        row.down.push_back(dn);
    }
    row.flux_error = flux_error(sol, p);
    return row;
}

// ---------------------------------------------------------------------------
// Post-solve residual suite
// ---------------------------------------------------------------------------

struct ResidualReport {
    double wall_qp = 0.0;       // max |alpha^{-1} u(R) - u(L)| at mid-wall points
    double radiation = 0.0;     // max |representation - RB sum| on U and D
    double interface = 0.0;     // max BIE row residual at off-node points
};

namespace detail {

inline cd eval_raw(const ScatteringProblem& p, const Solution& sol, int layer, Vec2 pt) {
    cd u;
    eval_layer_representation(p, sol, layer, {pt}, &u);
    return u;
}

/// Trigonometric (quasi-periodic aware) upsampling of a smooth-interface
/// density to a refined midpoint grid.
inline Vec upsample_smooth(const Vec& vals, double w, int fine_factor) {
    const int N = int(vals.size());
    const int NF = fine_factor * N;
    // periodic part psi_j = vals_j e^{-i w s_j / (2 pi)}
    Vec psi(N);
    for (int j = 0; j < N; ++j) {
        const double s = 2.0 * pi * (j + 0.5) / N;
        psi(j) = vals(j) * std::exp(-iu * w * s / (2.0 * pi));
    }
    // DFT coefficients on the shifted grid
    Vec coef(N);
    for (int m = 0; m < N; ++m) {
        const int mm = m <= N / 2 ? m : m - N; // signed frequency
        cd acc = 0.0;
        for (int j = 0; j < N; ++j) {
            const double s = 2.0 * pi * (j + 0.5) / N;
            acc += psi(j) * std::exp(-iu * double(mm) * s);
        }
        coef(m) = acc / double(N);
    }
    Vec out(NF);
    for (int j = 0; j < NF; ++j) {
        const double s = 2.0 * pi * (j + 0.5) / NF;
        cd acc = 0.0;
        for (int m = 0; m < N; ++m) {
            const int mm = m <= N / 2 ? m : m - N;
            acc += coef(m) * std::exp(iu * double(mm) * s);
        }
        out(j) = acc * std::exp(iu * w * s / (2.0 * pi));
    }
    return out;
}

/// Per-segment local Lagrange upsampling for graded (open-arc) densities.
inline Vec upsample_segmented(const Vec& vals, const InterfaceQuadrature& quad, int fine_factor) {
    constexpr int ord = 12;
    Vec out(fine_factor * quad.total());
    int fine_off = 0;
    for (const auto& seg : quad.segments) {
        const int n = seg.n, nf = fine_factor * n;
        for (int j = 0; j < nf; ++j) {
            const double sx = (j + 0.5) / fine_factor - 0.5; // coarse index coordinate
            int t0 = std::clamp(int(std::floor(sx)) - ord / 2 + 1, 0, n - ord);
            cd acc = 0.0;
            for (int r = 0; r < ord; ++r) {
                double L = 1.0;
                for (int q = 0; q < ord; ++q) {
                    if (q == r) continue;
                    L *= (sx - (t0 + q)) / double(r - q);
                }
                acc += L * vals(seg.offset + t0 + r);
            }
            out(fine_off + j) = acc;
        }
        fine_off += nf;
    }
    return out;
}

} // namespace detail

/// Interface-matching residual: one-sided limits of the total field are
/// extrapolated onto off-node interface points from both layers (evaluated
/// through a 4x upsampled density so points within ~1.5 solve spacings are
/// trustworthy) and the value/derivative conditions are checked directly.
inline double interface_matching_residual(const Solution& sol, const ScatteringProblem& p,
                                          const NumericsParams& num, int j, int n_probe = 4) {
    (void)num;
    const int I = p.n_interfaces();
    const auto& spec = p.stack->interfaces[j];
    InterfaceSpec fine_spec = spec;
    for (auto& n : fine_spec.nodes) n *= 4;
    auto fine_geom = build_interface_geometry(fine_spec, p.stack->d);
    const auto& fq = fine_geom.quad;
    const auto& cq = p.geom->interfaces[j].quad;
    const int nc = cq.total();

    const double w = p.d() * p.k.front() * std::cos(p.theta);
    Vec tau_f, sig_f;
    if (cq.smooth()) {
        tau_f = detail::upsample_smooth(sol.eta[j].head(nc), w, 4);
        sig_f = detail::upsample_smooth(sol.eta[j].tail(nc), w, 4);
    } else {
        tau_f = detail::upsample_segmented(sol.eta[j].head(nc), cq, 4);
        sig_f = detail::upsample_segmented(sol.eta[j].tail(nc), cq, 4);
    }
    Vec eta_f(2 * fq.total());
    eta_f << tau_f, sig_f;

    // scattered field of the layer representation with interface j replaced
    // by its upsampled quadrature
    auto eval_side = [&](int layer, Vec2 pt) {
        cd u = 0.0;
        TargetSet t{{pt}, {{0.0, 1.0}}};
        const double kk = p.k[layer];
        for (int which = 0; which < 2; ++which) {
            const int jj = layer - 1 + which;
            if (jj < 0 || jj >= I) continue;
            const bool refined = jj == j;
            const auto& quad = refined ? fq : p.geom->interfaces[jj].quad;
            const Vec& eta = refined ? eta_f : sol.eta[jj];
            const int n = quad.total();
            u += (neighbor_sum_block(KernelKind::D, kk, t, quad, p.alpha).entries *
                  eta.head(n))(0);
            u += (neighbor_sum_block(KernelKind::S, kk, t, quad, p.alpha).entries *
                  eta.tail(n))(0);
        }
        u += (proxy_block(p.geom->proxies[layer], kk, t, false) * sol.c[layer])(0);
        return u;
    };

    // average solve spacing sets the standoff scale
    const double h_phys = cq.period / nc;
    const Vec2 kvec{p.k.front() * std::cos(p.theta), p.k.front() * std::sin(p.theta)};

    double worst = 0.0;
    constexpr int n_fit = 10, deg = 8;
    for (int t = 0; t < n_probe; ++t) {
        // off-node probe on the fine grid, away from segment ends
        const int m = int((0.2 + 0.6 * t / std::max(1, n_probe - 1)) * fq.total()) | 1;
        const Vec2 z = fq.nodes[m];
        const Vec2 nrm = fq.normals[m]; // points down into layer j+1
        // Chebyshev samples of the standoff in [1.3, 3.3] solve spacings
        std::array<double, n_fit> ds{};
        for (int q = 0; q < n_fit; ++q)
            ds[q] = h_phys * (2.3 + std::cos(pi * (q + 0.5) / n_fit));
        Mat V(n_fit, deg + 1);
        Vec ua(n_fit), ub(n_fit);
        for (int q = 0; q < n_fit; ++q) {
            const double x = (ds[q] / h_phys - 2.3); // in [-1, 1]
            for (int c = 0; c <= deg; ++c) V(q, c) = std::pow(x, c);
            ua(q) = eval_side(j, z - nrm * ds[q]);     // above: opposite the normal
            ub(q) = eval_side(j + 1, z + nrm * ds[q]); // below: along the normal
        }
        // least-squares polynomial fits, then extrapolate value and first
        // derivative to the interface (x = -2.3 in scaled coordinates)
        Eigen::HouseholderQR<Mat> qr(V);
        Vec ca = qr.solve(ua), cb = qr.solve(ub);
        auto horner = [&](const Vec& c, double x, bool deriv) {
            cd acc = 0.0;
            if (!deriv) {
                for (int q = deg; q >= 0; --q) acc = acc * x + c(q);
            } else {
                for (int q = deg; q >= 1; --q) acc = acc * x + double(q) * c(q);
            }
            return acc;
        };
        const double x0 = -2.3;
        const cd u_above = horner(ca, x0, false);
        const cd u_below = horner(cb, x0, false);
        // d/d(standoff): above side moves against the normal
        const cd dn_above = -horner(ca, x0, true) / h_phys;
        const cd dn_below = horner(cb, x0, true) / h_phys;
        cd rv = u_above - u_below;
        cd rd = dn_above - dn_below;
        if (j == 0) {
            const cd e = std::exp(iu * (kvec.x * z.x + kvec.y * z.y));
            rv += e;
            rd += iu * (kvec.x * nrm.x + kvec.y * nrm.y) * e;
        }
        worst = std::max({worst, std::abs(rv), std::abs(rd) / p.k[j]});
    }
    return worst;
}

/// Wall quasi-periodicity, Rayleigh-Bloch mismatch on U/D, and interface
/// matching at off-node test points.
inline ResidualReport residual_suite(const Solution& sol, const ScatteringProblem& p,
                                     const NumericsParams& num,
                                     const std::vector<int>& interfaces_to_probe) {
    ResidualReport rep;
    const int I = p.n_interfaces();
    const double d = p.d();

    for (int layer : {0, I / 2, I}) {
        const auto& wall = p.geom->frame.walls[layer];
        for (double f : {0.35, 0.5, 0.71}) {
            const double y = wall.y_lo + f * (wall.y_hi - wall.y_lo);
            const cd uR = detail::eval_raw(p, sol, layer, {0.5 * d, y});
            const cd uL = detail::eval_raw(p, sol, layer, {-0.5 * d, y});
            rep.wall_qp = std::max(rep.wall_qp, std::abs(uR / p.alpha - uL));
        }
    }

    for (bool upper : {true, false}) {
        const double y = upper ? p.geom->frame.y_U : p.geom->frame.y_D;
        const int layer = upper ? 0 : I;
        for (double x : {-0.37 * d, 0.021 * d, 0.44 * d}) {
            const cd u_rep = detail::eval_raw(p, sol, layer, {x, y});
            const cd u_rb = detail::rb_sum(p, sol, {x, y}, upper);
            rep.radiation = std::max(rep.radiation, std::abs(u_rep - u_rb));
        }
    }

    for (int j : interfaces_to_probe)
        rep.interface = std::max(rep.interface, interface_matching_residual(sol, p, num, j));
    return rep;
}

} // namespace qpscat
