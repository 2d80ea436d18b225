#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "qpscat/alpert.hpp"
#include "qpscat/errors.hpp"
#include "qpscat/geometry.hpp"
#include "qpscat/parallel.hpp"
#include "qpscat/specfun.hpp"
#include "qpscat/types.hpp"

namespace qpscat {

enum class KernelKind { S, D, Dstar, T };

struct DenseBlock {
    Mat entries;
    std::string row_tag, col_tag;
};

/// All four layer-potential kernels at one (target, source) pair, sharing a
/// single Hankel evaluation:
///   S  = (i/4) H0(kr)
///   D  = (ik/4) H1(kr) (rhat . n')          (source normal)
///   D* = -(ik/4) H1(kr) (rhat . n)          (target normal)
///   T  = (ik/4) [ k H0(kr)(rhat.n)(rhat.n') + H1(kr)/r (n.n' - 2(rhat.n)(rhat.n')) ]
struct KernelVals {
    cd S, D, Dstar, T;
};

inline KernelVals eval_kernels(double k, Vec2 x, Vec2 nx, Vec2 z, Vec2 nz) {
    const Vec2 rv = x - z;
    const double r = rv.norm();
    if (r < 1e-13 * (1.0 + x.norm()))
        throw SingularityError("kernel evaluated at coincident target/source pair");
    const auto h = hankel01(k * r);
    const double inv_r = 1.0 / r;
    const double cn = (rv.x * nx.x + rv.y * nx.y) * inv_r;   // rhat . n
    const double cdn = (rv.x * nz.x + rv.y * nz.y) * inv_r;  // rhat . n'
    const double nn = nx.x * nz.x + nx.y * nz.y;
    const cd ik4 = iu * (0.25 * k);
    KernelVals v;
    v.S = 0.25 * iu * h.h0;
    v.D = ik4 * h.h1 * cdn;
    v.Dstar = -ik4 * h.h1 * cn;
    v.T = ik4 * (k * h.h0 * cn * cdn + h.h1 * inv_r * (nn - 2.0 * cn * cdn));
    return v;
}

/// Matrices for all four kernels between the same target/source sets.
struct QuadBlocks {
    Mat S, D, Dstar, T;

    Mat& by(KernelKind k) {
        switch (k) {
            case KernelKind::S: return S;
            case KernelKind::D: return D;
            case KernelKind::Dstar: return Dstar;
            default: return T;
        }
    }
    const Mat& by(KernelKind k) const { return const_cast<QuadBlocks*>(this)->by(k); }

    void resize(Eigen::Index rows, Eigen::Index cols) {
        S.setZero(rows, cols);
        D.setZero(rows, cols);
        Dstar.setZero(rows, cols);
        T.setZero(rows, cols);
    }
};

/// Plain Nystrom fill of all four kernels: entry (m, j) = K(x_m, z_j + l d) w_j.
/// Targets must stay off the shifted source nodes.
inline QuadBlocks kernel_quad_block(double k, const TargetSet& targets,
                                    const InterfaceQuadrature& src, int shift_l) {
    const int nt = int(targets.size()), ns = src.total();
    QuadBlocks out;
    out.resize(nt, ns);
    const Vec2 dv{src.period * shift_l, 0.0};
    parallel_for(nt, [&](std::ptrdiff_t m) {
        for (int j = 0; j < ns; ++j) {
            const KernelVals v =
                eval_kernels(k, targets.points[m], targets.normals[m], src.nodes[j] + dv,
                             src.normals[j]);
            const double w = src.weights[j];
            out.S(m, j) = v.S * w;
            out.D(m, j) = v.D * w;
            out.Dstar(m, j) = v.Dstar * w;
            out.T(m, j) = v.T * w;
        }
    });
    return out;
}

/// Single-kind Nystrom block with an explicit lattice shift and phase.
inline DenseBlock kernel_block(KernelKind kind, double k, const TargetSet& targets,
                               const InterfaceQuadrature& src, int shift_l, cd phase,
                               std::string row_tag = {}, std::string col_tag = {}) {
    const int nt = int(targets.size()), ns = src.total();
    DenseBlock out{Mat(nt, ns), std::move(row_tag), std::move(col_tag)};
    const Vec2 dv{src.period * shift_l, 0.0};
    parallel_for(nt, [&](std::ptrdiff_t m) {
        for (int j = 0; j < ns; ++j) {
            const KernelVals v =
                eval_kernels(k, targets.points[m], targets.normals[m], src.nodes[j] + dv,
                             src.normals[j]);
            const cd val = kind == KernelKind::S        ? v.S
                           : kind == KernelKind::D      ? v.D
                           : kind == KernelKind::Dstar  ? v.Dstar
                                                        : v.T;
            out.entries(m, j) = phase * val * src.weights[j];
        }
    });
    return out;
}

/// Sum of the central copy and phased nearest neighbors; targets must lie off
/// the source curve (self interactions go through self_quad_parts).
inline DenseBlock neighbor_sum_block(KernelKind kind, double k, const TargetSet& targets,
                                     const InterfaceQuadrature& src, cd alpha) {
    DenseBlock out = kernel_block(kind, k, targets, src, -1, 1.0 / alpha);
    out.entries += kernel_block(kind, k, targets, src, 0, 1.0).entries;
    out.entries += kernel_block(kind, k, targets, src, 1, alpha).entries;
    return out;
}

// ---------------------------------------------------------------------------
// Self-interaction blocks: Alpert-corrected, quasi-periodic phase wrap
// ---------------------------------------------------------------------------

/// Alpha-independent pieces of the l = 0 self-interaction matrices. The full
/// self matrix is  central + alpha * wrap_plus + alpha^{-1} * wrap_minus;
/// the wrap parts live in the matrix corners and account for the correction
/// stencil crossing the period onto the neighboring copies. They also cancel
/// the excluded-band entries that the plain l = +-1 neighbor blocks carry, so
/// self + alpha^{+-1} neighbor blocks together implement the hybrid rule on
/// the extended curve.
struct SelfQuadParts {
    QuadBlocks central;
    std::array<std::vector<Eigen::Triplet<cd>>, 4> wrap_plus, wrap_minus;
    int n = 0;

    Mat assemble(KernelKind kind, cd alpha) const {
        Mat out = central.by(kind);
        const int ki = int(kind);
        for (const auto& t : wrap_plus[ki]) out(t.row(), t.col()) += alpha * t.value();
        for (const auto& t : wrap_minus[ki]) out(t.row(), t.col()) += t.value() / alpha;
        return out;
    }
};

namespace detail {

inline void add_vals(QuadBlocks& q, int m, int j, const KernelVals& v, cd w) {
    q.S(m, j) += v.S * w;
    q.D(m, j) += v.D * w;
    q.Dstar(m, j) += v.Dstar * w;
    q.T(m, j) += v.T * w;
}

inline void push_vals(std::array<std::vector<Eigen::Triplet<cd>>, 4>& dst, int m, int j,
                      const KernelVals& v, cd w) {
    dst[0].emplace_back(m, j, v.S * w);
    dst[1].emplace_back(m, j, v.D * w);
    dst[2].emplace_back(m, j, v.Dstar * w);
    dst[3].emplace_back(m, j, v.T * w);
}

} // namespace detail

/// Self-interaction (l = 0) matrices for one interface at wavenumber k.
/// Smooth interfaces get the 16th-order log correction with period wrap;
/// open-arc segments get per-segment corrections with no wrap (endpoint
/// accuracy is carried by the Kress grading), and rows too close to a
/// segment end fall back to the punctured plain rule.
inline SelfQuadParts self_quad_parts(double k, const InterfaceQuadrature& quad) {
    constexpr int a = AlpertLog16::a;
    const int N = quad.total();
    if (quad.smooth() && N < alpert_min_nodes)
        throw ConfigError("self block: periodic rule needs at least " +
                          std::to_string(alpert_min_nodes) + " nodes for the correction stencil");

    SelfQuadParts parts;
    parts.n = N;
    parts.central.resize(N, N);

    // locate each node's segment
    std::vector<int> seg_of(N);
    for (std::size_t s = 0; s < quad.segments.size(); ++s)
        for (int j = 0; j < quad.segments[s].n; ++j) seg_of[quad.segments[s].offset + j] = int(s);

    const bool smooth = quad.smooth();

    // plain far-field entries
    parallel_for(N, [&](std::ptrdiff_t m) {
        const int sm = seg_of[m];
        const auto& seg = quad.segments[sm];
        const int mloc = int(m) - seg.offset;
        const bool corrected =
            smooth || std::min(mloc, seg.n - 1 - mloc) >= a; // row gets the hybrid rule
        for (int j = 0; j < N; ++j) {
            if (j == int(m)) continue;
            if (seg_of[j] == sm && corrected) {
                const int off = j - seg.offset - mloc;
                if (std::abs(off) <= a - 1) continue; // excluded band
            }
            const KernelVals v = eval_kernels(k, quad.nodes[m], quad.normals[m], quad.nodes[j],
                                              quad.normals[j]);
            detail::add_vals(parts.central, int(m), j, v, quad.weights[j]);
        }
    });

    // corrections, serial per row buffers then merged (rows are independent;
    // triplet vectors are appended under a per-row partition)
    std::vector<std::array<std::vector<Eigen::Triplet<cd>>, 4>> wrapP(N), wrapM(N);
    parallel_for(N, [&](std::ptrdiff_t m) {
        const int sm = seg_of[m];
        const auto& seg = quad.segments[sm];
        const int mloc = int(m) - seg.offset;
        if (!smooth && std::min(mloc, seg.n - 1 - mloc) < a) return; // plain fallback row
        const double h = 2.0 * pi / seg.n;
        const Vec2 xm = quad.nodes[m];
        const Vec2 nm = quad.normals[m];

        if (smooth) {
            // remove the band entries that the plain l = +-1 blocks will add
            for (int o = -(a - 1); o <= a - 1; ++o) {
                const int jraw = mloc + o;
                if (jraw >= 0 && jraw < N) continue; // central band already skipped
                const int col = (jraw + N) % N;
                const int l = jraw < 0 ? -1 : 1;
                const Vec2 z{quad.nodes[col].x + l * quad.period, quad.nodes[col].y};
                const KernelVals v = eval_kernels(k, xm, nm, z, quad.normals[col]);
                auto& dst = (l < 0) ? wrapM[m] : wrapP[m];
                detail::push_vals(dst, int(m), col, v, -quad.weights[col]);
            }
        }

        // auxiliary nodes on both sides
        for (int side = -1; side <= 1; side += 2) {
            for (int kk = 0; kk < AlpertLog16::n_aux; ++kk) {
                const double xi = side * AlpertLog16::nodes[kk];
                const double s_aux = (mloc + 0.5 + xi) * h;
                const Vec2 z = seg.Z(s_aux);
                const Vec2 tz = seg.Zp(s_aux);
                const double speed = tz.norm();
                const Vec2 nz{tz.y / speed, -tz.x / speed};
                const KernelVals v = eval_kernels(k, xm, nm, z, nz);
                const double qw = h * AlpertLog16::weights[kk] * speed;

                int t0 = alpert_stencil_start(xi);
                if (!smooth) t0 = std::clamp(t0, -mloc, seg.n - alpert_interp_order - mloc);
                const auto lw = lagrange_weights(xi, t0);
                for (int r = 0; r < alpert_interp_order; ++r) {
                    const int jraw = mloc + t0 + r;
                    const cd val = qw * lw[r];
                    if (jraw >= 0 && jraw < seg.n) {
                        detail::add_vals(parts.central, int(m), seg.offset + jraw, v, val);
                    } else {
                        const int col = (jraw + seg.n) % seg.n;
                        auto& dst = (jraw < 0) ? wrapM[m] : wrapP[m];
                        detail::push_vals(dst, int(m), col, v, val);
                    }
                }
            }
        }
    });
    for (int m = 0; m < N; ++m)
        for (int ki = 0; ki < 4; ++ki) {
            auto& wp = parts.wrap_plus[ki];
            auto& wm = parts.wrap_minus[ki];
            wp.insert(wp.end(), wrapP[m][ki].begin(), wrapP[m][ki].end());
            wm.insert(wm.end(), wrapM[m][ki].begin(), wrapM[m][ki].end());
        }
    return parts;
}

/// Spec-level single-kind self block at a given Bloch phase.
inline DenseBlock self_block(KernelKind kind, double k, const InterfaceQuadrature& quad,
                             cd alpha) {
    return {self_quad_parts(k, quad).assemble(kind, alpha), "self", "self"};
}

// ---------------------------------------------------------------------------
// Combined-field proxy basis
// ---------------------------------------------------------------------------

/// Columns phi_p(x) = dG/dn_p (x, y_p) + i k G(x, y_p); optionally followed
/// by target-normal derivative rows.
inline Mat proxy_block(const ProxyCircle& proxy, double k, const TargetSet& targets,
                       bool with_normal_rows) {
    const int nt = int(targets.size());
    const int P = int(proxy.points.size());
    Mat out(with_normal_rows ? 2 * nt : nt, P);
    parallel_for(nt, [&](std::ptrdiff_t m) {
        for (int p = 0; p < P; ++p) {
            const KernelVals v = eval_kernels(k, targets.points[m], targets.normals[m],
                                              proxy.points[p], proxy.normals[p]);
            out(m, p) = v.D + iu * k * v.S;
            if (with_normal_rows) out(nt + m, p) = v.T + iu * k * v.Dstar;
        }
    });
    return out;
}

} // namespace qpscat
