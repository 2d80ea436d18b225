#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qpscat/kernels.hpp"

namespace qpscat {

// ---------------------------------------------------------------------------
// Problem definition
// ---------------------------------------------------------------------------

struct ScatteringProblem {
    const LayerStack* stack = nullptr;
    const StackGeometry* geom = nullptr;
    double omega = 0.0;
    double theta = -pi / 2; // incidence angle in (-pi, 0)
    std::vector<double> k;  // k_i = omega sqrt(eps_i mu_i), top to bottom
    cd alpha{1.0, 0.0};     // Bloch phase e^{i d k_1 cos theta}
    int K = 0;              // Rayleigh-Bloch truncation order

    int n_interfaces() const { return geom ? int(geom->interfaces.size()) : 0; }
    double d() const { return geom->d; }

    double kappa(int n) const { return k.front() * std::cos(theta) + 2.0 * pi * n / d(); }

    /// Vertical wavenumber, branch with Re >= 0 and Im >= 0.
    static cd vertical_wavenumber(double klayer, double kap) {
        const double t = klayer * klayer - kap * kap;
        return t >= 0.0 ? cd(std::sqrt(t), 0.0) : cd(0.0, std::sqrt(-t));
    }
    cd kU(int n) const { return vertical_wavenumber(k.front(), kappa(n)); }
    cd kD(int n) const { return vertical_wavenumber(k.back(), kappa(n)); }

    /// Incident vertical flux k^U_0 = k_1 |sin theta|.
    double incident_flux() const { return k.front() * std::abs(std::sin(theta)); }
};

/// Smallest truncation order covering every propagating order on both sides
/// with the evanescent tail decayed to ~e^{-30} over the U/D clearances.
inline int choose_rb_order(const LayerStack& stack, const StackGeometry& geom, double omega,
                           double theta) {
    const double k0 = omega * std::sqrt(stack.materials.front().epsilon * stack.materials.front().mu);
    const double kb = omega * std::sqrt(stack.materials.back().epsilon * stack.materials.back().mu);
    const double kap0 = k0 * std::cos(theta);
    const double cl_U = geom.frame.y_U - geom.interfaces.front().y_max;
    const double cl_D = geom.interfaces.back().y_min - geom.frame.y_D;
    const double kmax = std::max(k0, kb);
    for (int K = 4; K <= 400; ++K) {
        bool ok = true;
        for (int n : {K, -K}) {
            const double kap = kap0 + 2.0 * pi * n / geom.d;
            if (std::abs(kap) <= kmax) {
                ok = false;
                break;
            }
            const double imU = std::sqrt(std::max(0.0, kap * kap - k0 * k0));
            const double imD = std::sqrt(std::max(0.0, kap * kap - kb * kb));
            ok = ok && imU * cl_U >= 30.0 && imD * cl_D >= 30.0;
        }
        if (ok) return K;
    }
    throw ConfigError("choose_rb_order: no K <= 400 decays the Rayleigh-Bloch tail; "
                      "increase the U/D clearance");
}

inline ScatteringProblem make_problem(const LayerStack& stack, const StackGeometry& geom,
                                      double omega, double theta, int K = 0) {
    if (!(theta > -pi && theta < 0.0))
        throw ConfigError("incidence angle must lie in (-pi, 0)");
    ScatteringProblem p;
    p.stack = &stack;
    p.geom = &geom;
    p.omega = omega;
    p.theta = theta;
    for (const auto& m : stack.materials) p.k.push_back(omega * std::sqrt(m.epsilon * m.mu));
    p.alpha = std::exp(iu * (geom.d * p.k.front() * std::cos(theta)));
    p.K = K > 0 ? K : choose_rb_order(stack, geom, omega, theta);
    return p;
}

// ---------------------------------------------------------------------------
// Alpha-independent shift blocks (the sweep cache; also the single assembly
// path for one-shot solves)
// ---------------------------------------------------------------------------

/// Self interaction of one interface at one wavenumber: the l = 0 corrected
/// parts plus the plain l = -1, +1 neighbor blocks.
struct TildePieces {
    SelfQuadParts self;
    QuadBlocks nbr_m, nbr_p;

    Mat assemble(KernelKind kind, cd alpha) const {
        Mat out = self.assemble(kind, alpha);
        out += (1.0 / alpha) * nbr_m.by(kind);
        out += alpha * nbr_p.by(kind);
        return out;
    }
};

/// Distinct target/source interaction: plain blocks for l = -1, 0, 1.
struct PairPieces {
    QuadBlocks l[3];

    Mat assemble(KernelKind kind, cd alpha) const {
        Mat out = l[1].by(kind);
        out += (1.0 / alpha) * l[0].by(kind);
        out += alpha * l[2].by(kind);
        return out;
    }
};

struct ShiftBlockCache {
    std::vector<TildePieces> self_up, self_dn; // per interface: k above / below
    std::vector<PairPieces> coupl_up;          // j >= 1: targets G_j, sources G_{j-1}, k_j
    std::vector<PairPieces> coupl_dn;          // j <= I-2: targets G_j, sources G_{j+1}, k_{j+1}
    std::vector<Mat> B_self, B_below;          // proxy blocks on interfaces (unsigned)
    std::vector<QuadBlocks> C_self_p, C_self_m; // layer i sources G_i: targets wall+2d / wall-d
    std::vector<QuadBlocks> C_above_p, C_above_m; // layer i sources G_{i-1}
    std::vector<Mat> Q_p, Q_m;                 // phi^i on wall_i + d / wall_i (2Mw x P)
    PairPieces ZU, ZD;
    Mat V_U, V_D;
    std::uint64_t fill_evals = 0;              // Hankel pairs spent filling

    std::size_t bytes() const {
        std::size_t b = 0;
        auto addq = [&](const QuadBlocks& q) { b += 4 * sizeof(cd) * q.S.size(); };
        auto addm = [&](const Mat& m) { b += sizeof(cd) * m.size(); };
        for (const auto& t : {&self_up, &self_dn})
            for (const auto& s : *t) {
                addq(s.self.central);
                addq(s.nbr_m);
                addq(s.nbr_p);
                for (int i = 0; i < 4; ++i)
                    b += sizeof(Eigen::Triplet<cd>) *
                         (s.self.wrap_plus[i].size() + s.self.wrap_minus[i].size());
            }
        for (const auto* t : {&coupl_up, &coupl_dn})
            for (const auto& pcs : *t)
                for (int l = 0; l < 3; ++l) addq(pcs.l[l]);
        for (const auto* t : {&B_self, &B_below, &Q_p, &Q_m})
            for (const auto& m : *t) addm(m);
        for (const auto* t : {&C_self_p, &C_self_m, &C_above_p, &C_above_m})
            for (const auto& q : *t) addq(q);
        for (int l = 0; l < 3; ++l) {
            addq(ZU.l[l]);
            addq(ZD.l[l]);
        }
        addm(V_U);
        addm(V_D);
        return b;
    }
};

namespace detail {

inline TargetSet wall_targets(const UnitCellFrame& frame, int layer, double xshift) {
    TargetSet t;
    const auto& wall = frame.walls[layer];
    t.points.reserve(wall.ys.size());
    for (double y : wall.ys) {
        t.points.push_back({-0.5 * frame.d + xshift, y});
        t.normals.push_back({1.0, 0.0});
    }
    return t;
}

inline TargetSet line_targets(const UnitCellFrame& frame, double y) {
    TargetSet t;
    for (double x : frame.ud_x) {
        t.points.push_back({x, y});
        t.normals.push_back({0.0, 1.0});
    }
    return t;
}

/// Rough byte estimate of the cache before filling it.
inline std::size_t cache_bytes_estimate(const StackGeometry& g, int P, int Mw, int M) {
    const int I = int(g.interfaces.size());
    std::size_t b = 0;
    auto q = [&](std::size_t r, std::size_t c) { b += 4 * sizeof(cd) * r * c; };
    for (int j = 0; j < I; ++j) {
        const std::size_t N = g.interfaces[j].quad.total();
        q(N, N);
        q(N, N);
        q(N, N); // self + two neighbors
        b *= 1;  // per side below
    }
    b *= 2; // two wavenumber sides
    for (int j = 1; j < I; ++j)
        q(g.interfaces[j].quad.total(), 3 * g.interfaces[j - 1].quad.total());
    for (int j = 0; j + 1 < I; ++j)
        q(g.interfaces[j].quad.total(), 3 * g.interfaces[j + 1].quad.total());
    for (int j = 0; j < I; ++j) b += 2 * sizeof(cd) * 2 * g.interfaces[j].quad.total() * P;
    for (int i = 0; i <= I; ++i) {
        if (i < I) q(Mw, 2 * g.interfaces[i].quad.total());
        if (i >= 1) q(Mw, 2 * g.interfaces[i - 1].quad.total());
        b += 2 * sizeof(cd) * 2 * Mw * P;
    }
    q(M, 6 * g.interfaces.front().quad.total());
    q(M, 6 * g.interfaces.back().quad.total());
    b += 2 * sizeof(cd) * 2 * M * P;
    return b;
}

} // namespace detail

/// Fill every alpha-independent block once. This is the expensive pass; all
/// subsequent assemblies are phased sums of these pieces.
inline ShiftBlockCache precompute_shift_blocks(const ScatteringProblem& p,
                                               const NumericsParams& num) {
    const auto& g = *p.geom;
    const int I = p.n_interfaces();
    {
        const std::size_t need = detail::cache_bytes_estimate(g, num.P, num.Mw, num.M);
        if (need > num.memory_budget)
            throw MemoryBudgetError("shift-block cache needs " + std::to_string(need) +
                                        " bytes, budget is " +
                                        std::to_string(num.memory_budget),
                                    need);
    }
    const std::uint64_t evals0 = hankel_eval_count();
    ShiftBlockCache c;
    c.self_up.resize(I);
    c.self_dn.resize(I);
    c.coupl_up.resize(I);
    c.coupl_dn.resize(I);
    c.B_self.resize(I);
    c.B_below.resize(I);
    c.C_self_p.resize(I + 1);
    c.C_self_m.resize(I + 1);
    c.C_above_p.resize(I + 1);
    c.C_above_m.resize(I + 1);
    c.Q_p.resize(I + 1);
    c.Q_m.resize(I + 1);

    for (int j = 0; j < I; ++j) {
        const auto& quad = g.interfaces[j].quad;
        const auto tg = quad.targets();
        for (int side = 0; side < 2; ++side) {
            const double kk = p.k[j + side];
            TildePieces& tp = side == 0 ? c.self_up[j] : c.self_dn[j];
            tp.self = self_quad_parts(kk, quad);
            tp.nbr_m = kernel_quad_block(kk, tg, quad, -1);
            tp.nbr_p = kernel_quad_block(kk, tg, quad, 1);
        }
        if (j >= 1)
            for (int l = -1; l <= 1; ++l)
                c.coupl_up[j].l[l + 1] = kernel_quad_block(p.k[j], tg, g.interfaces[j - 1].quad, l);
        if (j + 1 < I)
            for (int l = -1; l <= 1; ++l)
                c.coupl_dn[j].l[l + 1] =
                    kernel_quad_block(p.k[j + 1], tg, g.interfaces[j + 1].quad, l);
        c.B_self[j] = proxy_block(g.proxies[j], p.k[j], tg, true);
        c.B_below[j] = proxy_block(g.proxies[j + 1], p.k[j + 1], tg, true);
    }

    for (int i = 0; i <= I; ++i) {
        const TargetSet wp = detail::wall_targets(g.frame, i, 2.0 * g.d);
        const TargetSet wm = detail::wall_targets(g.frame, i, -g.d);
        const TargetSet w0 = detail::wall_targets(g.frame, i, 0.0);
        const TargetSet wd = detail::wall_targets(g.frame, i, g.d);
        if (i < I) {
            c.C_self_p[i] = kernel_quad_block(p.k[i], wp, g.interfaces[i].quad, 0);
            c.C_self_m[i] = kernel_quad_block(p.k[i], wm, g.interfaces[i].quad, 0);
        }
        if (i >= 1) {
            c.C_above_p[i] = kernel_quad_block(p.k[i], wp, g.interfaces[i - 1].quad, 0);
            c.C_above_m[i] = kernel_quad_block(p.k[i], wm, g.interfaces[i - 1].quad, 0);
        }
        c.Q_p[i] = proxy_block(g.proxies[i], p.k[i], wd, true);
        c.Q_m[i] = proxy_block(g.proxies[i], p.k[i], w0, true);
    }

    const TargetSet U = detail::line_targets(g.frame, g.frame.y_U);
    const TargetSet D = detail::line_targets(g.frame, g.frame.y_D);
    for (int l = -1; l <= 1; ++l) {
        c.ZU.l[l + 1] = kernel_quad_block(p.k.front(), U, g.interfaces.front().quad, l);
        c.ZD.l[l + 1] = kernel_quad_block(p.k.back(), D, g.interfaces.back().quad, l);
    }
    c.V_U = proxy_block(g.proxies.front(), p.k.front(), U, true);
    c.V_D = proxy_block(g.proxies.back(), p.k.back(), D, true);
    c.fill_evals = hankel_eval_count() - evals0;
    return c;
}

// ---------------------------------------------------------------------------
// System assembly from the cache
// ---------------------------------------------------------------------------

struct BlockSystem {
    int I = 0;
    int P = 0, Mw = 0, M = 0, K = 0;
    std::vector<int> N; // nodes per interface

    std::vector<Mat> A_diag, A_super, A_sub;
    std::vector<Mat> B_self, B_below;
    std::vector<Mat> C_self, C_above; // per layer; may be empty at the ends
    std::vector<Mat> Q;
    Mat Z_U, Z_D, V_U, V_D, W_U, W_D;
    Vec f;

    Mat Bp_first, Bp_last;  // corner-expanded B blocks
    Mat Cp_first, Cp_last;  // [C; Z] stacks
    Mat Qp_first, Qp_last;  // [[Q 0],[V W]]

    int n_density() const {
        int s = 0;
        for (int n : N) s += 2 * n;
        return s;
    }
    int n_total() const { return n_density() + (I + 1) * P + 2 * (2 * K + 1); }
};

namespace detail {

/// [D S; T D*] arrangement of a 2x2 operator block from four kind-matrices.
inline Mat stack_kinds(const Mat& D, const Mat& S, const Mat& T, const Mat& Ds) {
    Mat out(D.rows() + T.rows(), D.cols() + S.cols());
    out.topLeftCorner(D.rows(), D.cols()) = D;
    out.topRightCorner(S.rows(), S.cols()) = S;
    out.bottomLeftCorner(T.rows(), T.cols()) = T;
    out.bottomRightCorner(Ds.rows(), Ds.cols()) = Ds;
    return out;
}

template <class Pieces>
Mat stack_tilde(const Pieces& p, cd alpha) {
    return stack_kinds(p.assemble(KernelKind::D, alpha), p.assemble(KernelKind::S, alpha),
                       p.assemble(KernelKind::T, alpha), p.assemble(KernelKind::Dstar, alpha));
}

} // namespace detail

/// Tridiagonal interface blocks of the Muller-Rokhlin system.
inline void assemble_A(const ScatteringProblem& p, const ShiftBlockCache& c, BlockSystem& sys) {
    const int I = p.n_interfaces();
    sys.A_diag.resize(I);
    sys.A_super.resize(I > 0 ? I - 1 : 0);
    sys.A_sub.resize(I > 0 ? I - 1 : 0);
    for (int j = 0; j < I; ++j) {
        const int n = p.geom->interfaces[j].quad.total();
        Mat up = detail::stack_tilde(c.self_up[j], p.alpha);
        Mat dn = detail::stack_tilde(c.self_dn[j], p.alpha);
        Mat A = up - dn;
        for (int i = 0; i < n; ++i) {
            A(i, i) -= 1.0;          // -I on the value block
            A(n + i, n + i) += 1.0;  // +I on the derivative block
        }
        sys.A_diag[j] = std::move(A);
        if (j + 1 < I) sys.A_super[j] = -detail::stack_tilde(c.coupl_dn[j], p.alpha);
        if (j >= 1) sys.A_sub[j - 1] = detail::stack_tilde(c.coupl_up[j], p.alpha);
    }
}

/// Proxy-to-interface blocks (B), plain and corner-expanded.
inline void assemble_B(const ScatteringProblem& p, const ShiftBlockCache& c, BlockSystem& sys) {
    const int I = p.n_interfaces();
    sys.B_self.resize(I);
    sys.B_below.resize(I);
    for (int j = 0; j < I; ++j) {
        sys.B_self[j] = c.B_self[j];
        sys.B_below[j] = -c.B_below[j];
    }
    const int nrb = 2 * p.K + 1;
    sys.Bp_first = Mat::Zero(sys.B_self.front().rows(), sys.P + nrb);
    sys.Bp_first.leftCols(sys.P) = sys.B_self.front();
    sys.Bp_last = Mat::Zero(sys.B_below.back().rows(), sys.P + nrb);
    sys.Bp_last.leftCols(sys.P) = sys.B_below.back();
}

/// Wall-matching blocks (C): alpha^{-2} K(wall + 2d) - alpha K(wall - d).
inline void assemble_C(const ScatteringProblem& p, const ShiftBlockCache& c, BlockSystem& sys) {
    const int I = p.n_interfaces();
    sys.C_self.assign(I + 1, Mat());
    sys.C_above.assign(I + 1, Mat());
    const cd am2 = 1.0 / (p.alpha * p.alpha);
    auto comb = [&](const QuadBlocks& qp, const QuadBlocks& qm, KernelKind kind) {
        return Mat(am2 * qp.by(kind) - p.alpha * qm.by(kind));
    };
    for (int i = 0; i <= I; ++i) {
        if (i < I)
            sys.C_self[i] = detail::stack_kinds(
                comb(c.C_self_p[i], c.C_self_m[i], KernelKind::D),
                comb(c.C_self_p[i], c.C_self_m[i], KernelKind::S),
                comb(c.C_self_p[i], c.C_self_m[i], KernelKind::T),
                comb(c.C_self_p[i], c.C_self_m[i], KernelKind::Dstar));
        if (i >= 1)
            sys.C_above[i] = detail::stack_kinds(
                comb(c.C_above_p[i], c.C_above_m[i], KernelKind::D),
                comb(c.C_above_p[i], c.C_above_m[i], KernelKind::S),
                comb(c.C_above_p[i], c.C_above_m[i], KernelKind::T),
                comb(c.C_above_p[i], c.C_above_m[i], KernelKind::Dstar));
    }
}

/// Wall-matching proxy blocks (Q): rows alpha^{-1} phi(wall + d) - phi(wall).
inline void assemble_Q(const ScatteringProblem& p, const ShiftBlockCache& c, BlockSystem& sys) {
    const int I = p.n_interfaces();
    sys.Q.resize(I + 1);
    for (int i = 0; i <= I; ++i) sys.Q[i] = (1.0 / p.alpha) * c.Q_p[i] - c.Q_m[i];
}

/// Radiation blocks: Z (interface densities on U/D), V (proxies on U/D),
/// W (minus the truncated Rayleigh-Bloch basis).
inline void assemble_radiation(const ScatteringProblem& p, const ShiftBlockCache& c,
                               BlockSystem& sys) {
    sys.Z_U = detail::stack_tilde(c.ZU, p.alpha);
    sys.Z_D = detail::stack_tilde(c.ZD, p.alpha);
    sys.V_U = c.V_U;
    sys.V_D = c.V_D;
    const int M = sys.M, nrb = 2 * p.K + 1;
    sys.W_U.resize(2 * M, nrb);
    sys.W_D.resize(2 * M, nrb);
    for (int n = -p.K; n <= p.K; ++n) {
        const double kap = p.kappa(n);
        const cd ku = p.kU(n), kd = p.kD(n);
        for (int m = 0; m < M; ++m) {
            const cd e = std::exp(iu * kap * p.geom->frame.ud_x[m]);
            sys.W_U(m, n + p.K) = -e;
            sys.W_U(M + m, n + p.K) = -iu * ku * e;
            sys.W_D(m, n + p.K) = -e;
            sys.W_D(M + m, n + p.K) = iu * kd * e;
        }
    }
}

/// Incident-wave data on the first interface.
inline void assemble_rhs(const ScatteringProblem& p, BlockSystem& sys) {
    const auto& quad = p.geom->interfaces.front().quad;
    const int n = quad.total();
    const Vec2 kvec{p.k.front() * std::cos(p.theta), p.k.front() * std::sin(p.theta)};
    sys.f.setZero(2 * n);
    for (int j = 0; j < n; ++j) {
        const cd e = std::exp(iu * (kvec.x * quad.nodes[j].x + kvec.y * quad.nodes[j].y));
        sys.f(j) = -e;
        sys.f(n + j) = -iu * (kvec.x * quad.normals[j].x + kvec.y * quad.normals[j].y) * e;
    }
}

inline void assemble_corners(BlockSystem& sys) {
    const int nrb = 2 * sys.K + 1;
    // C' stacks wall rows over radiation rows
    sys.Cp_first.resize(sys.C_self.front().rows() + sys.Z_U.rows(), sys.C_self.front().cols());
    sys.Cp_first << sys.C_self.front(), sys.Z_U;
    sys.Cp_last.resize(sys.C_above.back().rows() + sys.Z_D.rows(), sys.C_above.back().cols());
    sys.Cp_last << sys.C_above.back(), sys.Z_D;
    // Q' gains the V and W columns
    auto corner_q = [&](const Mat& Q, const Mat& V, const Mat& W) {
        Mat out = Mat::Zero(Q.rows() + V.rows(), sys.P + nrb);
        out.topLeftCorner(Q.rows(), sys.P) = Q;
        out.bottomLeftCorner(V.rows(), sys.P) = V;
        out.bottomRightCorner(W.rows(), nrb) = W;
        return out;
    };
    sys.Qp_first = corner_q(sys.Q.front(), sys.V_U, sys.W_U);
    sys.Qp_last = corner_q(sys.Q.back(), sys.V_D, sys.W_D);
}

inline BlockSystem assemble_system(const ScatteringProblem& p, const ShiftBlockCache& c,
                                   const NumericsParams& num) {
    BlockSystem sys;
    sys.I = p.n_interfaces();
    sys.P = num.P;
    sys.Mw = num.Mw;
    sys.M = num.M;
    sys.K = p.K;
    for (const auto& g : p.geom->interfaces) sys.N.push_back(g.quad.total());
    if (2 * num.Mw < num.P)
        throw ConfigError("least-squares solvability needs 2 Mw >= P");
    if (2 * num.Mw + 2 * num.M < num.P + 2 * p.K + 1)
        throw ConfigError("corner solvability needs 2 Mw + 2 M >= P + 2K + 1");
    assemble_A(p, c, sys);
    assemble_B(p, c, sys);
    assemble_C(p, c, sys);
    assemble_Q(p, c, sys);
    assemble_radiation(p, c, sys);
    assemble_rhs(p, sys);
    assemble_corners(sys);
    return sys;
}

} // namespace qpscat
