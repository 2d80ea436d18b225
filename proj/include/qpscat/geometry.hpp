#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qpscat/errors.hpp"
#include "qpscat/types.hpp"

namespace qpscat {

// ---------------------------------------------------------------------------
// Parametrized segments
// ---------------------------------------------------------------------------

enum class SegmentKind { PeriodicSmooth, OpenArc };

/// One smooth piece of an interface, parametrized over s in [0, 2pi].
/// Periodic-smooth segments must satisfy Z(s + 2pi) = Z(s) + (d, 0) for all
/// real s (the formula is evaluated outside [0, 2pi] by the quadrature
/// corrections). Open arcs need only cover [0, 2pi].
struct SegmentParam {
    std::function<Vec2(double)> Z;
    std::function<Vec2(double)> Zp;
    SegmentKind kind = SegmentKind::PeriodicSmooth;
    int grading_q = 6;
};

// ---------------------------------------------------------------------------
// Kress corner grading
// ---------------------------------------------------------------------------

inline double kress_v(double s, int q) {
    const double u = (pi - s) / pi;
    return (1.0 / q - 0.5) * u * u * u + (s - pi) / (pi * q) + 0.5;
}

inline double kress_vp(double s, int q) {
    const double u = (pi - s) / pi;
    return -3.0 * (1.0 / q - 0.5) * u * u / pi + 1.0 / (pi * q);
}

/// Corner grading map w(s) = 2pi v(s)^q / (v(s)^q + v(2pi-s)^q); monotone on
/// [0, 2pi] with derivatives through order q-1 vanishing at the endpoints.
inline double kress_w(double s, int q) {
    if (s < 0.0 || s > 2.0 * pi)
        throw std::domain_error("kress_w: s outside [0, 2pi]");
    if (q < 2) throw std::domain_error("kress_w: q must be >= 2");
    const double vq = std::pow(kress_v(s, q), q);
    const double vr = std::pow(kress_v(2.0 * pi - s, q), q);
    return 2.0 * pi * vq / (vq + vr);
}

inline double kress_wp(double s, int q) {
    const double v1 = kress_v(s, q), v2 = kress_v(2.0 * pi - s, q);
    const double vq = std::pow(v1, q), vr = std::pow(v2, q);
    const double d1 = q * std::pow(v1, q - 1) * kress_vp(s, q);
    const double d2 = -q * std::pow(v2, q - 1) * kress_vp(2.0 * pi - s, q);
    const double den = vq + vr;
    return 2.0 * pi * (d1 * den - vq * (d1 + d2)) / (den * den);
}

// ---------------------------------------------------------------------------
// Interface quadratures
// ---------------------------------------------------------------------------

/// One built segment of a quadrature: the (possibly grading-composed)
/// parametrization retained for the singular-correction machinery.
struct QuadSegment {
    std::function<Vec2(double)> Z, Zp; // composed map, s in [0, 2pi]
    int n = 0;                         // node count
    int offset = 0;                    // index of first node in the interface
    bool periodic = false;
};

struct InterfaceQuadrature {
    std::vector<Vec2> nodes;
    std::vector<Vec2> normals;   // unit, pointing down into the layer below
    std::vector<double> weights; // arclength weights
    std::vector<double> speeds;  // |Z'(s_j)| of the composed map
    std::vector<QuadSegment> segments;
    double period = 0.0;

    int total() const { return int(nodes.size()); }
    bool smooth() const { return segments.size() == 1 && segments.front().periodic; }

    TargetSet targets() const { return {nodes, normals}; }
};

namespace detail {

inline Vec2 downward_normal(Vec2 tangent) {
    const double n = tangent.norm();
    return {tangent.y / n, -tangent.x / n};
}

inline SegmentParam normalize_direction(const SegmentParam& seg) {
    const Vec2 a = seg.Z(0.0), b = seg.Z(2.0 * pi);
    if (b.x >= a.x) return seg;
    SegmentParam out = seg;
    auto Z = seg.Z, Zp = seg.Zp;
    out.Z = [Z](double s) { return Z(2.0 * pi - s); };
    out.Zp = [Zp](double s) { Vec2 v = Zp(2.0 * pi - s); return Vec2{-v.x, -v.y}; };
    return out;
}

} // namespace detail

/// Periodic trapezoid rule on a smooth interface: s_j = 2pi (j - 1/2) / N.
inline InterfaceQuadrature build_smooth_quadrature(const SegmentParam& seg_in, int N,
                                                   double period) {
    if (seg_in.kind != SegmentKind::PeriodicSmooth)
        throw UsageError("build_smooth_quadrature: segment is not periodic-smooth");
    if (N < 8) throw ConfigError("build_smooth_quadrature: N must be >= 8");
    const SegmentParam seg = detail::normalize_direction(seg_in);

    InterfaceQuadrature q;
    q.period = period;
    q.nodes.resize(N);
    q.normals.resize(N);
    q.weights.resize(N);
    q.speeds.resize(N);
    const double h = 2.0 * pi / N;
    for (int j = 0; j < N; ++j) {
        const double s = (j + 0.5) * h;
        q.nodes[j] = seg.Z(s);
        const Vec2 t = seg.Zp(s);
        q.speeds[j] = t.norm();
        q.weights[j] = h * q.speeds[j];
        q.normals[j] = detail::downward_normal(t);
    }
    QuadSegment qs;
    qs.Z = seg.Z;
    qs.Zp = seg.Zp;
    qs.n = N;
    qs.offset = 0;
    qs.periodic = true;
    q.segments.push_back(std::move(qs));
    return q;
}

/// Kress-graded composite trapezoid rule on an interface made of open arcs.
/// Consecutive segment endpoints must coincide; the chain advances by one
/// period (d, 0).
inline InterfaceQuadrature build_corner_quadrature(const std::vector<SegmentParam>& segs,
                                                   const std::vector<int>& n_per, int q,
                                                   double period) {
    if (segs.empty() || segs.size() != n_per.size())
        throw UsageError("build_corner_quadrature: segment/count mismatch");
    const double tol = 1e-12 * period;
    for (std::size_t l = 0; l + 1 < segs.size(); ++l) {
        const Vec2 e = segs[l].Z(2.0 * pi), s = segs[l + 1].Z(0.0);
        if ((e - s).norm() > tol)
            throw GeometryError("build_corner_quadrature: segment " + std::to_string(l) +
                                " endpoint does not meet segment " + std::to_string(l + 1));
    }
    {
        const Vec2 first = segs.front().Z(0.0), last = segs.back().Z(2.0 * pi);
        const Vec2 adv = last - first;
        if (std::abs(adv.x - period) > tol || std::abs(adv.y) > tol)
            throw GeometryError("build_corner_quadrature: chain does not advance by one period");
    }

    InterfaceQuadrature out;
    out.period = period;
    int offset = 0;
    for (std::size_t l = 0; l < segs.size(); ++l) {
        const SegmentParam& seg = segs[l];
        const int n = n_per[l];
        if (n < 8) throw ConfigError("build_corner_quadrature: n per segment must be >= 8");
        const int gq = q > 0 ? q : seg.grading_q;
        auto Z = seg.Z, Zp = seg.Zp;
        QuadSegment qs;
        qs.Z = [Z, gq](double s) { return Z(kress_w(s, gq)); };
        qs.Zp = [Zp, gq](double s) {
            const Vec2 v = Zp(kress_w(s, gq));
            const double wp = kress_wp(s, gq);
            return Vec2{v.x * wp, v.y * wp};
        };
        qs.n = n;
        qs.offset = offset;
        qs.periodic = false;
        const double h = 2.0 * pi / n;
        for (int j = 0; j < n; ++j) {
            const double s = (j + 0.5) * h;
            out.nodes.push_back(qs.Z(s));
            const Vec2 t = qs.Zp(s);
            out.speeds.push_back(t.norm());
            out.weights.push_back(h * t.norm());
            out.normals.push_back(detail::downward_normal(seg.Zp(kress_w(s, gq))));
        }
        out.segments.push_back(std::move(qs));
        offset += n;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Proxy circles, walls, unit-cell frame
// ---------------------------------------------------------------------------

struct ProxyCircle {
    Vec2 center;
    double radius = 0.0;
    std::vector<Vec2> points;
    std::vector<Vec2> normals; // outward
};

inline ProxyCircle build_proxy_circle(Vec2 center, double R, int P) {
    if (P < 1) throw ConfigError("build_proxy_circle: P must be >= 1");
    ProxyCircle c;
    c.center = center;
    c.radius = R;
    c.points.resize(P);
    c.normals.resize(P);
    for (int p = 0; p < P; ++p) {
        const double ang = 2.0 * pi * p / P;
        c.normals[p] = {std::cos(ang), std::sin(ang)};
        c.points[p] = {center.x + R * std::cos(ang), center.y + R * std::sin(ang)};
    }
    return c;
}

/// Gauss-Legendre nodes/weights on [-1, 1] (Newton on the recurrence).
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double t = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k + 1.0) * t * p1 - k * p2) / (k + 1.0);
            }
            pp = n * (t * p0 - p1) / (t * t - 1.0);
            const double dt = -p0 / pp;
            t += dt;
            if (std::abs(dt) < 1e-15) break;
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * pp * pp);
    }
}

struct WallSegment {
    double y_lo = 0.0, y_hi = 0.0;
    std::vector<double> ys; // Gauss-Legendre heights, x = -d/2
    std::vector<double> ws;
};

struct UnitCellFrame {
    double d = 0.0;
    double y_U = 0.0, y_D = 0.0;
    std::vector<WallSegment> walls; // one per layer, top to bottom
    std::vector<double> ud_x;       // M equispaced abscissae shared by U and D
};

// ---------------------------------------------------------------------------
// Interface descriptors and the layer stack
// ---------------------------------------------------------------------------

/// Config-level description of one interface profile. All profiles are
/// graphs y(x); `offset` is the nominal height, shape coordinates are
/// relative to it.
struct InterfaceSpec {
    enum class Shape { Sine, Fourier, Polyline };
    Shape shape = Shape::Sine;
    double offset = 0.0;
    double amplitude = 0.0, phase = 0.0;      // sine
    std::vector<double> cosc, sinc;           // fourier
    std::vector<Vec2> vertices;               // polyline, x in [-d/2, d/2], y relative
    std::vector<int> nodes;                   // per segment (single entry for smooth)
    int grading_q = 6;
};

struct Material {
    double epsilon = 1.0;
    double mu = 1.0;
};

struct LayerStack {
    double d = 1.0;
    std::vector<Material> materials;      // I+1 layers, top to bottom
    std::vector<InterfaceSpec> interfaces; // I interfaces, top to bottom

    int n_interfaces() const { return int(interfaces.size()); }
    int n_layers() const { return int(materials.size()); }
};

namespace detail {

inline double spec_y_of_x(const InterfaceSpec& sp, double d, double x) {
    // wrap into [-d/2, d/2)
    x -= d * std::floor((x + 0.5 * d) / d);
    switch (sp.shape) {
        case InterfaceSpec::Shape::Sine:
            return sp.offset + sp.amplitude * std::sin(2.0 * pi * x / d + sp.phase);
        case InterfaceSpec::Shape::Fourier: {
            double y = sp.offset;
            for (std::size_t m = 0; m < sp.cosc.size(); ++m)
                y += sp.cosc[m] * std::cos(2.0 * pi * double(m + 1) * x / d);
            for (std::size_t m = 0; m < sp.sinc.size(); ++m)
                y += sp.sinc[m] * std::sin(2.0 * pi * double(m + 1) * x / d);
            return y;
        }
        case InterfaceSpec::Shape::Polyline: {
            const auto& v = sp.vertices;
            for (std::size_t l = 0; l + 1 < v.size(); ++l) {
                if (x >= v[l].x && x <= v[l + 1].x) {
                    if (v[l + 1].x - v[l].x < 1e-14)
                        return sp.offset + std::max(v[l].y, v[l + 1].y);
                    const double f = (x - v[l].x) / (v[l + 1].x - v[l].x);
                    return sp.offset + v[l].y * (1.0 - f) + v[l + 1].y * f;
                }
            }
            return sp.offset + v.back().y;
        }
    }
    return sp.offset;
}

} // namespace detail

/// Built segments for an interface descriptor.
inline std::vector<SegmentParam> make_interface_segments(const InterfaceSpec& sp, double d) {
    std::vector<SegmentParam> out;
    if (sp.shape == InterfaceSpec::Shape::Polyline) {
        const auto& v = sp.vertices;
        if (v.size() < 2) throw ConfigError("polyline interface needs >= 2 vertices");
        if (std::abs(v.front().x + 0.5 * d) > 1e-12 || std::abs(v.back().x - 0.5 * d) > 1e-12)
            throw ConfigError("polyline must span x = -d/2 .. d/2");
        if (std::abs(v.front().y - v.back().y) > 1e-12)
            throw ConfigError("polyline endpoint heights must match (periodicity)");
        for (std::size_t l = 0; l + 1 < v.size(); ++l) {
            const Vec2 A{v[l].x, v[l].y + sp.offset};
            const Vec2 B{v[l + 1].x, v[l + 1].y + sp.offset};
            SegmentParam seg;
            seg.kind = SegmentKind::OpenArc;
            seg.grading_q = sp.grading_q;
            seg.Z = [A, B](double s) {
                const double f = s / (2.0 * pi);
                return Vec2{A.x + (B.x - A.x) * f, A.y + (B.y - A.y) * f};
            };
            seg.Zp = [A, B](double) {
                return Vec2{(B.x - A.x) / (2.0 * pi), (B.y - A.y) / (2.0 * pi)};
            };
            out.push_back(std::move(seg));
        }
        return out;
    }
    SegmentParam seg;
    seg.kind = SegmentKind::PeriodicSmooth;
    const InterfaceSpec spc = sp;
    seg.Z = [spc, d](double s) {
        const double x = -0.5 * d + d * s / (2.0 * pi);
        double y = spc.offset;
        if (spc.shape == InterfaceSpec::Shape::Sine) {
            y += spc.amplitude * std::sin(2.0 * pi * x / d + spc.phase);
        } else {
            for (std::size_t m = 0; m < spc.cosc.size(); ++m)
                y += spc.cosc[m] * std::cos(2.0 * pi * double(m + 1) * x / d);
            for (std::size_t m = 0; m < spc.sinc.size(); ++m)
                y += spc.sinc[m] * std::sin(2.0 * pi * double(m + 1) * x / d);
        }
        return Vec2{x, y};
    };
    seg.Zp = [spc, d](double s) {
        const double x = -0.5 * d + d * s / (2.0 * pi);
        const double dxds = d / (2.0 * pi);
        double dydx = 0.0;
        if (spc.shape == InterfaceSpec::Shape::Sine) {
            dydx = spc.amplitude * (2.0 * pi / d) * std::cos(2.0 * pi * x / d + spc.phase);
        } else {
            for (std::size_t m = 0; m < spc.cosc.size(); ++m)
                dydx -= spc.cosc[m] * (2.0 * pi * double(m + 1) / d) *
                        std::sin(2.0 * pi * double(m + 1) * x / d);
            for (std::size_t m = 0; m < spc.sinc.size(); ++m)
                dydx += spc.sinc[m] * (2.0 * pi * double(m + 1) / d) *
                        std::cos(2.0 * pi * double(m + 1) * x / d);
        }
        return Vec2{dxds, dydx * dxds};
    };
    out.push_back(std::move(seg));
    return out;
}

// ---------------------------------------------------------------------------
// Built stack geometry
// ---------------------------------------------------------------------------

struct InterfaceGeometry {
    InterfaceQuadrature quad;
    double y_min = 0.0, y_max = 0.0; // over one period
    double wall_y = 0.0;             // height of the x = -d/2 crossing
};

struct NumericsParams {
    int P = 60;
    int Mw = 120;
    int M = 60;
    int K = 0;              // 0 = choose automatically
    double R = 2.0;         // proxy radius (absolute, like the period)
    int grading_q = 6;
    double clearance = 0.05; // U/D offset in units of d
    std::size_t memory_budget = std::size_t(4) << 30;
};

struct StackGeometry {
    double d = 0.0;
    std::vector<InterfaceGeometry> interfaces; // I
    std::vector<ProxyCircle> proxies;          // I+1
    UnitCellFrame frame;
};

inline InterfaceGeometry build_interface_geometry(const InterfaceSpec& sp, double d) {
    InterfaceGeometry g;
    auto segs = make_interface_segments(sp, d);
    if (segs.size() == 1 && segs[0].kind == SegmentKind::PeriodicSmooth) {
        const int N = sp.nodes.empty() ? 70 : sp.nodes[0];
        g.quad = build_smooth_quadrature(segs[0], N, d);
    } else {
        std::vector<int> npers = sp.nodes;
        if (npers.size() == 1) npers.assign(segs.size(), npers[0]);
        if (npers.size() != segs.size())
            throw ConfigError("interface node counts do not match segment count");
        g.quad = build_corner_quadrature(segs, npers, sp.grading_q, d);
    }
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (int k = 0; k <= 2048; ++k) {
        const double x = -0.5 * d + d * k / 2048.0;
        const double y = detail::spec_y_of_x(sp, d, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    g.y_min = ymin;
    g.y_max = ymax;
    g.wall_y = detail::spec_y_of_x(sp, d, -0.5 * d);
    return g;
}

inline UnitCellFrame build_frame(const LayerStack& stack,
                                 const std::vector<InterfaceGeometry>& ifaces,
                                 const NumericsParams& num) {
    UnitCellFrame f;
    f.d = stack.d;
    f.y_U = ifaces.front().y_max + num.clearance * stack.d;
    f.y_D = ifaces.back().y_min - num.clearance * stack.d;

    std::vector<double> gx, gw;
    gauss_legendre(num.Mw, gx, gw);
    const int I = int(ifaces.size());
    for (int i = 0; i <= I; ++i) {
        WallSegment wsg;
        wsg.y_hi = (i == 0) ? f.y_U : ifaces[i - 1].wall_y;
        wsg.y_lo = (i == I) ? f.y_D : ifaces[i].wall_y;
        if (!(wsg.y_hi > wsg.y_lo))
            throw GeometryError("layer " + std::to_string(i + 1) +
                                " has empty wall segment (interfaces cross at the wall?)");
        wsg.ys.resize(num.Mw);
        wsg.ws.resize(num.Mw);
        for (int m = 0; m < num.Mw; ++m) {
            wsg.ys[m] = 0.5 * (wsg.y_lo + wsg.y_hi) + 0.5 * (wsg.y_hi - wsg.y_lo) * gx[m];
            wsg.ws[m] = 0.5 * (wsg.y_hi - wsg.y_lo) * gw[m];
        }
        f.walls.push_back(std::move(wsg));
    }
    f.ud_x.resize(num.M);
    for (int m = 0; m < num.M; ++m) f.ud_x[m] = -0.5 * stack.d + stack.d * (m + 0.5) / num.M;
    return f;
}

inline StackGeometry build_geometry(const LayerStack& stack, const NumericsParams& num) {
    if (stack.n_layers() != stack.n_interfaces() + 1)
        throw ConfigError("stack needs exactly one more layer than interfaces");
    StackGeometry g;
    g.d = stack.d;
    for (const auto& sp : stack.interfaces)
        g.interfaces.push_back(build_interface_geometry(sp, stack.d));
    g.frame = build_frame(stack, g.interfaces, num);

    const int I = stack.n_interfaces();
    for (int i = 0; i <= I; ++i) {
        const double hi = (i == 0) ? g.frame.y_U : g.interfaces[i - 1].y_max;
        const double lo = (i == I) ? g.frame.y_D : g.interfaces[i].y_min;
        g.proxies.push_back(build_proxy_circle({0.0, 0.5 * (lo + hi)}, num.R, num.P));
    }
    return g;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Diagnostic {
    enum class Severity { Warning, Error };
    Severity severity = Severity::Warning;
    std::string message;
};

inline std::vector<Diagnostic> validate_geometry(const LayerStack& stack,
                                                 const NumericsParams& num) {
    std::vector<Diagnostic> out;
    const double d = stack.d;
    const int I = stack.n_interfaces();
    if (stack.n_layers() != I + 1) {
        out.push_back({Diagnostic::Severity::Error,
                       "layer count must be interface count + 1"});
        return out;
    }
    // pointwise separation of consecutive interfaces (covers +-1 translates
    // since profiles are d-periodic)
    for (int i = 0; i + 1 < I; ++i) {
        double min_gap = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 1024; ++k) {
            const double x = -0.5 * d + d * k / 1024.0;
            min_gap = std::min(min_gap, detail::spec_y_of_x(stack.interfaces[i], d, x) -
                                            detail::spec_y_of_x(stack.interfaces[i + 1], d, x));
        }
        if (min_gap <= 0.0)
            out.push_back({Diagnostic::Severity::Error,
                           "interfaces " + std::to_string(i + 1) + " and " +
                               std::to_string(i + 2) + " intersect or touch"});
        else if (min_gap < 0.02 * d)
            out.push_back({Diagnostic::Severity::Warning,
                           "layer " + std::to_string(i + 2) + " is very thin (gap " +
                               std::to_string(min_gap) + "); expect reduced accuracy"});
    }
    if (num.R < 1.5 * d || num.R > 2.0 * d)
        out.push_back({Diagnostic::Severity::Warning,
                       "proxy radius outside [3d/2, 2d]; proxy strengths may be "
                       "exponentially large"});
    // proxy containment of each layer's collocation targets
    auto yminmax = [&](int i) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int k = 0; k < 256; ++k) {
            const double y = detail::spec_y_of_x(stack.interfaces[i], d, -0.5 * d + d * k / 256.0);
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
        return std::pair<double, double>{lo, hi};
    };
    for (int i = 0; i <= I; ++i) {
        const double hi = (i == 0) ? yminmax(0).second + num.clearance * d
                                   : yminmax(i - 1).second;
        const double lo = (i == I) ? yminmax(I - 1).first - num.clearance * d
                                   : yminmax(i).first;
        const double reach = std::hypot(0.5 * d, 0.5 * (hi - lo));
        if (reach > 0.95 * num.R)
            out.push_back({Diagnostic::Severity::Warning,
                           "layer " + std::to_string(i + 1) +
                               " targets come within 5% of its proxy circle"});
    }
    // wall-crossing transversality
    for (int i = 0; i < I; ++i) {
        const auto& sp = stack.interfaces[i];
        const double y0 = detail::spec_y_of_x(sp, d, -0.5 * d);
        const double y1 = detail::spec_y_of_x(sp, d, -0.5 * d + 1e-6 * d);
        if (std::abs(y1 - y0) > 0.5 * 1e-6 * d * 50.0)
            out.push_back({Diagnostic::Severity::Warning,
                           "interface " + std::to_string(i + 1) +
                               " crosses the cell wall steeply; wall clipping may lose accuracy"});
    }
    return out;
}

} // namespace qpscat
