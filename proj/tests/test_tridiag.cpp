#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qpscat/planar.hpp"
#include "qpscat/postprocess.hpp"

using namespace qpscat;

namespace {

Mat well_conditioned(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g;
    Mat m = 4.0 * Mat::Identity(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) m(i, j) += 0.3 * cd(g(rng), g(rng));
    return m;
}

Vec random_vec(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g;
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = cd(g(rng), g(rng));
    return v;
}

PeriodizedSystem synthetic(int I, int n, bool coupled, unsigned seed) {
    PeriodizedSystem ps;
    ps.I = I;
    ps.P = 0;
    ps.K = 0;
    ps.N.assign(I, n / 2);
    for (int j = 0; j < I; ++j) ps.Ap_diag.push_back(well_conditioned(n, seed + j));
    for (int j = 0; j + 1 < I; ++j) {
        ps.Ap_super.push_back(coupled ? Mat(0.5 * well_conditioned(n, seed + 50 + j))
                                      : Mat(Mat::Zero(n, n)));
        ps.Ap_sub.push_back(coupled ? Mat(0.5 * well_conditioned(n, seed + 90 + j))
                                    : Mat(Mat::Zero(n, n)));
    }
    ps.f = random_vec(n, seed + 7);
    return ps;
}

} // namespace

TEST_CASE("single block reduces to one dense solve", "[tridiag]") {
    auto ps = synthetic(1, 12, false, 21);
    auto eta = block_lu_solve(ps);
    CHECK((ps.Ap_diag[0] * eta[0] - ps.f).norm() < 1e-12 * ps.f.norm());
}

TEST_CASE("decoupled blocks solve independently", "[tridiag]") {
    auto ps = synthetic(4, 10, false, 33);
    auto eta = block_lu_solve(ps);
    CHECK((ps.Ap_diag[0] * eta[0] - ps.f).norm() < 1e-12 * ps.f.norm());
    for (int j = 1; j < 4; ++j) CHECK(eta[j].norm() < 1e-14);
}

TEST_CASE("three coupled blocks match the dense tridiagonal solve", "[tridiag]") {
    auto ps = synthetic(3, 10, true, 44);
    auto eta = block_lu_solve(ps);
    Mat dense = Mat::Zero(30, 30);
    for (int j = 0; j < 3; ++j) dense.block(10 * j, 10 * j, 10, 10) = ps.Ap_diag[j];
    for (int j = 0; j < 2; ++j) {
        dense.block(10 * j, 10 * (j + 1), 10, 10) = ps.Ap_super[j];
        dense.block(10 * (j + 1), 10 * j, 10, 10) = ps.Ap_sub[j];
    }
    Vec rhs = Vec::Zero(30);
    rhs.head(10) = ps.f;
    Vec x = dense.partialPivLu().solve(rhs);
    for (int j = 0; j < 3; ++j)
        CHECK((eta[j] - x.segment(10 * j, 10)).norm() < 1e-12 * x.norm());
}

TEST_CASE("singular diagonal names the layer", "[tridiag]") {
    auto ps = synthetic(2, 8, false, 55);
    ps.Ap_diag[1].setZero();
    try {
        block_lu_solve(ps);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(e.layer == 2);
    }
}

// ---------------------------------------------------------------------------
// End-to-end physics on canonical cases
// ---------------------------------------------------------------------------

namespace {

struct Solved {
    LayerStack stack;
    StackGeometry geom;
    NumericsParams num;
    ScatteringProblem prob;
    Solution sol;
};

InterfaceSpec sine_spec(double amplitude, double phase, double offset, int N) {
    InterfaceSpec sp;
    sp.shape = InterfaceSpec::Shape::Sine;
    sp.amplitude = amplitude;
    sp.phase = phase;
    sp.offset = offset;
    sp.nodes = {N};
    return sp;
}

Solved solve_stack(std::vector<double> eps, std::vector<InterfaceSpec> ifaces, double omega,
                   double theta, NumericsParams num, int K = 0) {
    Solved s;
    s.stack.d = 1.0;
    for (double e : eps) s.stack.materials.push_back({e, 1.0});
    s.stack.interfaces = std::move(ifaces);
    s.num = num;
    s.geom = build_geometry(s.stack, s.num);
    s.prob = make_problem(s.stack, s.geom, omega, theta, K);
    auto cache = precompute_shift_blocks(s.prob, s.num);
    auto sys = assemble_system(s.prob, cache, s.num);
    s.sol = solve_periodized(sys);
    s.sol.flux_error = flux_error(s.sol, s.prob);
    return s;
}

NumericsParams default_num() {
    NumericsParams num;
    num.P = 64;
    num.Mw = 48;
    num.M = 36;
    num.R = 2.0;
    num.clearance = 0.4;
    return num;
}

} // namespace

TEST_CASE("no-contrast stack transmits the plane wave exactly", "[tridiag][endtoend]") {
    auto s = solve_stack({1.44, 1.44, 1.44},
                         {sine_spec(0.1, 0.3, 0.0, 44), sine_spec(0.08, 1.1, -0.8, 44)}, 3.0,
                         -pi / 2.5, default_num());
    CHECK(std::abs(s.sol.flux_error) < 1e-12);
    // recover_aux on zero densities gives zero amplitudes
    {
        auto zero_eta = s.sol.eta;
        for (auto& e : zero_eta) e.setZero();
        // re-run recovery through the periodized system
        auto cache = precompute_shift_blocks(s.prob, s.num);
        auto sys = assemble_system(s.prob, cache, s.num);
        auto ps = schur_complement(sys);
        Solution z;
        recover_aux(ps, zero_eta, z);
        CHECK(z.aU.norm() == 0.0);
        CHECK(z.aD.norm() == 0.0);
        for (const auto& c : z.c) CHECK(c.norm() == 0.0);
    }
    // reflected orders vanish; transmitted zeroth order carries unit flux
    CHECK(s.sol.aU.cwiseAbs().maxCoeff() < 1e-9);
    const cd aD0 = s.sol.aD(s.prob.K);
    CHECK(std::abs(std::abs(aD0) - 1.0) < 1e-9);
    // phase matches the continued incident wave at y_D
    const cd expect = std::exp(-iu * s.prob.kD(0) * s.geom.frame.y_D);
    CHECK(std::abs(aD0 - expect) < 1e-8);
    // all other transmitted orders vanish
    for (int n = -s.prob.K; n <= s.prob.K; ++n)
        if (n != 0) CHECK(std::abs(s.sol.aD(n + s.prob.K)) < 1e-9);
}

TEST_CASE("flat interface reproduces Fresnel amplitudes", "[tridiag][endtoend]") {
    const double omega = 5.0, theta = -pi / 3;
    auto s = solve_stack({1.0, 2.0}, {sine_spec(0.0, 0.0, 0.0, 44)}, omega, theta, default_num());
    CHECK(std::abs(s.sol.flux_error) < 1e-10);

    PlanarStack fl;
    fl.heights = {0.0};
    fl.wavenumbers = {s.prob.k[0], s.prob.k[1]};
    auto ref = planar_solve(fl, omega, theta, s.geom.frame.y_U, s.geom.frame.y_D);
    REQUIRE(!ref.degenerate);
    CHECK(std::abs(std::abs(ref.r) - 0.2087) < 2e-4);
    CHECK(std::abs(std::abs(ref.t) - 0.7913) < 2e-4);

    const cd aU0 = s.sol.aU(s.prob.K), aD0 = s.sol.aD(s.prob.K);
    CAPTURE(aU0, aD0, ref.r, ref.t);
    CHECK(std::abs(aU0 - ref.r) < 1e-8);
    CHECK(std::abs(aD0 - ref.t) < 1e-8);
    // flux identity k^U_0 |r|^2 + k^D_0 |t|^2 = k^U_0
    const double b1 = s.prob.kU(0).real(), b2 = s.prob.kD(0).real();
    CHECK(std::abs(b1 * std::norm(ref.r) + b2 * std::norm(ref.t) - b1) < 1e-12 * b1);
    // nonzero orders are numerically absent for a flat interface
    for (int n = -s.prob.K; n <= s.prob.K; ++n)
        if (n != 0) {
            CHECK(std::abs(s.sol.aU(n + s.prob.K)) < 1e-9);
            CHECK(std::abs(s.sol.aD(n + s.prob.K)) < 1e-9);
        }
}
