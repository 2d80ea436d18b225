#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qpscat/alpert.hpp"
#include "oracles.hpp"

using namespace qpscat;

TEST_CASE("auxiliary weights sum to a - 1/2", "[alpert]") {
    double s = 0.0;
    for (double w : AlpertLog16::weights) s += w;
    CHECK(std::abs(s - (AlpertLog16::a - 0.5)) < 1e-14);
}

// The correction applied to  int_0^1 f  with f = phi ln + psi vanishing to
// high order at the regular endpoint. Reference from tanh-sinh quadrature.
TEST_CASE("log rule converges at high order", "[alpert]") {
    auto f = [](double x) {
        const double win = std::pow(1.0 - x, 12);
        return (std::log(x) * std::cos(45.0 * x) + std::sin(40.0 * x + 1.0)) * win;
    };
    const double exact = oracles::tanh_sinh(f, 0.0, 1.0, 1e-15);

    std::vector<double> ns = {12, 16, 24, 32};
    std::vector<double> errs;
    for (double nd : ns) {
        const int n = int(nd);
        const double h = 1.0 / n;
        double s = 0.0;
        for (int k = 0; k < AlpertLog16::n_aux; ++k)
            s += AlpertLog16::weights[k] * f(AlpertLog16::nodes[k] * h);
        for (int i = AlpertLog16::a; i <= n; ++i) s += f(i * h);
        errs.push_back(std::abs(h * s - exact) + 1e-17);
    }
    CAPTURE(errs[0], errs[1], errs[2], errs[3]);
    CHECK(errs.back() < 1e-10);
    CHECK(oracles::fitted_order(ns, errs) > 12.0);
}

TEST_CASE("lagrange weights reproduce polynomials", "[alpert]") {
    const double xi = 3.37;
    const int t0 = alpert_stencil_start(xi);
    const auto w = lagrange_weights(xi, t0);
    for (int deg = 0; deg <= alpert_interp_order - 1; deg += 5) {
        double s = 0.0;
        for (int r = 0; r < alpert_interp_order; ++r)
            s += w[r] * std::pow(double(t0 + r) * 0.1, deg);
        CHECK(std::abs(s - std::pow(xi * 0.1, deg)) < 1e-10 * std::max(1.0, std::abs(std::pow(xi * 0.1, deg))));
    }
    // partition of unity
    double s1 = 0.0;
    for (double v : w) s1 += v;
    CHECK(std::abs(s1 - 1.0) < 1e-12);
}
