#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include "qpscat/types.hpp"

namespace qpscat {

/// H0^(1)(x) and H1^(1)(x) for one real argument.
struct HankelPair {
    cd h0, h1;
};

namespace detail {

inline std::atomic<std::uint64_t>& hankel_counter() {
    static std::atomic<std::uint64_t> c{0};
    return c;
}

inline bool disable_gsl_abort() {
    gsl_set_error_handler_off();
    return true;
}

inline const bool gsl_handler_off = disable_gsl_abort();

} // namespace detail

/// Number of Hankel-pair evaluations since the last reset. Used by the
/// angle-sweep tests to prove the shift-block cache is hit.
inline std::uint64_t hankel_eval_count() {
    return detail::hankel_counter().load(std::memory_order_relaxed);
}

inline void reset_hankel_eval_count() {
    detail::hankel_counter().store(0, std::memory_order_relaxed);
}

/// Hankel functions of the first kind, orders 0 and 1, for x > 0.
///
/// Backed by the GSL Bessel evaluators (J0, J1, Y0, Y1), which are accurate
/// to a few ulp over the full range used by the kernels. Diverges like
/// log(x) (h0) and 1/x (h1) as x -> 0+ without overflow down to x ~ 1e-300.
inline HankelPair hankel01(double x) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw std::domain_error("hankel01: argument must be finite and > 0");
    (void)detail::gsl_handler_off;
    gsl_sf_result j0r, j1r, y0r, y1r;
    int s = 0;
    s |= gsl_sf_bessel_J0_e(x, &j0r);
    s |= gsl_sf_bessel_J1_e(x, &j1r);
    s |= gsl_sf_bessel_Y0_e(x, &y0r);
    s |= gsl_sf_bessel_Y1_e(x, &y1r);
    if (s != 0)
        throw std::domain_error("hankel01: GSL evaluation failed at x = " + std::to_string(x));
    detail::hankel_counter().fetch_add(1, std::memory_order_relaxed);
    return {cd{j0r.val, y0r.val}, cd{j1r.val, y1r.val}};
}

/// Batch evaluation; kernel assembly is dominated by these calls.
inline void hankel01(std::span<const double> x, std::span<HankelPair> out) {
    if (x.size() != out.size())
        throw std::invalid_argument("hankel01 batch: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = hankel01(x[i]);
}

} // namespace qpscat
