#pragma once
#include <cmath>
#include <limits>
#include <string>
#include <tvcox/error.hpp>

namespace tvcox {
namespace stats {

namespace detail {

// P(a, x) by its power series; converges quickly for x < a + 1.
inline double gamma_p_series(double a, double x)
{
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by the modified Lentz continued fraction; for x >= a + 1.
inline double gamma_q_continued_fraction(double a, double x)
{
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace detail

/// Regularized upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x)
{
    if (!(a > 0.0)) throw Error(ErrorCode::domain, "gamma_q: shape must be positive");
    if (!(x >= 0.0)) throw Error(ErrorCode::domain, "gamma_q: argument must be non-negative");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_continued_fraction(a, x);
}

/// Upper tail P(chi^2_df > x).
inline double chi_square_upper_tail(double x, int df)
{
    if (df < 1) throw Error(ErrorCode::domain, "chi-square degrees of freedom must be >= 1");
    if (!(x >= 0.0)) throw Error(ErrorCode::domain, "chi-square statistic must be non-negative");
    return std::clamp(gamma_q(0.5 * df, 0.5 * x), 0.0, 1.0);
}

} // namespace stats
} // namespace tvcox
