#include "zerovanna/black_scholes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "zerovanna/errors.hpp"

namespace zerovanna {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kInvSqrt2 = 0.70710678118654752440;

void require_finite(const BsInputs& in) {
    if (!std::isfinite(in.log_spot) || !std::isfinite(in.log_strike) || !std::isfinite(in.vol) ||
        !std::isfinite(in.tau)) {
        throw DomainError("Black-Scholes inputs must be finite");
    }
    if (in.tau < 0.0) throw DomainError("time to maturity must be non-negative");
    if (in.vol < 0.0) throw DomainError("volatility must be non-negative");
}

double total_vol(const BsInputs& in) {
    require_finite(in);
    const double s = in.vol * std::sqrt(in.tau);
    if (!(s > 0.0)) throw DomainError("d1/d2 undefined for sigma*sqrt(tau) = 0");
    return s;
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double call_lower_bound(double log_spot, double log_strike) {
    return std::max(std::exp(log_spot) - std::exp(log_strike), 0.0);
}

double call_upper_bound(double log_spot) { return std::exp(log_spot); }

double bs_price(const BsInputs& in) {
    require_finite(in);
    const double s = in.vol * std::sqrt(in.tau);
    if (s == 0.0) return call_lower_bound(in.log_spot, in.log_strike);
    const double m = in.log_spot - in.log_strike;
    const double d_1 = m / s + 0.5 * s;
    const double d_2 = d_1 - s;
    const double price = std::exp(in.log_spot) * norm_cdf(d_1) - std::exp(in.log_strike) * norm_cdf(d_2);
    return std::max(price, call_lower_bound(in.log_spot, in.log_strike));
}

double d1(const BsInputs& in) {
    const double s = total_vol(in);
    return (in.log_spot - in.log_strike) / s + 0.5 * s;
}

double d2(const BsInputs& in) {
    const double s = total_vol(in);
    return (in.log_spot - in.log_strike) / s - 0.5 * s;
}

double vega(const BsInputs& in) {
    return std::exp(in.log_spot) * norm_pdf(d1(in)) * std::sqrt(in.tau);
}

double g_operator(const BsInputs& in) {
    const double s = total_vol(in);
    return std::exp(in.log_spot) * norm_pdf(d1(in)) / s;
}

double h_operator(const BsInputs& in) {
    const double s = total_vol(in);
    return g_operator(in) * (1.0 - d1(in) / s);
}

double implied_vol(const IvQuery& query, const BsInputs& in) {
    if (!std::isfinite(query.target_price)) throw DomainError("implied_vol: target price must be finite");
    if (!(query.bracket_lo < query.bracket_hi) || query.bracket_lo < 0.0) {
        throw DomainError("implied_vol: invalid bracket");
    }
    if (!(query.tol > 0.0) || query.max_iter < 1) throw DomainError("implied_vol: invalid tolerance");
    if (!(in.tau > 0.0)) throw DomainError("implied_vol: tau must be positive");

    const double lower = call_lower_bound(in.log_spot, in.log_strike);
    const double upper = call_upper_bound(in.log_spot);
    if (!(query.target_price > lower && query.target_price < upper)) {
        throw NoSolutionError("implied_vol: target " + std::to_string(query.target_price) +
                              " outside arbitrage bounds (" + std::to_string(lower) + ", " +
                              std::to_string(upper) + ")");
    }

    BsInputs probe = in;
    auto price_at = [&](double vol) {
        probe.vol = vol;
        return bs_price(probe);
    };

    double lo = query.bracket_lo;
    double hi = query.bracket_hi;
    if (price_at(lo) > query.target_price || price_at(hi) < query.target_price) {
        throw NoSolutionError("implied_vol: target not attained on the volatility bracket");
    }

    for (int iter = 0; iter < query.max_iter; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo < query.tol) return mid;
        if (price_at(mid) < query.target_price) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double mid = 0.5 * (lo + hi);
    if (hi - lo < query.tol) return mid;
    throw ConvergenceError("implied_vol: bisection did not reach tolerance", mid, hi - lo);
}

namespace {

double d2_residual(const IvCurve& iv_curve, double log_spot, double tau, double k) {
    const double vol = iv_curve(k);
    return d2(BsInputs{log_spot, k, vol, tau});
}

}  // namespace

double zero_vanna_strike(const IvCurve& iv_curve, double log_spot, double tau,
                         const ZeroVannaOptions& options) {
    if (!(tau > 0.0) || !std::isfinite(log_spot)) throw DomainError("zero_vanna_strike: tau must be positive");

    const double atm_vol = iv_curve(log_spot);
    if (!(atm_vol > 0.0) || !std::isfinite(atm_vol)) {
        throw DomainError("zero_vanna_strike: curve must be positive at the money");
    }

    double k = log_spot - 0.5 * atm_vol * atm_vol * tau;
    double residual = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < options.max_iter; ++iter) {
        const double vol = iv_curve(k);
        residual = d2(BsInputs{log_spot, k, vol, tau});
        if (std::abs(residual) < options.tol) return k;
        const double next = log_spot - 0.5 * vol * vol * tau;
        if (!std::isfinite(next)) break;
        k = next;
    }

    // Fixed point did not settle: bisect d2(k, I(k)), which is negative at k = x.
    double lo = log_spot - 2.0 * atm_vol * atm_vol * tau;
    double hi = log_spot;
    double r_lo = d2_residual(iv_curve, log_spot, tau, lo);
    const double r_hi = d2_residual(iv_curve, log_spot, tau, hi);
    if (!(r_lo > 0.0 && r_hi < 0.0)) {
        throw ConvergenceError("zero_vanna_strike: fixed point failed and residual has no sign change", k,
                               residual);
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double r_mid = d2_residual(iv_curve, log_spot, tau, mid);
        if (std::abs(r_mid) < options.tol) return mid;
        if ((r_mid > 0.0) == (r_lo > 0.0)) {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
        }
        k = mid;
        residual = r_mid;
    }
    throw ConvergenceError("zero_vanna_strike: bisection fallback did not converge", k, residual);
}

}  // namespace zerovanna
