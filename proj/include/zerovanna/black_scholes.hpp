#pragma once

/**
 * @file black_scholes.hpp
 * @brief Zero-rate Black-Scholes analytics in log-price coordinates.
 *
 * Everything here is written in terms of the log-spot x, the log-strike k,
 * the volatility sigma and the time to maturity tau. The interest rate is zero,
 * so the call price is e^x N(d1) - e^k N(d2).
 */

#include <functional>

namespace zerovanna {

struct BsInputs {
    double log_spot = 0.0;
    double log_strike = 0.0;
    double vol = 0.0;
    double tau = 0.0;
};

struct IvQuery {
    double target_price = 0.0;
    double bracket_lo = 1e-6;
    double bracket_hi = 5.0;
    double tol = 1e-10;
    int max_iter = 200;
};

double norm_cdf(double x);
double norm_pdf(double x);

/// European call price. sigma*sqrt(tau) == 0 falls back to intrinsic value.
double bs_price(const BsInputs& in);

double d1(const BsInputs& in);
double d2(const BsInputs& in);

/// dBS/dsigma = e^x N'(d1) sqrt(tau).
double vega(const BsInputs& in);

/// G = (d2/dx2 - d/dx) BS = e^x N'(d1) / (sigma sqrt(tau)).
double g_operator(const BsInputs& in);

/// H = (d3/dx3 - d2/dx2) BS = G * (1 - d1 / (sigma sqrt(tau))).
double h_operator(const BsInputs& in);

/// Arbitrage bounds of a zero-rate call: [(e^x - e^k)+, e^x).
double call_lower_bound(double log_spot, double log_strike);
double call_upper_bound(double log_spot);

/**
 * Implied volatility by bisection on the bracket of @p query.
 *
 * The vol field of @p in is ignored. Throws NoSolutionError when the target is
 * outside the arbitrage bounds or not attained on the bracket, and
 * ConvergenceError (carrying the bracket midpoint) when max_iter is exhausted.
 */
double implied_vol(const IvQuery& query, const BsInputs& in);

using IvCurve = std::function<double(double log_strike)>;

struct ZeroVannaOptions {
    double tol = 1e-10;
    int max_iter = 100;
};

/**
 * Strike k with d2(k, I(k)) = 0.
 *
 * Runs the fixed point k <- x - I(k)^2 tau / 2 from k0 = x - I(x)^2 tau / 2.
 * If that fails to settle within max_iter, bisects the residual d2(k, I(k))
 * over [x - 2 I(x)^2 tau, x]. Throws ConvergenceError with the last residual
 * when neither route reaches |d2| < tol.
 */
double zero_vanna_strike(const IvCurve& iv_curve, double log_spot, double tau,
                         const ZeroVannaOptions& options = {});

}  // namespace zerovanna
