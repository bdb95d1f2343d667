#pragma once

/**
 * @file swap_analysis.hpp
 * @brief Implied-volatility observables of a Monte Carlo pricer and their
 *        distance to the volatility-swap strike.
 */

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zerovanna/black_scholes.hpp"
#include "zerovanna/mc_pricer.hpp"
#include "zerovanna/vol_model.hpp"

namespace zerovanna {

/// Call price (with standard error) as a function of the log-strike.
using StrikePricer = std::function<PriceEstimate(double log_strike)>;

struct IvPoint {
    double log_strike = 0.0;
    double vol = 0.0;
    double std_error = 0.0;  // price SE divided by vega
    bool ok = false;
    std::string error;
};

/// Implied vol at one strike; throws on inversion failure.
IvPoint implied_vol_point(const StrikePricer& pricer, double x0, double maturity, double log_strike,
                          const IvQuery& query = {});

/// Implied vols at each strike. Failures are recorded per point and do not abort the curve.
std::vector<IvPoint> iv_curve(const StrikePricer& pricer, double x0, double maturity,
                              std::span<const double> log_strikes, const IvQuery& query = {});

struct SkewEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double bump = 0.0;
    bool richardson = false;
};

/// 0.05 * sigma0 * sqrt(T).
double default_skew_bump(double sigma0, double maturity);

/**
 * Central difference (I(x0 + h) - I(x0 - h)) / (2h). When its standard error exceeds
 * its magnitude, the estimate is replaced by the Richardson combination
 * (4 D(2h) - D(4h)) / 3 of two wider differences.
 */
SkewEstimate atm_skew(const std::function<IvPoint(double)>& curve, double x0, double bump);

struct SwapReport {
    double hurst = 0.0;
    double maturity = 0.0;
    double rho = 0.0;
    double vol_swap = 0.0;
    double vol_swap_se = 0.0;
    double k_hat = 0.0;
    double iv_zero_vanna = 0.0;
    double iv_zero_vanna_se = 0.0;
    double atmi = 0.0;
    double atmi_se = 0.0;
    double atm_skew = 0.0;
    double atm_skew_se = 0.0;
    double err_zero_vanna = 0.0;
    double err_zero_vanna_se = 0.0;
    double err_atmi = 0.0;
    double err_atmi_se = 0.0;
    double d2_residual = 0.0;
    /// User-supplied approximation of the swap strike, reported alongside.
    std::optional<double> comparator;
};

struct ReportOptions {
    IvQuery iv_query{.tol = 1e-12};
    ZeroVannaOptions zero_vanna{};
    /// Defaults to default_skew_bump(sigma0, T) when unset.
    std::optional<double> skew_bump;
    std::function<double(const ModelParams&, double maturity)> comparator;
};

SwapReport zero_vanna_report(const StrikePricer& pricer, const PriceEstimate& vol_swap, const ModelParams& params,
                             double x0, double maturity, const ReportOptions& options = {});

/// Pricer over precomputed functionals for the estimator chosen in @p config.
StrikePricer make_pricer(const PathFunctionals& funcs, const ModelParams& params, double x0, double maturity,
                         const McConfig& config);

/**
 * Simulates and reports one cell: maturity @p maturity, round(steps_per_year * T) steps.
 */
SwapReport zero_vanna_report(const ModelParams& params, double x0, double maturity, const McConfig& config,
                             std::size_t steps_per_year, const ReportOptions& options = {});

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<double> maturities_used;
    std::size_t n_candidates = 0;
    bool inconclusive = true;
};

/**
 * Least squares of log|err| on log T over the points with
 * |err| > noise_multiple * se + absolute_floor. The floor sits above the implied-vol
 * solver resolution. Fewer than min_points survivors gives an inconclusive fit.
 */
inline constexpr double kErrorFloor = 1e-9;

RateFit fit_convergence_rate(std::span<const double> maturities, std::span<const double> errors,
                             std::span<const double> std_errors, double noise_multiple = 3.0,
                             std::size_t min_points = 3, double absolute_floor = kErrorFloor);

struct ConvergenceStudy {
    std::vector<SwapReport> reports;
    RateFit zero_vanna;
    RateFit atmi;
};

ConvergenceStudy convergence_study(std::vector<SwapReport> reports, double noise_multiple = 3.0);

/// Simulates one report per maturity (sharing paths where the grid allows) and fits both error series.
ConvergenceStudy convergence_study(const ModelParams& params, double x0, std::span<const double> maturities,
                                   const McConfig& config, std::size_t steps_per_year,
                                   const ReportOptions& options = {});

/**
 * Functionals for every maturity, one entry per input maturity. When each
 * steps_per_year * T is an integer the maturities share one grid out to max(T);
 * otherwise each maturity gets its own grid of max(1, round(steps_per_year * T)) steps.
 */
std::vector<PathFunctionals> simulate_maturities(const ModelParams& params, std::span<const double> maturities,
                                                 std::size_t steps_per_year, const McConfig& config, double x0);

}  // namespace zerovanna
