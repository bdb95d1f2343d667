#pragma once

/**
 * @file mc_pricer.hpp
 * @brief Monte Carlo call prices and swap strikes under the rough volatility model.
 *
 * Two estimators are provided. The conditional (mixing) estimator integrates the
 * spot's independent Brownian factor out analytically: given the volatility path,
 * X_T is Gaussian with mean x0 - Y/2 + rho int sigma dW and variance (1 - rho^2) Y,
 * so each path contributes a Black-Scholes price at a shifted spot and reduced vol.
 * The direct estimator simulates X_T by a left-point Euler step and can use the
 * terminal spot as a control variate.
 */

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "zerovanna/fbm.hpp"
#include "zerovanna/vol_model.hpp"

namespace zerovanna {

enum class Scheme { convolution, cholesky_oracle };
enum class Estimator { conditional_mixing, direct_euler };
enum class ControlVariate { none, bs_terminal };

struct McConfig {
    std::size_t n_paths = 200'000;
    std::uint64_t seed = 20240101;
    Scheme scheme = Scheme::convolution;
    Estimator estimator = Estimator::conditional_mixing;
    ControlVariate control_variate = ControlVariate::bs_terminal;
    KernelRule kernel = KernelRule::cell_exact;
    std::size_t block_size = 1024;
    unsigned n_threads = 1;

    void validate() const;
};

struct PriceEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
};

/**
 * Simulates n_paths volatility paths on @p grid and returns functionals truncated
 * at each step count in @p horizons. With the direct estimator the terminal log-spot
 * is filled as well, starting from @p x0. Output is independent of config.n_threads.
 */
std::vector<PathFunctionals> simulate_functionals(const ModelParams& params, const TimeGrid& grid,
                                                  std::span<const std::size_t> horizons, const McConfig& config,
                                                  double x0 = 0.0);

PathFunctionals simulate_functionals(const ModelParams& params, const TimeGrid& grid, const McConfig& config,
                                     double x0 = 0.0);

/**
 * Left-point Euler log-spot at each horizon for the paths of one block:
 * X += -sigma^2 dt / 2 + sigma (rho dW + sqrt(1 - rho^2) dB), with dB from stream (seed, block).
 * Returns a horizons x n_rows array flattened row-major.
 */
std::vector<double> euler_log_spot(const Matrix& vols, const GaussianPathBatch& batch, const ModelParams& params,
                                   const TimeGrid& grid, double x0, std::uint64_t seed, std::size_t block,
                                   std::span<const std::size_t> horizons);

PriceEstimate call_price_conditional(const PathFunctionals& funcs, const ModelParams& params, double x0,
                                     double log_strike, double maturity);

/// Direct estimator on precomputed terminal log-spots.
PriceEstimate call_price_direct(const PathFunctionals& funcs, double x0, double log_strike,
                                ControlVariate control_variate);

/// Direct estimator from a path batch: draws B per block of config.block_size rows, then prices.
PriceEstimate call_price_direct(const GaussianPathBatch& batch, const Matrix& vols, const ModelParams& params,
                                double x0, double log_strike, const TimeGrid& grid, const McConfig& config);

/// Mean of sqrt(Y / T).
PriceEstimate vol_swap_strike(const PathFunctionals& funcs, double maturity);

/// Mean of Y / T.
PriceEstimate variance_swap_strike(const PathFunctionals& funcs, double maturity);

}  // namespace zerovanna
